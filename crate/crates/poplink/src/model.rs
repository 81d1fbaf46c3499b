//! Domain types shared by all pipeline stages: certificate and role
//! vocabulary, validity predicates (role pairs, temporal windows), link
//! cardinalities and life segments.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four certificate kinds. The variant order defines the canonical
/// ordering used when a certificate pair must be written in a fixed
/// direction (e.g. birth before death in a birth–death link).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertType {
    Birth,
    Death,
    Marriage,
    Census,
}

impl CertType {
    pub const ALL: [CertType; 4] = [
        CertType::Birth,
        CertType::Death,
        CertType::Marriage,
        CertType::Census,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CertType::Birth => "birth",
            CertType::Death => "death",
            CertType::Marriage => "marriage",
            CertType::Census => "census",
        }
    }

    pub fn parse(s: &str) -> Result<CertType> {
        match s.to_ascii_lowercase().as_str() {
            "birth" => Ok(CertType::Birth),
            "death" => Ok(CertType::Death),
            "marriage" => Ok(CertType::Marriage),
            "census" => Ok(CertType::Census),
            other => Err(Error::Config(format!("unknown certificate type `{other}`"))),
        }
    }
}

impl fmt::Display for CertType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Compact index of a role in the [`RoleVocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoleId(pub u16);

/// One role definition: a short name unique within its certificate type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleDef {
    pub name: String,
    pub cert_type: CertType,
}

/// The configured role vocabulary. Roles are interned to [`RoleId`]s; the
/// vocabulary is loaded from configuration, never hard-coded per data set.
#[derive(Debug, Clone, Default)]
pub struct RoleVocabulary {
    defs: Vec<RoleDef>,
    by_key: HashMap<(CertType, String), RoleId>,
}

impl RoleVocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a role; returns its id. Re-registering the same
    /// (certificate type, name) pair is an error.
    pub fn add(&mut self, cert_type: CertType, name: &str) -> Result<RoleId> {
        let key = (cert_type, name.to_string());
        if self.by_key.contains_key(&key) {
            return Err(Error::Config(format!(
                "role `{name}` declared twice for certificate type `{cert_type}`"
            )));
        }
        let id = RoleId(u16::try_from(self.defs.len()).expect("role vocabulary overflow"));
        self.defs.push(RoleDef {
            name: name.to_string(),
            cert_type,
        });
        self.by_key.insert(key, id);
        Ok(id)
    }

    pub fn lookup(&self, cert_type: CertType, name: &str) -> Option<RoleId> {
        self.by_key.get(&(cert_type, name.to_string())).copied()
    }

    /// All roles with the given name, across certificate types. Used when
    /// config references a role by bare name (e.g. in blocking key role
    /// sets).
    pub fn by_name(&self, name: &str) -> Vec<RoleId> {
        self.defs
            .iter()
            .enumerate()
            .filter(|(_, d)| d.name == name)
            .map(|(i, _)| RoleId(i as u16))
            .collect()
    }

    pub fn def(&self, id: RoleId) -> &RoleDef {
        &self.defs[id.0 as usize]
    }

    pub fn name(&self, id: RoleId) -> &str {
        &self.defs[id.0 as usize].name
    }

    pub fn cert_type(&self, id: RoleId) -> CertType {
        self.defs[id.0 as usize].cert_type
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (RoleId, &RoleDef)> {
        self.defs
            .iter()
            .enumerate()
            .map(|(i, d)| (RoleId(i as u16), d))
    }
}

/// The set P of valid role pairs: two records may belong to the same person
/// only if their role pair is listed here (in either orientation).
#[derive(Debug, Clone, Default)]
pub struct RolePairSet {
    pairs: HashSet<(RoleId, RoleId)>,
}

impl RolePairSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: RoleId, b: RoleId) {
        self.pairs.insert((a, b));
    }

    /// True iff (a,b) or (b,a) is listed.
    pub fn contains(&self, a: RoleId, b: RoleId) -> bool {
        self.pairs.contains(&(a, b)) || self.pairs.contains(&(b, a))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// True iff the role pair is valid in either orientation. Unknown roles
/// simply fail the membership test.
pub fn is_valid_role_pair(a: RoleId, b: RoleId, p: &RolePairSet) -> bool {
    p.contains(a, b)
}

/// Allowed interval (in years) for an event-year difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearWindow {
    pub min_diff: i32,
    pub max_diff: i32,
}

impl YearWindow {
    pub fn new(min_diff: i32, max_diff: i32) -> Result<Self> {
        if min_diff > max_diff {
            return Err(Error::Config(format!(
                "temporal window has min {min_diff} > max {max_diff}"
            )));
        }
        Ok(Self { min_diff, max_diff })
    }

    pub fn contains(&self, diff: i32) -> bool {
        self.min_diff <= diff && diff <= self.max_diff
    }
}

/// Temporal constraints: per role pair, the allowed difference
/// `year(second role's certificate) − year(first role's certificate)`;
/// plus per linkage type, an allowed certificate-level year difference.
/// Pairs absent from the table are unconstrained.
#[derive(Debug, Clone, Default)]
pub struct TemporalConstraintTable {
    role_windows: HashMap<(RoleId, RoleId), YearWindow>,
    cert_windows: HashMap<String, YearWindow>,
}

impl TemporalConstraintTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Constrain `year(b's certificate) − year(a's certificate)` to `w`.
    pub fn set_role_window(&mut self, a: RoleId, b: RoleId, w: YearWindow) {
        self.role_windows.insert((a, b), w);
    }

    pub fn set_cert_window(&mut self, linkage_type: &str, w: YearWindow) {
        self.cert_windows.insert(linkage_type.to_string(), w);
    }

    pub fn role_window(&self, a: RoleId, b: RoleId) -> Option<&YearWindow> {
        self.role_windows.get(&(a, b))
    }

    pub fn cert_window(&self, linkage_type: &str) -> Option<&YearWindow> {
        self.cert_windows.get(linkage_type)
    }

    pub fn role_window_count(&self) -> usize {
        self.role_windows.len()
    }
}

/// Eq.-1 temporal check for a pair of records with their certificates'
/// event years.
///
/// The table stores oriented entries: `(from, to) → window` constrains
/// `year(to) − year(from)`. The check passes if either orientation's entry
/// admits the corresponding difference, which makes the predicate symmetric
/// under argument swap; a pair with no entry in either orientation is
/// unconstrained and passes.
pub fn temporal_check(
    role1: RoleId,
    year1: i32,
    role2: RoleId,
    year2: i32,
    t: &TemporalConstraintTable,
) -> bool {
    let forward = t.role_window(role1, role2);
    let backward = if role1 == role2 {
        forward
    } else {
        t.role_window(role2, role1)
    };
    match (forward, backward) {
        (None, None) => true,
        (f, b) => {
            f.is_some_and(|w| w.contains(year2 - year1))
                || b.is_some_and(|w| w.contains(year1 - year2))
        }
    }
}

/// Cardinality rule for one certificate linkage type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cardinality {
    OneToOne,
    OneToMany,
    ManyToOne,
    ManyToMany,
}

impl Cardinality {
    pub fn parse(s: &str) -> Result<Cardinality> {
        match s {
            "one_to_one" | "1-1" => Ok(Cardinality::OneToOne),
            "one_to_many" | "1-m" => Ok(Cardinality::OneToMany),
            "many_to_one" | "m-1" => Ok(Cardinality::ManyToOne),
            "many_to_many" | "m-m" => Ok(Cardinality::ManyToMany),
            other => Err(Error::Config(format!("unknown cardinality `{other}`"))),
        }
    }
}

/// Per-linkage-type cardinality rules; linkage types absent from the table
/// default to [`Cardinality::ManyToMany`] (no restriction).
#[derive(Debug, Clone, Default)]
pub struct LinkConstraintTable {
    entries: HashMap<String, Cardinality>,
}

impl LinkConstraintTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, linkage_type: &str, c: Cardinality) {
        self.entries.insert(linkage_type.to_string(), c);
    }

    pub fn get(&self, linkage_type: &str) -> Cardinality {
        self.entries
            .get(linkage_type)
            .copied()
            .unwrap_or(Cardinality::ManyToMany)
    }

    /// Strict lookup without the many-to-many default, for callers that
    /// must reject linkage types the configuration does not know.
    pub fn lookup(&self, linkage_type: &str) -> Option<Cardinality> {
        self.entries.get(linkage_type).copied()
    }
}

/// Index of a record in the record store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordId(pub u32);

/// Index of a certificate in the record store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CertId(pub u32);

/// One person's appearance on one certificate.
///
/// Attribute values are cleaned strings; absent attributes are simply not
/// present in the map (missing values are first-class). `entity` carries
/// the gold entity id on synthetic data and is never consulted by the
/// linker itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndividualRecord {
    pub id: String,
    pub certificate: CertId,
    pub role: RoleId,
    pub attributes: std::collections::BTreeMap<String, String>,
    pub entity: Option<String>,
}

impl IndividualRecord {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }
}

/// A typed event document with an event year and member records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub id: String,
    pub cert_type: CertType,
    pub event_year: i32,
    pub members: Vec<RecordId>,
}

/// One member of a life segment, carrying everything the segment
/// invariants need: the record, its role, and its certificate's identity
/// and event year.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMember {
    pub record: RecordId,
    pub record_id: String,
    pub certificate: CertId,
    pub certificate_id: String,
    pub role: RoleId,
    pub event_year: i32,
}

/// Stable sort by event year, ties broken by certificate id then record id
/// ascending, so segment output is deterministic.
pub fn order_by_event_year(mut members: Vec<SegmentMember>) -> Vec<SegmentMember> {
    members.sort_by(|a, b| {
        a.event_year
            .cmp(&b.event_year)
            .then_with(|| a.certificate_id.cmp(&b.certificate_id))
            .then_with(|| a.record_id.cmp(&b.record_id))
    });
    members
}

/// An event-year-ordered sequence of records reconstructed as one person.
///
/// The constructor enforces the segment invariants: members sorted by event
/// year, every pair of member roles valid, no two members from the same
/// certificate, and every pair of members within its temporal window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LifeSegment {
    members: Vec<SegmentMember>,
}

impl LifeSegment {
    pub fn new(
        members: Vec<SegmentMember>,
        pairs: &RolePairSet,
        temporal: &TemporalConstraintTable,
    ) -> Result<Self> {
        let members = order_by_event_year(members);
        if members.is_empty() {
            return Err(Error::Integrity("empty life segment".into()));
        }
        if let Some((a, b)) = first_violation(&members, pairs, temporal) {
            return Err(Error::Integrity(format!(
                "life segment invariant violated between records `{}` and `{}`",
                members[a].record_id, members[b].record_id
            )));
        }
        Ok(Self { members })
    }

    /// A single record is always a valid segment.
    pub fn singleton(member: SegmentMember) -> Self {
        Self {
            members: vec![member],
        }
    }

    pub fn members(&self) -> &[SegmentMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// First pair of member indexes violating a segment invariant (certificate
/// disjointness, role-pair validity, or a temporal window), if any.
/// Segments are small (a handful of certificates per person), so the
/// quadratic scan is fine.
pub fn first_violation(
    members: &[SegmentMember],
    pairs: &RolePairSet,
    temporal: &TemporalConstraintTable,
) -> Option<(usize, usize)> {
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            let (a, b) = (&members[i], &members[j]);
            if a.certificate == b.certificate
                || !is_valid_role_pair(a.role, b.role, pairs)
                || !temporal_check(a.role, a.event_year, b.role, b.event_year, temporal)
            {
                return Some((i, j));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> (RoleVocabulary, RoleId, RoleId, RoleId, RoleId) {
        let mut v = RoleVocabulary::new();
        let baby = v.add(CertType::Birth, "Baby").unwrap();
        let deceased = v.add(CertType::Death, "Deceased").unwrap();
        let bride = v.add(CertType::Marriage, "Bride").unwrap();
        let bride_mother = v.add(CertType::Marriage, "BrideMother").unwrap();
        (v, baby, deceased, bride, bride_mother)
    }

    #[test]
    fn role_pair_membership_is_symmetric() {
        let (_, baby, deceased, bride, _) = vocab();
        let mut p = RolePairSet::new();
        p.insert(baby, bride);
        assert!(is_valid_role_pair(baby, bride, &p));
        assert!(is_valid_role_pair(bride, baby, &p));
        assert!(!is_valid_role_pair(baby, deceased, &p));
        assert!(!is_valid_role_pair(baby, baby, &RolePairSet::new()));
    }

    #[test]
    fn temporal_check_examples() {
        let (_, baby, deceased, bride, bride_mother) = vocab();
        let mut t = TemporalConstraintTable::new();
        t.set_role_window(baby, deceased, YearWindow::new(-2, 999).unwrap());
        t.set_role_window(bride, bride_mother, YearWindow::new(12, 999).unwrap());

        // A death certificate may precede the birth certificate by up to
        // two years (late birth registration).
        assert!(temporal_check(baby, 1870, deceased, 1869, &t));
        assert!(!temporal_check(baby, 1870, deceased, 1867, &t));
        // A bride's mother record must come at least 12 years after her
        // own bride record.
        assert!(!temporal_check(bride, 1865, bride_mother, 1870, &t));
        assert!(temporal_check(bride, 1865, bride_mother, 1885, &t));
        // No table entry: unconstrained.
        assert!(temporal_check(deceased, 1900, bride, 1800, &t));
    }

    #[test]
    fn temporal_check_swap_invariant() {
        let (_, baby, deceased, bride, bride_mother) = vocab();
        let mut t = TemporalConstraintTable::new();
        t.set_role_window(baby, deceased, YearWindow::new(-2, 999).unwrap());
        t.set_role_window(bride, bride_mother, YearWindow::new(12, 999).unwrap());
        for (r1, r2) in [(baby, deceased), (bride, bride_mother), (baby, bride)] {
            for (y1, y2) in [(1870, 1869), (1860, 1875), (1880, 1881), (1870, 1870)] {
                assert_eq!(
                    temporal_check(r1, y1, r2, y2, &t),
                    temporal_check(r2, y2, r1, y1, &t),
                    "swap changed the outcome for years {y1}/{y2}"
                );
            }
        }
    }

    fn member(n: u32, cert: &str, role: RoleId, year: i32) -> SegmentMember {
        SegmentMember {
            record: RecordId(n),
            record_id: format!("r{n}"),
            certificate: CertId(n),
            certificate_id: cert.to_string(),
            role,
            event_year: year,
        }
    }

    #[test]
    fn ordering_sorts_by_year_then_certificate_id() {
        let (_, baby, deceased, bride, _) = vocab();
        let sorted = order_by_event_year(vec![
            member(1, "c3", deceased, 1881),
            member(2, "c2", bride, 1861),
            member(3, "c1", baby, 1861),
        ]);
        let ids: Vec<&str> = sorted.iter().map(|m| m.certificate_id.as_str()).collect();
        assert_eq!(ids, ["c1", "c2", "c3"]);

        let already = vec![member(1, "a", baby, 1850), member(2, "b", bride, 1870)];
        assert_eq!(order_by_event_year(already.clone()), already);
    }

    #[test]
    fn segment_constructor_enforces_invariants() {
        let (_, baby, deceased, bride, _) = vocab();
        let mut p = RolePairSet::new();
        p.insert(baby, bride);
        p.insert(baby, deceased);
        p.insert(bride, deceased);
        let t = TemporalConstraintTable::new();

        let ok = LifeSegment::new(
            vec![
                member(1, "b1", baby, 1850),
                member(2, "m1", bride, 1870),
                member(3, "d1", deceased, 1900),
            ],
            &p,
            &t,
        )
        .unwrap();
        assert_eq!(ok.len(), 3);
        let years: Vec<i32> = ok.members().iter().map(|m| m.event_year).collect();
        assert!(years.windows(2).all(|w| w[0] <= w[1]));

        // Two records from the same certificate are rejected.
        let mut dup = member(4, "b1", baby, 1850);
        dup.certificate = CertId(1);
        let same_cert = LifeSegment::new(vec![member(1, "b1", baby, 1850), dup], &p, &t);
        assert!(same_cert.is_err());

        // An invalid role pair is rejected.
        let empty = RolePairSet::new();
        let bad_pair = LifeSegment::new(
            vec![member(1, "b1", baby, 1850), member(2, "m1", bride, 1870)],
            &empty,
            &t,
        );
        assert!(bad_pair.is_err());
    }

    #[test]
    fn segment_constructor_enforces_temporal_windows() {
        let (_, baby, deceased, _, _) = vocab();
        let mut p = RolePairSet::new();
        p.insert(baby, deceased);
        let mut t = TemporalConstraintTable::new();
        t.set_role_window(baby, deceased, YearWindow::new(-2, 999).unwrap());

        // Death five years before birth violates the window.
        let bad = LifeSegment::new(
            vec![member(1, "b1", baby, 1870), member(2, "d1", deceased, 1865)],
            &p,
            &t,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn cardinality_defaults_to_many_to_many() {
        let mut table = LinkConstraintTable::new();
        table.set("birth_death_baby", Cardinality::OneToOne);
        assert_eq!(table.get("birth_death_baby"), Cardinality::OneToOne);
        assert_eq!(table.get("unlisted"), Cardinality::ManyToMany);
    }
}
