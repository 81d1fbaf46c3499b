//! Cardinality enforcement on scored certificate match sets: 1-to-1,
//! 1-to-many, and many-to-1 rules applied per linkage type, greedily or by
//! optimal assignment.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use pathfinding::matrix::Matrix;
use pathfinding::prelude::kuhn_munkres;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::RecordStore;
use crate::model::{Cardinality, CertId, LinkConstraintTable};
use crate::relational::CertificateMatchSet;

/// How 1-to-1 conflicts are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMode {
    /// Accept pairs in score order while neither endpoint is saturated.
    Greedy,
    /// Maximum-total-similarity assignment (exact).
    Optimal,
}

impl AssignmentMode {
    pub fn name(self) -> &'static str {
        match self {
            AssignmentMode::Greedy => "greedy",
            AssignmentMode::Optimal => "optimal",
        }
    }

    pub fn parse(s: &str) -> Result<AssignmentMode> {
        match s {
            "greedy" => Ok(AssignmentMode::Greedy),
            "optimal" => Ok(AssignmentMode::Optimal),
            other => Err(Error::Config(format!("unknown assignment mode '{other}'"))),
        }
    }
}

/// Scores are scaled to integers for the assignment solver; at 6-decimal
/// score precision the scaling is exact.
const WEIGHT_SCALE: f64 = 1e12;

type Entry = (CertId, CertId, f64);

/// How many partners each side of a pair may keep under a rule.
fn side_caps(rule: Cardinality) -> (usize, usize) {
    match rule {
        Cardinality::OneToOne => (1, 1),
        // One left partner may match many right certificates, but each
        // right certificate keeps a single left partner.
        Cardinality::OneToMany => (usize::MAX, 1),
        Cardinality::ManyToOne => (1, usize::MAX),
        Cardinality::ManyToMany => (usize::MAX, usize::MAX),
    }
}

/// Sort for greedy acceptance and tie-breaking: score descending, then
/// external certificate ids ascending.
fn greedy_order(entries: &mut [Entry], store: &RecordStore) {
    entries.sort_by(|x, y| {
        y.2.partial_cmp(&x.2)
            .expect("match scores are finite")
            .then_with(|| {
                let kx = (&store.certificate(x.0).id, &store.certificate(x.1).id);
                let ky = (&store.certificate(y.0).id, &store.certificate(y.1).id);
                kx.cmp(&ky)
            })
    });
}

fn greedy(mut entries: Vec<Entry>, rule: Cardinality, store: &RecordStore) -> Vec<Entry> {
    let (left_cap, right_cap) = side_caps(rule);
    greedy_order(&mut entries, store);
    let mut left_used: HashMap<CertId, usize> = HashMap::new();
    let mut right_used: HashMap<CertId, usize> = HashMap::new();
    let mut kept = Vec::new();
    for (c1, c2, score) in entries {
        let l = left_used.entry(c1).or_insert(0);
        let r = right_used.entry(c2).or_insert(0);
        if *l < left_cap && *r < right_cap {
            *l += 1;
            *r += 1;
            kept.push((c1, c2, score));
        }
    }
    kept
}

/// Connected components of the bipartite conflict graph, so the assignment
/// solver only sees certificates that actually compete.
fn components(entries: &[Entry]) -> Vec<Vec<Entry>> {
    let mut lefts: BTreeMap<CertId, Vec<usize>> = BTreeMap::new();
    let mut rights: BTreeMap<CertId, Vec<usize>> = BTreeMap::new();
    for (i, &(c1, c2, _)) in entries.iter().enumerate() {
        lefts.entry(c1).or_default().push(i);
        rights.entry(c2).or_default().push(i);
    }
    let mut seen = vec![false; entries.len()];
    let mut out = Vec::new();
    for start in 0..entries.len() {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut member_ids = Vec::new();
        while let Some(i) = stack.pop() {
            member_ids.push(i);
            let (c1, c2, _) = entries[i];
            for &j in lefts[&c1].iter().chain(rights[&c2].iter()) {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        member_ids.sort_unstable();
        out.push(member_ids.into_iter().map(|i| entries[i]).collect());
    }
    out
}

/// Exact maximum-total-similarity 1-to-1 matching of one component.
fn optimal_one_to_one(entries: &[Entry]) -> Vec<Entry> {
    let lefts: Vec<CertId> = entries.iter().map(|e| e.0).collect::<BTreeSet<_>>().into_iter().collect();
    let rights: Vec<CertId> = entries.iter().map(|e| e.1).collect::<BTreeSet<_>>().into_iter().collect();
    let scores: HashMap<(CertId, CertId), f64> =
        entries.iter().map(|&(c1, c2, s)| ((c1, c2), s)).collect();
    // Dummy columns (one per row, weight 0) let a certificate stay
    // unmatched when every real partner is taken by a better pair.
    let mut weights = Matrix::new(lefts.len(), rights.len() + lefts.len(), 0i64);
    for &(c1, c2, score) in entries {
        let i = lefts.binary_search(&c1).expect("left index");
        let j = rights.binary_search(&c2).expect("right index");
        weights[(i, j)] = (score * WEIGHT_SCALE).round() as i64;
    }
    let (_, assignment) = kuhn_munkres(&weights);
    let mut kept = Vec::new();
    for (i, j) in assignment.into_iter().enumerate() {
        if j < rights.len() {
            if let Some(&score) = scores.get(&(lefts[i], rights[j])) {
                kept.push((lefts[i], rights[j], score));
            }
        }
    }
    kept
}

/// Apply the per-linkage-type cardinality rules to `matches`.
///
/// Every linkage type present in the match set must have a rule in the
/// table; an unknown type is a configuration error (it means the match set
/// was produced under a different configuration).
pub fn enforce(
    matches: CertificateMatchSet,
    table: &LinkConstraintTable,
    mode: AssignmentMode,
    store: &RecordStore,
) -> Result<CertificateMatchSet> {
    let mut by_type: BTreeMap<&str, Vec<Entry>> = BTreeMap::new();
    for (c1, c2, lt, score) in matches.iter() {
        by_type.entry(lt).or_default().push((c1, c2, score));
    }
    let mut kept_all: Vec<(String, Vec<Entry>)> = Vec::new();
    for (lt, entries) in by_type {
        let rule = table.lookup(lt).ok_or_else(|| {
            Error::Config(format!("no cardinality rule for linkage type '{lt}'"))
        })?;
        let kept = match (rule, mode) {
            (Cardinality::ManyToMany, _) => entries,
            (Cardinality::OneToOne, AssignmentMode::Optimal) => {
                let mut comps = components(&entries);
                comps
                    .par_iter_mut()
                    .flat_map_iter(|comp| optimal_one_to_one(comp))
                    .collect()
            }
            // Greedy is already optimal when only one side is capped.
            (rule, _) => greedy(entries, rule, store),
        };
        kept_all.push((lt.to_string(), kept));
    }
    let mut out = CertificateMatchSet::new(matches.method());
    for (lt, entries) in kept_all {
        for (c1, c2, score) in entries {
            out.insert(c1, c2, &lt, score);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CertType;
    use crate::testkit;

    /// Births A… and deaths X… as single-member certificates.
    fn store(births: &[&str], deaths: &[&str]) -> RecordStore {
        let vocab = testkit::vocab();
        let mut certs: Vec<testkit::CertSpec> = Vec::new();
        for b in births {
            certs.push((b, CertType::Birth, 1870, &[("Baby", &[], None)]));
        }
        for d in deaths {
            certs.push((d, CertType::Death, 1930, &[("Deceased", &[], None)]));
        }
        testkit::store_from(&vocab, &certs)
    }

    fn set_of(store: &RecordStore, lt: &str, rows: &[(&str, &str, f64)]) -> CertificateMatchSet {
        let mut set = CertificateMatchSet::new("test");
        for &(c1, c2, score) in rows {
            set.insert(
                store.cert_by_ext_id(c1).unwrap(),
                store.cert_by_ext_id(c2).unwrap(),
                lt,
                score,
            );
        }
        set
    }

    fn table(lt: &str, rule: Cardinality) -> LinkConstraintTable {
        let mut t = LinkConstraintTable::new();
        t.set(lt, rule);
        t
    }

    fn keys(set: &CertificateMatchSet, store: &RecordStore) -> Vec<(String, String)> {
        set.iter()
            .map(|(c1, c2, _, _)| {
                (store.certificate(c1).id.clone(), store.certificate(c2).id.clone())
            })
            .collect()
    }

    fn total(set: &CertificateMatchSet) -> f64 {
        set.iter().map(|(_, _, _, s)| s).sum()
    }

    #[test]
    fn one_to_one_greedy_versus_optimal_fixture() {
        let store = store(&["A", "B"], &["X", "Y"]);
        let rows = [("A", "X", 0.9), ("A", "Y", 0.8), ("B", "X", 0.85)];
        let t = table("bd", Cardinality::OneToOne);

        let greedy = enforce(set_of(&store, "bd", &rows), &t, AssignmentMode::Greedy, &store).unwrap();
        assert_eq!(keys(&greedy, &store), [("A".to_string(), "X".to_string())]);
        assert!((total(&greedy) - 0.9).abs() < 1e-9);

        let optimal = enforce(set_of(&store, "bd", &rows), &t, AssignmentMode::Optimal, &store).unwrap();
        assert_eq!(
            keys(&optimal, &store),
            [("A".to_string(), "Y".to_string()), ("B".to_string(), "X".to_string())]
        );
        assert!((total(&optimal) - 1.65).abs() < 1e-9);
    }

    #[test]
    fn many_to_many_is_identity() {
        let store = store(&["A", "B"], &["X"]);
        let rows = [("A", "X", 0.9), ("B", "X", 0.1)];
        let t = table("bd", Cardinality::ManyToMany);
        for mode in [AssignmentMode::Greedy, AssignmentMode::Optimal] {
            let out = enforce(set_of(&store, "bd", &rows), &t, mode, &store).unwrap();
            assert_eq!(out, set_of(&store, "bd", &rows));
        }
    }

    #[test]
    fn one_to_many_keeps_best_left_per_right() {
        let store = store(&["A", "B"], &["X", "Y"]);
        let t = table("bm", Cardinality::OneToMany);
        // One left partner matched to two right certificates: both kept.
        let both = enforce(
            set_of(&store, "bm", &[("A", "X", 0.9), ("A", "Y", 0.8)]),
            &t,
            AssignmentMode::Greedy,
            &store,
        )
        .unwrap();
        assert_eq!(both.len(), 2);
        // Two left partners competing for one right: higher kept.
        let competed = enforce(
            set_of(&store, "bm", &[("A", "X", 0.7), ("B", "X", 0.9)]),
            &t,
            AssignmentMode::Greedy,
            &store,
        )
        .unwrap();
        assert_eq!(keys(&competed, &store), [("B".to_string(), "X".to_string())]);
    }

    #[test]
    fn many_to_one_keeps_best_right_per_left() {
        let store = store(&["A", "B"], &["X", "Y"]);
        let t = table("mb", Cardinality::ManyToOne);
        let out = enforce(
            set_of(&store, "mb", &[("A", "X", 0.7), ("A", "Y", 0.9), ("B", "Y", 0.8)]),
            &t,
            AssignmentMode::Greedy,
            &store,
        )
        .unwrap();
        assert_eq!(
            keys(&out, &store),
            [("A".to_string(), "Y".to_string()), ("B".to_string(), "Y".to_string())]
        );
    }

    #[test]
    fn greedy_ties_break_by_certificate_id() {
        let store = store(&["A", "B"], &["X", "Y"]);
        let t = table("bd", Cardinality::OneToOne);
        let out = enforce(
            set_of(&store, "bd", &[("B", "X", 0.8), ("A", "X", 0.8)]),
            &t,
            AssignmentMode::Greedy,
            &store,
        )
        .unwrap();
        assert_eq!(keys(&out, &store), [("A".to_string(), "X".to_string())]);
        let out = enforce(
            set_of(&store, "bd", &[("A", "Y", 0.8), ("A", "X", 0.8)]),
            &t,
            AssignmentMode::Greedy,
            &store,
        )
        .unwrap();
        assert_eq!(keys(&out, &store), [("A".to_string(), "X".to_string())]);
    }

    #[test]
    fn unknown_linkage_type_is_config_error() {
        let store = store(&["A"], &["X"]);
        let t = table("bd", Cardinality::OneToOne);
        let err = enforce(
            set_of(&store, "mystery", &[("A", "X", 0.9)]),
            &t,
            AssignmentMode::Greedy,
            &store,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn linkage_types_enforced_independently() {
        let store = store(&["A"], &["X", "Y"]);
        let mut t = LinkConstraintTable::new();
        t.set("bd", Cardinality::ManyToOne);
        t.set("other", Cardinality::ManyToMany);
        let mut set = CertificateMatchSet::new("test");
        let a = store.cert_by_ext_id("A").unwrap();
        let x = store.cert_by_ext_id("X").unwrap();
        let y = store.cert_by_ext_id("Y").unwrap();
        set.insert(a, x, "bd", 0.9);
        set.insert(a, y, "bd", 0.8);
        set.insert(a, x, "other", 0.1);
        set.insert(a, y, "other", 0.2);
        let out = enforce(set, &t, AssignmentMode::Greedy, &store).unwrap();
        assert_eq!(out.get(a, x, "bd"), Some(0.9));
        assert_eq!(out.get(a, y, "bd"), None, "left side capped at one");
        assert_eq!(out.get(a, x, "other"), Some(0.1));
        assert_eq!(out.get(a, y, "other"), Some(0.2));
    }

    /// Best achievable total by trying every subset that is a matching.
    fn brute_force_best(entries: &[Entry]) -> f64 {
        fn recurse(
            entries: &[Entry],
            i: usize,
            left: &mut BTreeSet<CertId>,
            right: &mut BTreeSet<CertId>,
        ) -> f64 {
            if i == entries.len() {
                return 0.0;
            }
            let skip = recurse(entries, i + 1, left, right);
            let (c1, c2, score) = entries[i];
            if left.contains(&c1) || right.contains(&c2) {
                return skip;
            }
            left.insert(c1);
            right.insert(c2);
            let take = score + recurse(entries, i + 1, left, right);
            left.remove(&c1);
            right.remove(&c2);
            skip.max(take)
        }
        recurse(entries, 0, &mut BTreeSet::new(), &mut BTreeSet::new())
    }

    #[test]
    fn optimal_matches_exhaustive_enumeration() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let births: Vec<String> = (0..5).map(|i| format!("B{i}")).collect();
        let deaths: Vec<String> = (0..5).map(|i| format!("D{i}")).collect();
        let store = store(
            &births.iter().map(String::as_str).collect::<Vec<_>>(),
            &deaths.iter().map(String::as_str).collect::<Vec<_>>(),
        );
        let t = table("bd", Cardinality::OneToOne);
        for _ in 0..150 {
            let mut set = CertificateMatchSet::new("test");
            for b in &births {
                for d in &deaths {
                    if rng.gen_bool(0.5) {
                        set.insert(
                            store.cert_by_ext_id(b).unwrap(),
                            store.cert_by_ext_id(d).unwrap(),
                            "bd",
                            rng.gen_range(0.0..=1.0),
                        );
                    }
                }
            }
            let entries: Vec<Entry> = set.iter().map(|(c1, c2, _, s)| (c1, c2, s)).collect();
            let best = brute_force_best(&entries);
            let optimal = enforce(set.clone(), &t, AssignmentMode::Optimal, &store).unwrap();
            assert!(
                (total(&optimal) - best).abs() < 1e-9,
                "optimal {} vs enumerated {best}",
                total(&optimal)
            );
            let greedy = enforce(set.clone(), &t, AssignmentMode::Greedy, &store).unwrap();
            assert!(total(&greedy) <= total(&optimal) + 1e-9, "greedy never beats optimal");
            // Both outputs are subsets satisfying the rule.
            for out in [&greedy, &optimal] {
                let mut left = BTreeSet::new();
                let mut right = BTreeSet::new();
                for (c1, c2, lt, score) in out.iter() {
                    assert_eq!(set.get(c1, c2, lt), Some(score), "output ⊆ input");
                    assert!(left.insert(c1), "left endpoint reused");
                    assert!(right.insert(c2), "right endpoint reused");
                }
            }
        }
    }
}
