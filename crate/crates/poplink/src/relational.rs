//! Neighborhood (relational) similarity between certificates: seven
//! functions over the common neighbors of a certificate pair in the graph,
//! and the relational match set M_R they produce.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{enforce, AssignmentMode};
use crate::error::{Error, Result};
use crate::graph::{CertificateGraph, EdgeSummary, LinkageType, RelationshipSpec};
use crate::ingest::RecordStore;
use crate::model::{CertId, LinkConstraintTable};
use crate::pairwise::quantize;

/// The seven neighborhood similarity functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationalMethod {
    Jaccard,
    MultiJaccard,
    Average,
    MultiAverage,
    Maximum,
    AdarAdamic,
    MultiAdarAdamic,
}

impl RelationalMethod {
    pub const ALL: [RelationalMethod; 7] = [
        RelationalMethod::Jaccard,
        RelationalMethod::MultiJaccard,
        RelationalMethod::Average,
        RelationalMethod::MultiAverage,
        RelationalMethod::Maximum,
        RelationalMethod::AdarAdamic,
        RelationalMethod::MultiAdarAdamic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationalMethod::Jaccard => "jaccard",
            RelationalMethod::MultiJaccard => "multi_jaccard",
            RelationalMethod::Average => "average",
            RelationalMethod::MultiAverage => "multi_average",
            RelationalMethod::Maximum => "maximum",
            RelationalMethod::AdarAdamic => "adar_adamic",
            RelationalMethod::MultiAdarAdamic => "multi_adar_adamic",
        }
    }

    pub fn parse(s: &str) -> Result<RelationalMethod> {
        RelationalMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown relational method '{s}'")))
    }
}

impl fmt::Display for RelationalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Filtered neighborhood of `of`, excluding the scored pair itself.
fn neighborhood(
    g: &CertificateGraph,
    of: CertId,
    other: CertId,
    spec: &RelationshipSpec,
    store: &RecordStore,
) -> BTreeMap<CertId, EdgeSummary> {
    g.neighbor_summaries(of, spec, store)
        .into_iter()
        .filter(|&(n, _)| n != other)
        .collect()
}

fn sorted_union(n1: &BTreeMap<CertId, EdgeSummary>, n2: &BTreeMap<CertId, EdgeSummary>) -> BTreeSet<CertId> {
    n1.keys().chain(n2.keys()).copied().collect()
}

/// Down-weight for a neighbor by its connectivity: highly connected
/// certificates are ambiguous evidence. 1/ln(1+degree), capped at 1.
fn ambiguity_weight(g: &CertificateGraph, n: CertId) -> f64 {
    let d = g.degree(n);
    if d <= 1 {
        1.0
    } else {
        1.0 / (1.0 + d as f64).ln()
    }
}

/// |N(c1) ∩ N(c2)| / |N(c1) ∪ N(c2)|; 0 when the union is empty.
pub fn rel_jaccard(
    g: &CertificateGraph,
    c1: CertId,
    c2: CertId,
    spec: &RelationshipSpec,
    store: &RecordStore,
) -> f64 {
    let n1 = neighborhood(g, c1, c2, spec, store);
    let n2 = neighborhood(g, c2, c1, spec, store);
    let common = n1.keys().filter(|k| n2.contains_key(k)).count();
    let union = n1.len() + n2.len() - common;
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

/// Jaccard over neighborhoods as multisets: Σ min(multiplicity) over the
/// union divided by Σ max(multiplicity).
pub fn rel_multi_jaccard(
    g: &CertificateGraph,
    c1: CertId,
    c2: CertId,
    spec: &RelationshipSpec,
    store: &RecordStore,
) -> f64 {
    let n1 = neighborhood(g, c1, c2, spec, store);
    let n2 = neighborhood(g, c2, c1, spec, store);
    let mut num = 0usize;
    let mut den = 0usize;
    for n in sorted_union(&n1, &n2) {
        let m1 = n1.get(&n).map_or(0, |s| s.multiplicity);
        let m2 = n2.get(&n).map_or(0, |s| s.multiplicity);
        num += m1.min(m2);
        den += m1.max(m2);
    }
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Mean over common neighbors of the pairwise-averaged edge maxima;
/// 0 when no common neighbor exists.
pub fn rel_average(
    g: &CertificateGraph,
    c1: CertId,
    c2: CertId,
    spec: &RelationshipSpec,
    store: &RecordStore,
) -> f64 {
    let n1 = neighborhood(g, c1, c2, spec, store);
    let n2 = neighborhood(g, c2, c1, spec, store);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (n, s1) in &n1 {
        if let Some(s2) = n2.get(n) {
            sum += (s1.max + s2.max) / 2.0;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// As [`rel_average`] but each common neighbor contributes the
/// multiplicity-weighted mean of all individual links on both edges.
pub fn rel_multi_average(
    g: &CertificateGraph,
    c1: CertId,
    c2: CertId,
    spec: &RelationshipSpec,
    store: &RecordStore,
) -> f64 {
    let n1 = neighborhood(g, c1, c2, spec, store);
    let n2 = neighborhood(g, c2, c1, spec, store);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (n, s1) in &n1 {
        if let Some(s2) = n2.get(n) {
            sum += (s1.sum + s2.sum) / (s1.multiplicity + s2.multiplicity) as f64;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Maximum individual link similarity over all edges incident to common
/// neighbors; 0 when no common neighbor exists.
pub fn rel_maximum(
    g: &CertificateGraph,
    c1: CertId,
    c2: CertId,
    spec: &RelationshipSpec,
    store: &RecordStore,
) -> f64 {
    let n1 = neighborhood(g, c1, c2, spec, store);
    let n2 = neighborhood(g, c2, c1, spec, store);
    let mut best = 0.0f64;
    let mut found = false;
    for (n, s1) in &n1 {
        if let Some(s2) = n2.get(n) {
            best = best.max(s1.max).max(s2.max);
            found = true;
        }
    }
    if found {
        best
    } else {
        0.0
    }
}

/// Connectivity-weighted neighborhood overlap: Σ u(n) over common
/// neighbors divided by Σ u(n) over the union, where u down-weights
/// highly connected neighbors.
pub fn rel_adar_adamic(
    g: &CertificateGraph,
    c1: CertId,
    c2: CertId,
    spec: &RelationshipSpec,
    store: &RecordStore,
) -> f64 {
    let n1 = neighborhood(g, c1, c2, spec, store);
    let n2 = neighborhood(g, c2, c1, spec, store);
    let mut num = 0.0;
    let mut den = 0.0;
    for n in sorted_union(&n1, &n2) {
        let u = ambiguity_weight(g, n);
        den += u;
        if n1.contains_key(&n) && n2.contains_key(&n) {
            num += u;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// As [`rel_adar_adamic`] with each u(n) scaled by the smaller edge
/// multiplicity in the numerator and the larger in the denominator.
pub fn rel_multi_adar_adamic(
    g: &CertificateGraph,
    c1: CertId,
    c2: CertId,
    spec: &RelationshipSpec,
    store: &RecordStore,
) -> f64 {
    let n1 = neighborhood(g, c1, c2, spec, store);
    let n2 = neighborhood(g, c2, c1, spec, store);
    let mut num = 0.0;
    let mut den = 0.0;
    for n in sorted_union(&n1, &n2) {
        let u = ambiguity_weight(g, n);
        let m1 = n1.get(&n).map_or(0, |s| s.multiplicity);
        let m2 = n2.get(&n).map_or(0, |s| s.multiplicity);
        num += m1.min(m2) as f64 * u;
        den += m1.max(m2) as f64 * u;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Dispatch one of the seven functions.
pub fn relational_sim(
    g: &CertificateGraph,
    c1: CertId,
    c2: CertId,
    method: RelationalMethod,
    spec: &RelationshipSpec,
    store: &RecordStore,
) -> f64 {
    match method {
        RelationalMethod::Jaccard => rel_jaccard(g, c1, c2, spec, store),
        RelationalMethod::MultiJaccard => rel_multi_jaccard(g, c1, c2, spec, store),
        RelationalMethod::Average => rel_average(g, c1, c2, spec, store),
        RelationalMethod::MultiAverage => rel_multi_average(g, c1, c2, spec, store),
        RelationalMethod::Maximum => rel_maximum(g, c1, c2, spec, store),
        RelationalMethod::AdarAdamic => rel_adar_adamic(g, c1, c2, spec, store),
        RelationalMethod::MultiAdarAdamic => rel_multi_adar_adamic(g, c1, c2, spec, store),
    }
}

/// A scored set of certificate pairs per linkage type (M_R, M_G, or the
/// fused M_F). Pairs are oriented by their linkage type's side order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CertificateMatchSet {
    method: String,
    entries: BTreeMap<(CertId, CertId, String), f64>,
}

impl CertificateMatchSet {
    pub fn new(method: impl Into<String>) -> CertificateMatchSet {
        CertificateMatchSet { method: method.into(), entries: BTreeMap::new() }
    }

    /// Label recorded in the `method` column of the serialized set.
    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn insert(&mut self, c1: CertId, c2: CertId, linkage_type: &str, score: f64) {
        debug_assert!(c1 != c2, "self-match");
        debug_assert!(score.is_finite());
        let score = quantize(score).clamp(0.0, 1.0);
        self.entries.insert((c1, c2, linkage_type.to_string()), score);
    }

    pub fn get(&self, c1: CertId, c2: CertId, linkage_type: &str) -> Option<f64> {
        self.entries
            .get(&(c1, c2, linkage_type.to_string()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (CertId, CertId, &str, f64)> {
        self.entries
            .iter()
            .map(|((c1, c2, lt), &score)| (*c1, *c2, lt.as_str(), score))
    }

    /// Serialize sorted by external certificate ids then linkage type.
    pub fn write_tsv<W: Write>(&self, store: &RecordStore, writer: &mut W) -> Result<()> {
        let mut rows: Vec<(&str, &str, &str, f64)> = self
            .iter()
            .map(|(c1, c2, lt, score)| {
                (
                    store.certificate(c1).id.as_str(),
                    store.certificate(c2).id.as_str(),
                    lt,
                    score,
                )
            })
            .collect();
        rows.sort_unstable_by(|x, y| (x.0, x.1, x.2).cmp(&(y.0, y.1, y.2)));
        writeln!(writer, "cert_id_1\tcert_id_2\tlinkage_type\tmethod\tscore")?;
        for (c1, c2, lt, score) in rows {
            writeln!(writer, "{c1}\t{c2}\t{lt}\t{}\t{score:.6}", self.method)?;
        }
        Ok(())
    }

    pub fn read_tsv<R: Read>(reader: R, store: &RecordStore) -> Result<CertificateMatchSet> {
        let mut csv = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .from_reader(reader);
        let expected = ["cert_id_1", "cert_id_2", "linkage_type", "method", "score"];
        let headers = csv.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Schema(format!(
                "match set header must be {}",
                expected.join(", ")
            )));
        }
        let mut set = CertificateMatchSet::new("");
        for row in csv.records() {
            let row = row?;
            let c1 = store.cert_by_ext_id(&row[0]).ok_or_else(|| {
                Error::Integrity(format!("match set names unknown certificate '{}'", &row[0]))
            })?;
            let c2 = store.cert_by_ext_id(&row[1]).ok_or_else(|| {
                Error::Integrity(format!("match set names unknown certificate '{}'", &row[1]))
            })?;
            let lt = &row[2];
            let method = &row[3];
            if set.method.is_empty() {
                set.method = method.to_string();
            } else if set.method != method {
                return Err(Error::Integrity(format!(
                    "match set mixes methods '{}' and '{method}'",
                    set.method
                )));
            }
            let score: f64 = row[4].parse().map_err(|_| {
                Error::Schema(format!("bad score '{}' in match set", &row[4]))
            })?;
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::Schema(format!("score {score} outside [0, 1]")));
            }
            if set.get(c1, c2, lt).is_some() {
                return Err(Error::Integrity(format!(
                    "duplicate match row {} / {} / {lt}",
                    &row[0], &row[1]
                )));
            }
            set.insert(c1, c2, lt, score);
        }
        Ok(set)
    }
}

/// Score every edge admitted by each linkage type with `method`, then
/// optionally enforce cardinality constraints per linkage type.
pub fn score_relational(
    g: &CertificateGraph,
    store: &RecordStore,
    method: RelationalMethod,
    linkage_types: &[LinkageType],
    constraints: Option<&LinkConstraintTable>,
    mode: AssignmentMode,
) -> Result<CertificateMatchSet> {
    let edges: Vec<_> = g.edges().collect();
    let scored: Vec<((CertId, CertId), &str, f64)> = edges
        .par_iter()
        .flat_map_iter(|(_, edge)| {
            linkage_types.iter().filter_map(move |lt| {
                lt.match_key(edge, store).map(|(c1, c2)| {
                    let sim = relational_sim(g, c1, c2, method, &lt.relationship, store);
                    ((c1, c2), lt.name.as_str(), sim)
                })
            })
        })
        .collect();
    let mut set = CertificateMatchSet::new(method.name());
    for ((c1, c2), lt, sim) in scored {
        set.insert(c1, c2, lt, sim);
    }
    match constraints {
        Some(table) => enforce(set, table, mode, store),
        None => Ok(set),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::model::{Cardinality, CertType, YearWindow};
    use crate::pairwise::LinkSet;
    use crate::testkit;

    const HEAD: &[testkit::MemberSpec] = &[("Head", &[], None)];

    fn census(ext: &str, year: i32) -> testkit::CertSpec<'_> {
        (ext, CertType::Census, year, HEAD)
    }

    fn scored_links(store: &RecordStore, pairs: &[(&str, &str, f64)]) -> LinkSet {
        let mut set = LinkSet::new(0.0).unwrap();
        for &(a, b, score) in pairs {
            set.insert(
                store.record_by_ext_id(a).unwrap(),
                store.record_by_ext_id(b).unwrap(),
                score,
            );
        }
        set
    }

    /// Single-member certificates X1, X2 plus the given neighbors, linked
    /// at similarity 0.5 per listed (cert, cert) adjacency.
    fn simple_graph(
        neighbors: &[&str],
        adjacency: &[(&str, &str)],
    ) -> (RecordStore, CertificateGraph) {
        let vocab = testkit::vocab();
        let mut certs = vec![census("X1", 1871), census("X2", 1881)];
        certs.extend(neighbors.iter().map(|n| census(n, 1891)));
        let store = testkit::store_from(&vocab, &certs);
        let pairs: Vec<(String, String, f64)> = adjacency
            .iter()
            .map(|&(a, b)| (format!("{a}.0"), format!("{b}.0"), 0.5))
            .collect();
        let borrowed: Vec<(&str, &str, f64)> = pairs
            .iter()
            .map(|(a, b, s)| (a.as_str(), b.as_str(), *s))
            .collect();
        let g = build_graph(&scored_links(&store, &borrowed), &store).unwrap();
        (store, g)
    }

    fn unfiltered() -> RelationshipSpec {
        RelationshipSpec::unrestricted()
    }

    fn pair(store: &RecordStore) -> (CertId, CertId) {
        (
            store.cert_by_ext_id("X1").unwrap(),
            store.cert_by_ext_id("X2").unwrap(),
        )
    }

    #[test]
    fn jaccard_counts_shared_neighbors() {
        // N(X1) = {A,B,C}, N(X2) = {B,C,D}; the X1–X2 edge itself is
        // excluded from both neighborhoods.
        let (store, g) = simple_graph(
            &["A", "B", "C", "D"],
            &[
                ("X1", "A"),
                ("X1", "B"),
                ("X1", "C"),
                ("X2", "B"),
                ("X2", "C"),
                ("X2", "D"),
                ("X1", "X2"),
            ],
        );
        let (x1, x2) = pair(&store);
        assert_eq!(rel_jaccard(&g, x1, x2, &unfiltered(), &store), 0.5);
    }

    #[test]
    fn jaccard_extremes() {
        let (store, g) = simple_graph(
            &["A", "B"],
            &[("X1", "A"), ("X1", "B"), ("X2", "A"), ("X2", "B")],
        );
        let (x1, x2) = pair(&store);
        assert_eq!(rel_jaccard(&g, x1, x2, &unfiltered(), &store), 1.0);

        let (store, g) = simple_graph(&["A", "B"], &[("X1", "A"), ("X2", "B")]);
        let (x1, x2) = pair(&store);
        assert_eq!(rel_jaccard(&g, x1, x2, &unfiltered(), &store), 0.0);

        let (store, g) = simple_graph(&[], &[("X1", "X2")]);
        let (x1, x2) = pair(&store);
        assert_eq!(rel_jaccard(&g, x1, x2, &unfiltered(), &store), 0.0, "empty union");
    }

    #[test]
    fn multi_jaccard_weights_by_multiplicity() {
        // X1–N has multiplicity 2, X2–N multiplicity 3 → 2/3.
        let vocab = testkit::vocab();
        let two: &[testkit::MemberSpec] = &[("Head", &[], None), ("Spouse", &[], None)];
        let store = testkit::store_from(
            &vocab,
            &[
                ("X1", CertType::Census, 1871, two),
                ("X2", CertType::Census, 1881, two),
                ("N", CertType::Census, 1891, two),
            ],
        );
        let links = scored_links(
            &store,
            &[
                ("X1.0", "N.0", 0.5),
                ("X1.1", "N.1", 0.5),
                ("X2.0", "N.0", 0.5),
                ("X2.0", "N.1", 0.5),
                ("X2.1", "N.0", 0.5),
            ],
        );
        let g = build_graph(&links, &store).unwrap();
        let (x1, x2) = pair(&store);
        let got = rel_multi_jaccard(&g, x1, x2, &unfiltered(), &store);
        assert!((got - 2.0 / 3.0).abs() < 1e-12, "{got}");
        assert_eq!(rel_jaccard(&g, x1, x2, &unfiltered(), &store), 1.0);
    }

    #[test]
    fn average_uses_pairwise_mean_of_edge_maxima() {
        let vocab = testkit::vocab();
        let two: &[testkit::MemberSpec] = &[("Head", &[], None), ("Spouse", &[], None)];
        let store = testkit::store_from(
            &vocab,
            &[
                ("X1", CertType::Census, 1871, two),
                ("X2", CertType::Census, 1881, HEAD),
                ("N", CertType::Census, 1891, two),
            ],
        );
        // Edge (X1,N) maxima 0.8; edge (X2,N) maxima 0.6.
        let links = scored_links(
            &store,
            &[
                ("X1.0", "N.0", 0.8),
                ("X1.1", "N.1", 0.3),
                ("X2.0", "N.0", 0.6),
            ],
        );
        let g = build_graph(&links, &store).unwrap();
        let (x1, x2) = pair(&store);
        let got = rel_average(&g, x1, x2, &unfiltered(), &store);
        assert!((got - 0.7).abs() < 1e-12, "{got}");
        // Multi variant weights every link: (0.8+0.3+0.6)/3.
        let multi = rel_multi_average(&g, x1, x2, &unfiltered(), &store);
        assert!((multi - 1.7 / 3.0).abs() < 1e-12, "{multi}");
        // Maximum scans all links on common-neighbor edges.
        assert_eq!(rel_maximum(&g, x1, x2, &unfiltered(), &store), 0.8);
    }

    #[test]
    fn multi_average_fixture() {
        let vocab = testkit::vocab();
        let two: &[testkit::MemberSpec] = &[("Head", &[], None), ("Spouse", &[], None)];
        let store = testkit::store_from(
            &vocab,
            &[
                ("X1", CertType::Census, 1871, two),
                ("X2", CertType::Census, 1881, HEAD),
                ("N", CertType::Census, 1891, two),
            ],
        );
        let links = scored_links(
            &store,
            &[
                ("X1.0", "N.0", 1.0),
                ("X1.1", "N.1", 0.5),
                ("X2.0", "N.0", 0.9),
            ],
        );
        let g = build_graph(&links, &store).unwrap();
        let (x1, x2) = pair(&store);
        let got = rel_multi_average(&g, x1, x2, &unfiltered(), &store);
        assert!((got - 0.8).abs() < 1e-12, "{got}");
    }

    #[test]
    fn maximum_fixture_and_no_common_neighbor() {
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[census("X1", 1871), census("X2", 1881), census("A", 1891), census("B", 1901)],
        );
        let links = scored_links(
            &store,
            &[
                ("X1.0", "A.0", 0.5),
                ("X2.0", "A.0", 0.9),
                ("X1.0", "B.0", 0.7),
                ("X2.0", "B.0", 0.2),
            ],
        );
        let g = build_graph(&links, &store).unwrap();
        let (x1, x2) = pair(&store);
        assert_eq!(rel_maximum(&g, x1, x2, &unfiltered(), &store), 0.9);
        // Singleton common-neighbor edge.
        let (store2, g2) = simple_graph(&["A"], &[("X1", "A"), ("X2", "A")]);
        let (y1, y2) = pair(&store2);
        assert_eq!(rel_maximum(&g2, y1, y2, &unfiltered(), &store2), 0.5);
        // No common neighbor → 0.
        let (store3, g3) = simple_graph(&["A", "B"], &[("X1", "A"), ("X2", "B")]);
        let (z1, z2) = pair(&store3);
        assert_eq!(rel_maximum(&g3, z1, z2, &unfiltered(), &store3), 0.0);
    }

    #[test]
    fn adar_adamic_balances_equal_degrees() {
        // Common neighbor N (degree 2) and non-common P (degree 2, via
        // filler X): equal weights → 0.5.
        let (store, g) = simple_graph(
            &["N", "P", "F"],
            &[("X1", "N"), ("X2", "N"), ("X1", "P"), ("P", "F")],
        );
        let (x1, x2) = pair(&store);
        assert_eq!(g.degree(store.cert_by_ext_id("N").unwrap()), 2);
        assert_eq!(g.degree(store.cert_by_ext_id("P").unwrap()), 2);
        let got = rel_adar_adamic(&g, x1, x2, &unfiltered(), &store);
        assert!((got - 0.5).abs() < 1e-12, "{got}");
    }

    #[test]
    fn adar_adamic_penalizes_highly_connected_common_neighbor() {
        // Common neighbor with degree 100 against a non-common neighbor
        // with degree 2: the common neighbor is ambiguous evidence, so the
        // score drops below 0.5.
        let fillers: Vec<String> = (0..98).map(|i| format!("F{i:02}")).collect();
        let vocab = testkit::vocab();
        let mut certs = vec![
            census("X1", 1871),
            census("X2", 1881),
            census("N", 1891),
            census("P", 1901),
            census("Q", 1911),
        ];
        certs.extend(fillers.iter().map(|f| census(f, 1921)));
        let store = testkit::store_from(&vocab, &certs);
        let mut adjacency: Vec<(String, String, f64)> = vec![
            ("X1.0".into(), "N.0".into(), 0.5),
            ("X2.0".into(), "N.0".into(), 0.5),
            ("X1.0".into(), "P.0".into(), 0.5),
            ("P.0".into(), "Q.0".into(), 0.5),
        ];
        adjacency.extend(
            fillers
                .iter()
                .map(|f| ("N.0".to_string(), format!("{f}.0"), 0.5)),
        );
        let borrowed: Vec<(&str, &str, f64)> = adjacency
            .iter()
            .map(|(a, b, s)| (a.as_str(), b.as_str(), *s))
            .collect();
        let g = build_graph(&scored_links(&store, &borrowed), &store).unwrap();
        let (x1, x2) = pair(&store);
        let n = store.cert_by_ext_id("N").unwrap();
        assert_eq!(g.degree(n), 100);
        let got = rel_adar_adamic(&g, x1, x2, &unfiltered(), &store);
        let u_n = 1.0 / 101f64.ln();
        let u_p = 1.0 / 3f64.ln();
        assert!((got - u_n / (u_n + u_p)).abs() < 1e-12, "{got}");
        assert!(got < 0.5);
    }

    #[test]
    fn adar_adamic_identical_neighborhoods_score_one() {
        let (store, g) = simple_graph(
            &["A", "B"],
            &[("X1", "A"), ("X1", "B"), ("X2", "A"), ("X2", "B")],
        );
        let (x1, x2) = pair(&store);
        assert_eq!(rel_adar_adamic(&g, x1, x2, &unfiltered(), &store), 1.0);
    }

    #[test]
    fn multi_adar_adamic_scales_by_multiplicities() {
        // Sole common neighbor with multiplicities (1, 3) → 1/3; the
        // weight u(n) cancels.
        let vocab = testkit::vocab();
        let three: &[testkit::MemberSpec] =
            &[("Head", &[], None), ("Spouse", &[], None), ("Child", &[], None)];
        let store = testkit::store_from(
            &vocab,
            &[
                ("X1", CertType::Census, 1871, HEAD),
                ("X2", CertType::Census, 1881, three),
                ("N", CertType::Census, 1891, three),
            ],
        );
        let links = scored_links(
            &store,
            &[
                ("X1.0", "N.0", 0.5),
                ("X2.0", "N.0", 0.5),
                ("X2.1", "N.1", 0.5),
                ("X2.2", "N.2", 0.5),
            ],
        );
        let g = build_graph(&links, &store).unwrap();
        let (x1, x2) = pair(&store);
        let got = rel_multi_adar_adamic(&g, x1, x2, &unfiltered(), &store);
        assert!((got - 1.0 / 3.0).abs() < 1e-12, "{got}");

        // Multiplicities (2, 2) on the sole neighbor → 1.
        let store2 = testkit::store_from(
            &vocab,
            &[
                ("X1", CertType::Census, 1871, three),
                ("X2", CertType::Census, 1881, three),
                ("N", CertType::Census, 1891, three),
            ],
        );
        let links2 = scored_links(
            &store2,
            &[
                ("X1.0", "N.0", 0.5),
                ("X1.1", "N.1", 0.5),
                ("X2.0", "N.0", 0.5),
                ("X2.1", "N.1", 0.5),
            ],
        );
        let g2 = build_graph(&links2, &store2).unwrap();
        let (y1, y2) = pair(&store2);
        assert_eq!(rel_multi_adar_adamic(&g2, y1, y2, &unfiltered(), &store2), 1.0);
    }

    #[test]
    fn randomized_properties_hold() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let vocab = testkit::vocab();
        for _ in 0..60 {
            let n_certs = rng.gen_range(4..16usize);
            let names: Vec<String> = (0..n_certs).map(|i| format!("C{i:02}")).collect();
            let members: &[testkit::MemberSpec] =
                &[("Head", &[], None), ("Spouse", &[], None)];
            let certs: Vec<testkit::CertSpec> = names
                .iter()
                .map(|n| (n.as_str(), CertType::Census, 1871, members))
                .collect();
            let store = testkit::store_from(&vocab, &certs);
            let mut links = LinkSet::new(0.0).unwrap();
            for a in 0..n_certs {
                for b in (a + 1)..n_certs {
                    for ma in 0..2 {
                        for mb in 0..2 {
                            if rng.gen_bool(0.3) {
                                links.insert(
                                    store
                                        .record_by_ext_id(&format!("{}.{ma}", names[a]))
                                        .unwrap(),
                                    store
                                        .record_by_ext_id(&format!("{}.{mb}", names[b]))
                                        .unwrap(),
                                    rng.gen_range(0.0..=1.0),
                                );
                            }
                        }
                    }
                }
            }
            let g = build_graph(&links, &store).unwrap();
            let spec = unfiltered();
            for a in 0..n_certs {
                for b in (a + 1)..n_certs {
                    let c1 = store.cert_by_ext_id(&names[a]).unwrap();
                    let c2 = store.cert_by_ext_id(&names[b]).unwrap();
                    for method in RelationalMethod::ALL {
                        let s12 = relational_sim(&g, c1, c2, method, &spec, &store);
                        let s21 = relational_sim(&g, c2, c1, method, &spec, &store);
                        assert_eq!(s12, s21, "symmetry for {method}");
                        assert!((0.0..=1.0).contains(&s12), "{method} out of range: {s12}");
                    }
                }
            }
        }
    }

    #[test]
    fn multi_variants_reduce_at_multiplicity_one() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        let vocab = testkit::vocab();
        for _ in 0..60 {
            let n_certs = rng.gen_range(4..14usize);
            let names: Vec<String> = (0..n_certs).map(|i| format!("C{i:02}")).collect();
            let certs: Vec<testkit::CertSpec> = names
                .iter()
                .map(|n| (n.as_str(), CertType::Census, 1871, HEAD))
                .collect();
            let store = testkit::store_from(&vocab, &certs);
            let mut links = LinkSet::new(0.0).unwrap();
            for a in 0..n_certs {
                for b in (a + 1)..n_certs {
                    if rng.gen_bool(0.4) {
                        links.insert(
                            store.record_by_ext_id(&format!("{}.0", names[a])).unwrap(),
                            store.record_by_ext_id(&format!("{}.0", names[b])).unwrap(),
                            rng.gen_range(0.0..=1.0),
                        );
                    }
                }
            }
            let g = build_graph(&links, &store).unwrap();
            let spec = unfiltered();
            for a in 0..n_certs {
                for b in (a + 1)..n_certs {
                    let c1 = store.cert_by_ext_id(&names[a]).unwrap();
                    let c2 = store.cert_by_ext_id(&names[b]).unwrap();
                    let j = rel_jaccard(&g, c1, c2, &spec, &store);
                    let mj = rel_multi_jaccard(&g, c1, c2, &spec, &store);
                    assert!((j - mj).abs() < 1e-12);
                    let aa = rel_adar_adamic(&g, c1, c2, &spec, &store);
                    let maa = rel_multi_adar_adamic(&g, c1, c2, &spec, &store);
                    assert!((aa - maa).abs() < 1e-12);
                    let avg = rel_average(&g, c1, c2, &spec, &store);
                    let mavg = rel_multi_average(&g, c1, c2, &spec, &store);
                    assert!((avg - mavg).abs() < 1e-12);
                }
            }
        }
    }

    fn bride_linkage(vocab: &crate::model::RoleVocabulary) -> LinkageType {
        LinkageType {
            name: "birth_marriage_bride".into(),
            cert_types: (CertType::Birth, CertType::Marriage),
            anchor: (
                vocab.lookup(CertType::Birth, "Baby").unwrap(),
                vocab.lookup(CertType::Marriage, "Bride").unwrap(),
            ),
            relationship: RelationshipSpec::unrestricted(),
            window: Some(YearWindow::new(12, 999).unwrap()),
        }
    }

    #[test]
    fn score_relational_scores_admitted_edges() {
        // A birth and a marriage share a census and a death neighbor:
        // strong relational evidence for the Bride linkage type.
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[
                ("B1", CertType::Birth, 1870, &[("Baby", &[], None)]),
                ("M1", CertType::Marriage, 1890, &[("Bride", &[], None)]),
                ("C1", CertType::Census, 1881, HEAD),
                ("D1", CertType::Death, 1930, &[("Deceased", &[], None)]),
            ],
        );
        let links = scored_links(
            &store,
            &[
                ("B1.0", "M1.0", 0.9),
                ("B1.0", "C1.0", 0.8),
                ("M1.0", "C1.0", 0.8),
                ("B1.0", "D1.0", 0.7),
                ("M1.0", "D1.0", 0.7),
            ],
        );
        let g = build_graph(&links, &store).unwrap();
        let m_r = score_relational(
            &g,
            &store,
            RelationalMethod::Jaccard,
            &[bride_linkage(&vocab)],
            None,
            AssignmentMode::Greedy,
        )
        .unwrap();
        assert_eq!(m_r.len(), 1);
        let b1 = store.cert_by_ext_id("B1").unwrap();
        let m1 = store.cert_by_ext_id("M1").unwrap();
        let score = m_r.get(b1, m1, "birth_marriage_bride").unwrap();
        assert_eq!(score, 1.0, "both neighborhoods are {{C1, D1}}");
        assert_eq!(m_r.method(), "jaccard");
    }

    #[test]
    fn score_relational_empty_graph_gives_empty_set() {
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[("B1", CertType::Birth, 1870, &[("Baby", &[], None)])],
        );
        let g = build_graph(&LinkSet::new(0.4).unwrap(), &store).unwrap();
        let m_r = score_relational(
            &g,
            &store,
            RelationalMethod::Jaccard,
            &[bride_linkage(&vocab)],
            None,
            AssignmentMode::Greedy,
        )
        .unwrap();
        assert!(m_r.is_empty());
    }

    #[test]
    fn score_relational_applies_constraints() {
        // Two births compete for one death under a 1-to-1 constraint; the
        // birth sharing a census neighbor with the death wins.
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[
                ("B1", CertType::Birth, 1870, &[("Baby", &[], None)]),
                ("B2", CertType::Birth, 1872, &[("Baby", &[], None)]),
                ("D1", CertType::Death, 1930, &[("Deceased", &[], None)]),
                ("C1", CertType::Census, 1881, HEAD),
            ],
        );
        let links = scored_links(
            &store,
            &[
                ("B1.0", "D1.0", 0.9),
                ("B2.0", "D1.0", 0.9),
                ("B1.0", "C1.0", 0.8),
                ("D1.0", "C1.0", 0.8),
            ],
        );
        let g = build_graph(&links, &store).unwrap();
        let lt = LinkageType {
            name: "birth_death".into(),
            cert_types: (CertType::Birth, CertType::Death),
            anchor: (
                vocab.lookup(CertType::Birth, "Baby").unwrap(),
                vocab.lookup(CertType::Death, "Deceased").unwrap(),
            ),
            relationship: RelationshipSpec::unrestricted(),
            window: Some(YearWindow::new(-2, 999).unwrap()),
        };
        let mut table = LinkConstraintTable::new();
        table.set("birth_death", Cardinality::OneToOne);
        let m_r = score_relational(
            &g,
            &store,
            RelationalMethod::Jaccard,
            &[lt],
            Some(&table),
            AssignmentMode::Greedy,
        )
        .unwrap();
        let b1 = store.cert_by_ext_id("B1").unwrap();
        let b2 = store.cert_by_ext_id("B2").unwrap();
        let d1 = store.cert_by_ext_id("D1").unwrap();
        assert!(m_r.get(b1, d1, "birth_death").is_some());
        assert!(m_r.get(b2, d1, "birth_death").is_none());
        assert_eq!(m_r.len(), 1);
    }

    #[test]
    fn match_set_tsv_round_trip() {
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[
                ("B1", CertType::Birth, 1870, &[("Baby", &[], None)]),
                ("D1", CertType::Death, 1930, &[("Deceased", &[], None)]),
                ("D2", CertType::Death, 1931, &[("Deceased", &[], None)]),
            ],
        );
        let b1 = store.cert_by_ext_id("B1").unwrap();
        let d1 = store.cert_by_ext_id("D1").unwrap();
        let d2 = store.cert_by_ext_id("D2").unwrap();
        let mut set = CertificateMatchSet::new("jaccard");
        set.insert(b1, d2, "birth_death", 0.25);
        set.insert(b1, d1, "birth_death", 2.0 / 3.0);
        let mut buf = Vec::new();
        set.write_tsv(&store, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "cert_id_1\tcert_id_2\tlinkage_type\tmethod\tscore"
        );
        assert_eq!(lines.next().unwrap(), "B1\tD1\tbirth_death\tjaccard\t0.666667");
        assert_eq!(lines.next().unwrap(), "B1\tD2\tbirth_death\tjaccard\t0.250000");
        assert!(lines.next().is_none());
        let back = CertificateMatchSet::read_tsv(buf.as_slice(), &store).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn match_set_read_rejects_bad_input() {
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[("B1", CertType::Birth, 1870, &[("Baby", &[], None)])],
        );
        let unknown = "cert_id_1\tcert_id_2\tlinkage_type\tmethod\tscore\nB1\tZZ\tbirth_death\tjaccard\t0.5\n";
        assert!(matches!(
            CertificateMatchSet::read_tsv(unknown.as_bytes(), &store),
            Err(Error::Integrity(_))
        ));
        let bad_header = "cert_id_1\tcert_id_2\tscore\n";
        assert!(matches!(
            CertificateMatchSet::read_tsv(bad_header.as_bytes(), &store),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn method_names_round_trip() {
        for method in RelationalMethod::ALL {
            assert_eq!(RelationalMethod::parse(method.name()).unwrap(), method);
        }
        assert!(RelationalMethod::parse("cosine").is_err());
    }
}
