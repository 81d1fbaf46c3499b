//! The certificate graph G: vertices are certificates, edges bundle the
//! individual links bridging a certificate pair (input to relational and
//! group scoring).

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::ingest::RecordStore;
use crate::model::{CertId, CertType, RecordId, RoleId, RolePairSet, YearWindow};
use crate::pairwise::LinkSet;

/// Index of an edge in the graph's edge table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

/// Aggregates over the individual links of one edge, precomputed at build
/// because the relational functions reuse them heavily.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSummary {
    pub max: f64,
    pub sum: f64,
    pub multiplicity: usize,
}

impl EdgeSummary {
    pub fn mean(&self) -> f64 {
        if self.multiplicity == 0 {
            0.0
        } else {
            self.sum / self.multiplicity as f64
        }
    }

    fn from_links(links: &[(RecordId, RecordId, f64)]) -> EdgeSummary {
        let mut s = EdgeSummary { max: 0.0, sum: 0.0, multiplicity: links.len() };
        for &(_, _, score) in links {
            s.max = s.max.max(score);
            s.sum += score;
        }
        s
    }
}

/// One multi-edge: every individual link between two certificates.
#[derive(Debug, Clone)]
pub struct Edge {
    pub certs: (CertId, CertId),
    /// Individual links, each oriented so the first record belongs to
    /// `certs.0`; sorted by record ids for determinism.
    pub links: Vec<(RecordId, RecordId, f64)>,
    pub summary: EdgeSummary,
}

/// Which neighboring certificates count as relational evidence for a
/// linkage type. `None` filters mean "no restriction".
#[derive(Debug, Clone, Default)]
pub struct RelationshipSpec {
    pub cert_types: Option<BTreeSet<CertType>>,
    /// Unordered role pairs; an edge qualifies if any of its links carries
    /// one of them.
    pub role_pairs: Option<RolePairSet>,
}

impl RelationshipSpec {
    pub fn unrestricted() -> Self {
        RelationshipSpec::default()
    }

    pub fn is_unrestricted(&self) -> bool {
        self.cert_types.is_none() && self.role_pairs.is_none()
    }
}

/// One way two certificate types can refer to the same person: the anchor
/// role pair identifies that person on both sides.
#[derive(Debug, Clone)]
pub struct LinkageType {
    pub name: String,
    /// Certificate types of side 0 and side 1 (may be equal).
    pub cert_types: (CertType, CertType),
    /// Anchor roles: `anchor.0` on the side-0 certificate, `anchor.1` on
    /// the side-1 certificate.
    pub anchor: (RoleId, RoleId),
    pub relationship: RelationshipSpec,
    /// Optional window on `year(side 1) − year(side 0)`.
    pub window: Option<YearWindow>,
}

impl LinkageType {
    /// Anchor links of `edge` under this linkage type: links whose role
    /// pair is the anchor in an orientation whose certificate types and
    /// window admit the edge. Sorted by descending score, ids ascending.
    pub fn anchor_links(
        &self,
        edge: &Edge,
        store: &RecordStore,
    ) -> Vec<(RecordId, RecordId, f64)> {
        let cert_a = store.certificate(edge.certs.0);
        let cert_b = store.certificate(edge.certs.1);
        let mut out = Vec::new();
        // Orientation 1: certs.0 is side 0. Orientation 2: flipped.
        for (side0, side1, flip) in [
            (cert_a, cert_b, false),
            (cert_b, cert_a, true),
        ] {
            if (side0.cert_type, side1.cert_type) != self.cert_types {
                continue;
            }
            if let Some(w) = &self.window {
                if !w.contains(side1.event_year - side0.event_year) {
                    continue;
                }
            }
            for &(r0, r1, score) in &edge.links {
                let (s0, s1) = if flip { (r1, r0) } else { (r0, r1) };
                if store.record(s0).role == self.anchor.0 && store.record(s1).role == self.anchor.1
                {
                    out.push((s0, s1, score));
                }
            }
        }
        out.sort_by(|x, y| {
            y.2.partial_cmp(&x.2)
                .unwrap()
                .then_with(|| (x.0, x.1).cmp(&(y.0, y.1)))
        });
        out.dedup();
        out
    }

    /// Whether this linkage type applies to `edge`: an anchor link exists
    /// in an orientation passing certificate types and window.
    pub fn applies_to(&self, edge: &Edge, store: &RecordStore) -> bool {
        !self.anchor_links(edge, store).is_empty()
    }

    /// Certificate pair of `edge` oriented for this linkage type (side-0
    /// certificate first); ascending ids for same-type pairs. `None` when
    /// the linkage type does not apply.
    pub fn match_key(&self, edge: &Edge, store: &RecordStore) -> Option<(CertId, CertId)> {
        if !self.applies_to(edge, store) {
            return None;
        }
        let (a, b) = edge.certs;
        let types = (
            store.certificate(a).cert_type,
            store.certificate(b).cert_type,
        );
        if types == self.cert_types {
            Some((a, b))
        } else {
            Some((b, a))
        }
    }
}

/// The frozen certificate graph.
#[derive(Debug, Clone)]
pub struct CertificateGraph {
    edges: Vec<Edge>,
    /// Per vertex: (neighbor, edge) pairs sorted by neighbor id.
    adjacency: Vec<Vec<(CertId, EdgeId)>>,
}

/// Group the link set by certificate pair into the graph. Every vertex of
/// the store is present even when isolated.
pub fn build_graph(links: &LinkSet, store: &RecordStore) -> Result<CertificateGraph> {
    let mut by_pair: HashMap<(CertId, CertId), Vec<(RecordId, RecordId, f64)>> = HashMap::new();
    for ((a, b), score) in links.iter() {
        let ca = store.record(a).certificate;
        let cb = store.record(b).certificate;
        if ca == cb {
            return Err(Error::Integrity(format!(
                "link between records '{}' and '{}' of the same certificate",
                store.record(a).id,
                store.record(b).id
            )));
        }
        let (key, link) = if ca < cb { ((ca, cb), (a, b, score)) } else { ((cb, ca), (b, a, score)) };
        by_pair.entry(key).or_default().push(link);
    }
    let mut pairs: Vec<((CertId, CertId), Vec<(RecordId, RecordId, f64)>)> =
        by_pair.into_iter().collect();
    pairs.sort_by_key(|(k, _)| *k);
    let mut edges = Vec::with_capacity(pairs.len());
    let mut adjacency = vec![Vec::new(); store.certificate_count()];
    for (certs, mut links) in pairs {
        links.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let edge_id = EdgeId(edges.len() as u32);
        adjacency[certs.0 .0 as usize].push((certs.1, edge_id));
        adjacency[certs.1 .0 as usize].push((certs.0, edge_id));
        edges.push(Edge { certs, summary: EdgeSummary::from_links(&links), links });
    }
    for adj in &mut adjacency {
        adj.sort_by_key(|&(n, _)| n);
    }
    Ok(CertificateGraph { edges, adjacency })
}

impl CertificateGraph {
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| (EdgeId(i as u32), e))
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0 as usize]
    }

    fn check_vertex(&self, c: CertId) -> Result<()> {
        if (c.0 as usize) < self.adjacency.len() {
            Ok(())
        } else {
            Err(Error::Integrity(format!("unknown certificate vertex {}", c.0)))
        }
    }

    /// Unfiltered degree |N(c)| (used by the Adar-Adamic u function).
    pub fn degree(&self, c: CertId) -> usize {
        self.adjacency[c.0 as usize].len()
    }

    /// Adjacent certificates with their edges, ascending by neighbor id.
    pub fn adjacency(&self, c: CertId) -> &[(CertId, EdgeId)] {
        &self.adjacency[c.0 as usize]
    }

    pub fn edge_between(&self, a: CertId, b: CertId) -> Option<&Edge> {
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        self.adjacency[x.0 as usize]
            .iter()
            .find(|&&(n, _)| n == y)
            .map(|&(_, e)| self.edge(e))
    }

    /// Summary of an edge restricted to a relationship filter; `None` when
    /// no link qualifies (the edge does not count as evidence).
    pub fn filtered_summary(
        &self,
        edge: &Edge,
        viewed_from: CertId,
        spec: &RelationshipSpec,
        store: &RecordStore,
    ) -> Option<EdgeSummary> {
        let neighbor = if edge.certs.0 == viewed_from { edge.certs.1 } else { edge.certs.0 };
        if let Some(types) = &spec.cert_types {
            if !types.contains(&store.certificate(neighbor).cert_type) {
                return None;
            }
        }
        match &spec.role_pairs {
            None => Some(edge.summary),
            Some(pairs) => {
                let links: Vec<(RecordId, RecordId, f64)> = edge
                    .links
                    .iter()
                    .filter(|&&(a, b, _)| {
                        pairs.contains(store.record(a).role, store.record(b).role)
                    })
                    .copied()
                    .collect();
                (!links.is_empty()).then(|| EdgeSummary::from_links(&links))
            }
        }
    }

    /// Neighboring certificates of `c`, optionally restricted by a
    /// relationship filter.
    pub fn neighbors(
        &self,
        c: CertId,
        filter: Option<&RelationshipSpec>,
        store: &RecordStore,
    ) -> Result<BTreeSet<CertId>> {
        self.check_vertex(c)?;
        Ok(self
            .neighbor_summaries(c, filter.unwrap_or(&RelationshipSpec::default()), store)
            .into_iter()
            .map(|(n, _)| n)
            .collect())
    }

    /// Filtered neighbors of `c` with per-edge summaries, ascending by id.
    pub fn neighbor_summaries(
        &self,
        c: CertId,
        spec: &RelationshipSpec,
        store: &RecordStore,
    ) -> Vec<(CertId, EdgeSummary)> {
        self.adjacency[c.0 as usize]
            .iter()
            .filter_map(|&(n, e)| {
                self.filtered_summary(self.edge(e), c, spec, store)
                    .map(|s| (n, s))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit;

    fn linked(store: &RecordStore, pairs: &[(&str, &str, f64)]) -> LinkSet {
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

    #[test]
    fn groups_links_into_multi_edges_with_summaries() {
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[
                ("B1", CertType::Birth, 1870, &[
                    ("Baby", &[], None),
                    ("Mother", &[], None),
                ]),
                ("C1", CertType::Census, 1871, &[
                    ("Child", &[], None),
                    ("Spouse", &[], None),
                ]),
            ],
        );
        let links = linked(&store, &[("B1.0", "C1.0", 0.9), ("B1.1", "C1.1", 0.7)]);
        let g = build_graph(&links, &store).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
        let edge = g.edge_between(
            store.cert_by_ext_id("B1").unwrap(),
            store.cert_by_ext_id("C1").unwrap(),
        )
        .unwrap();
        assert_eq!(edge.summary.multiplicity, 2);
        assert!((edge.summary.max - 0.9).abs() < 1e-12);
        assert!((edge.summary.mean() - 0.8).abs() < 1e-12);
        // Links oriented so the first record belongs to the lower cert id.
        for &(a, b, _) in &edge.links {
            assert_eq!(store.record(a).certificate, edge.certs.0);
            assert_eq!(store.record(b).certificate, edge.certs.1);
        }
    }

    #[test]
    fn empty_link_set_gives_isolated_vertices() {
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[
                ("B1", CertType::Birth, 1870, &[("Baby", &[], None)]),
                ("D1", CertType::Death, 1880, &[("Deceased", &[], None)]),
            ],
        );
        let g = build_graph(&LinkSet::new(0.4).unwrap(), &store).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 0);
        let b1 = store.cert_by_ext_id("B1").unwrap();
        assert!(g.neighbors(b1, None, &store).unwrap().is_empty());
        assert_eq!(g.degree(b1), 0);
    }

    #[test]
    fn triangle_has_symmetric_neighbors() {
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[
                ("B1", CertType::Birth, 1870, &[("Baby", &[], None)]),
                ("C1", CertType::Census, 1871, &[("Child", &[], None)]),
                ("D1", CertType::Death, 1890, &[("Deceased", &[], None)]),
            ],
        );
        let links = linked(
            &store,
            &[("B1.0", "C1.0", 0.8), ("B1.0", "D1.0", 0.7), ("C1.0", "D1.0", 0.6)],
        );
        let g = build_graph(&links, &store).unwrap();
        assert_eq!(g.edge_count(), 3);
        let ids: Vec<CertId> = ["B1", "C1", "D1"]
            .iter()
            .map(|e| store.cert_by_ext_id(e).unwrap())
            .collect();
        for &c in &ids {
            assert_eq!(g.degree(c), 2);
            for n in g.neighbors(c, None, &store).unwrap() {
                assert!(g.neighbors(n, None, &store).unwrap().contains(&c), "symmetry");
            }
        }
        let total: usize = g.edges().map(|(_, e)| e.summary.multiplicity).sum();
        assert_eq!(total, links.len());
    }

    #[test]
    fn same_certificate_link_is_integrity_error() {
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[("B1", CertType::Birth, 1870, &[("Baby", &[], None), ("Mother", &[], None)])],
        );
        let links = linked(&store, &[("B1.0", "B1.1", 0.9)]);
        assert!(build_graph(&links, &store).is_err());
    }

    #[test]
    fn relationship_filter_restricts_neighbor_types() {
        // A birth linked to a census and a death; census-only filter keeps
        // the census neighbor.
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[
                ("B1", CertType::Birth, 1870, &[("Baby", &[], None)]),
                ("C1", CertType::Census, 1871, &[("Child", &[], None)]),
                ("D1", CertType::Death, 1890, &[("Deceased", &[], None)]),
            ],
        );
        let links = linked(&store, &[("B1.0", "C1.0", 0.8), ("B1.0", "D1.0", 0.7)]);
        let g = build_graph(&links, &store).unwrap();
        let spec = RelationshipSpec {
            cert_types: Some([CertType::Census].into_iter().collect()),
            role_pairs: None,
        };
        let b1 = store.cert_by_ext_id("B1").unwrap();
        let filtered = g.neighbors(b1, Some(&spec), &store).unwrap();
        assert_eq!(filtered.len(), 1);
        assert!(filtered.contains(&store.cert_by_ext_id("C1").unwrap()));
        let unfiltered = g.neighbors(b1, None, &store).unwrap();
        assert_eq!(unfiltered.len(), 2);
    }

    #[test]
    fn anchor_links_respect_roles_window_and_orientation() {
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[
                ("B1", CertType::Birth, 1870, &[("Baby", &[], None), ("Mother", &[], None)]),
                ("D1", CertType::Death, 1890, &[("Deceased", &[], None)]),
                ("D2", CertType::Death, 1867, &[("Deceased", &[], None)]),
            ],
        );
        let baby = vocab.lookup(CertType::Birth, "Baby").unwrap();
        let deceased = vocab.lookup(CertType::Death, "Deceased").unwrap();
        let lt = LinkageType {
            name: "birth_death".into(),
            cert_types: (CertType::Birth, CertType::Death),
            anchor: (baby, deceased),
            relationship: RelationshipSpec::unrestricted(),
            window: Some(YearWindow::new(-2, 999).unwrap()),
        };
        let links = linked(
            &store,
            &[("B1.0", "D1.0", 0.9), ("B1.1", "D1.0", 0.8), ("B1.0", "D2.0", 0.9)],
        );
        let g = build_graph(&links, &store).unwrap();
        let b1 = store.cert_by_ext_id("B1").unwrap();
        let d1 = store.cert_by_ext_id("D1").unwrap();
        let d2 = store.cert_by_ext_id("D2").unwrap();
        // Baby–Deceased anchor qualifies; Mother–Deceased link does not.
        let e1 = g.edge_between(b1, d1).unwrap();
        let anchors = lt.anchor_links(e1, &store);
        assert_eq!(anchors.len(), 1);
        assert_eq!(anchors[0].2, 0.9);
        assert_eq!(store.record(anchors[0].0).role, baby);
        assert!(lt.applies_to(e1, &store));
        // D2 is 3 years before the birth: outside the window.
        let e2 = g.edge_between(b1, d2).unwrap();
        assert!(lt.anchor_links(e2, &store).is_empty());
        assert!(!lt.applies_to(e2, &store));
    }

    #[test]
    fn role_pair_filter_recomputes_summary() {
        let vocab = testkit::vocab();
        let store = testkit::store_from(
            &vocab,
            &[
                ("B1", CertType::Birth, 1870, &[("Baby", &[], None), ("Mother", &[], None)]),
                ("C1", CertType::Census, 1871, &[("Child", &[], None), ("Spouse", &[], None)]),
            ],
        );
        let links = linked(&store, &[("B1.0", "C1.0", 0.6), ("B1.1", "C1.1", 0.9)]);
        let g = build_graph(&links, &store).unwrap();
        let baby = vocab.lookup(CertType::Birth, "Baby").unwrap();
        let child = vocab.lookup(CertType::Census, "Child").unwrap();
        let mut pairs = RolePairSet::new();
        pairs.insert(baby, child);
        let spec = RelationshipSpec { cert_types: None, role_pairs: Some(pairs) };
        let b1 = store.cert_by_ext_id("B1").unwrap();
        let summaries = g.neighbor_summaries(b1, &spec, &store);
        assert_eq!(summaries.len(), 1);
        let s = summaries[0].1;
        assert_eq!(s.multiplicity, 1);
        assert!((s.max - 0.6).abs() < 1e-12);
        // The Baby–Spouse direction is absent, so a disjoint filter drops
        // the edge entirely.
        let spouse = vocab.lookup(CertType::Census, "Spouse").unwrap();
        let mut other = RolePairSet::new();
        other.insert(baby, spouse);
        let spec2 = RelationshipSpec { cert_types: None, role_pairs: Some(other) };
        assert!(g.neighbor_summaries(b1, &spec2, &store).is_empty());
    }
}
