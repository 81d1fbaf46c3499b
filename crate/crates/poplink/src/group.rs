//! Group similarity between certificates: five functions over the set of
//! individual links bridging a certificate pair, producing the group match
//! set M_G.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{enforce, AssignmentMode};
use crate::error::{Error, Result};
use crate::graph::{CertificateGraph, LinkageType};
use crate::ingest::RecordStore;
use crate::model::{Certificate, LinkConstraintTable};
use crate::relational::CertificateMatchSet;

/// The five group similarity functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupMethod {
    Maximum,
    Average,
    GroupSize,
    GroupBipartite,
    Combined,
}

impl GroupMethod {
    pub const ALL: [GroupMethod; 5] = [
        GroupMethod::Maximum,
        GroupMethod::Average,
        GroupMethod::GroupSize,
        GroupMethod::GroupBipartite,
        GroupMethod::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GroupMethod::Maximum => "maximum",
            GroupMethod::Average => "average",
            GroupMethod::GroupSize => "group_size",
            GroupMethod::GroupBipartite => "group_bipartite",
            GroupMethod::Combined => "combined",
        }
    }

    pub fn parse(s: &str) -> Result<GroupMethod> {
        GroupMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown group method '{s}'")))
    }
}

impl fmt::Display for GroupMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// All five group similarities of one certificate pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupScores {
    pub s_max: f64,
    pub s_avr: f64,
    pub s_size: f64,
    pub s_grp: f64,
    pub s_comb: f64,
}

impl GroupScores {
    pub fn select(&self, method: GroupMethod) -> f64 {
        match method {
            GroupMethod::Maximum => self.s_max,
            GroupMethod::Average => self.s_avr,
            GroupMethod::GroupSize => self.s_size,
            GroupMethod::GroupBipartite => self.s_grp,
            GroupMethod::Combined => self.s_comb,
        }
    }
}

/// Group similarities from the certificate member counts and the
/// individual link scores S between the two certificates.
///
/// Before constraints are applied one member may link to several
/// candidates, so |S| may exceed min(|c1|, |c2|); the size-based scores
/// are clamped to 1 in that regime. |S| ≥ |c1|+|c2| would make the
/// bipartite denominator non-positive and is rejected.
pub fn group_scores_for_sizes(size1: usize, size2: usize, links: &[f64]) -> Result<GroupScores> {
    if links.is_empty() {
        return Err(Error::Integrity(
            "group scoring requires at least one individual link".into(),
        ));
    }
    if links.len() >= size1 + size2 {
        return Err(Error::Integrity(format!(
            "{} links between certificates with {size1} + {size2} members",
            links.len()
        )));
    }
    debug_assert!(links.iter().all(|s| (0.0..=1.0).contains(s)));
    let count = links.len() as f64;
    let sum: f64 = links.iter().sum();
    let s_max = links.iter().fold(0.0f64, |a, &b| a.max(b));
    let s_avr = sum / count;
    let s_size = (count / size1.max(size2) as f64).min(1.0);
    let s_grp = (sum / (size1 + size2 - links.len()) as f64).min(1.0);
    let s_comb = (s_max + s_avr + s_size + s_grp) / 4.0;
    Ok(GroupScores { s_max, s_avr, s_size, s_grp, s_comb })
}

/// As [`group_scores_for_sizes`] with sizes taken from the certificates.
pub fn group_scores(c1: &Certificate, c2: &Certificate, links: &[f64]) -> Result<GroupScores> {
    group_scores_for_sizes(c1.members.len(), c2.members.len(), links)
}

/// Score every edge admitted by each linkage type with `method`, then
/// optionally enforce cardinality constraints per linkage type.
pub fn score_group(
    g: &CertificateGraph,
    store: &RecordStore,
    method: GroupMethod,
    linkage_types: &[LinkageType],
    constraints: Option<&LinkConstraintTable>,
    mode: AssignmentMode,
) -> Result<CertificateMatchSet> {
    let edges: Vec<_> = g.edges().collect();
    let scored: Vec<Vec<_>> = edges
        .par_iter()
        .map(|(_, edge)| {
            let mut rows = Vec::new();
            for lt in linkage_types {
                if let Some((c1, c2)) = lt.match_key(edge, store) {
                    let mut link_scores: Vec<f64> =
                        edge.links.iter().map(|&(_, _, s)| s).collect();
                    // Densely linked pairs can carry |S| ≥ |c1|+|c2|
                    // individual links (up to |c1|·|c2|), where the
                    // bipartite denominator degenerates; keep the
                    // strongest links inside the defined regime. Only the
                    // multiset of scores matters, so this stays
                    // deterministic.
                    let cap = store.certificate(c1).members.len()
                        + store.certificate(c2).members.len()
                        - 1;
                    if link_scores.len() > cap {
                        link_scores.sort_unstable_by(|a, b| b.total_cmp(a));
                        link_scores.truncate(cap);
                    }
                    let scores = group_scores(
                        store.certificate(c1),
                        store.certificate(c2),
                        &link_scores,
                    )?;
                    rows.push((c1, c2, lt.name.as_str(), scores.select(method)));
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut set = CertificateMatchSet::new(method.name());
    for rows in scored {
        for (c1, c2, lt, score) in rows {
            set.insert(c1, c2, lt, score);
        }
    }
    match constraints {
        Some(table) => enforce(set, table, mode, store),
        None => Ok(set),
    }
}
