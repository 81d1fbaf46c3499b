//! Score fusion: combine the relational and group match sets into the
//! final match set M_F over their intersection, then assemble the matched
//! certificates into life segments.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use pathfinding::undirected::connected_components::components;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CertificateGraph, LinkageType};
use crate::ingest::RecordStore;
use crate::model::{
    first_violation, order_by_event_year, LifeSegment, RecordId, RolePairSet,
    TemporalConstraintTable,
};
use crate::relational::CertificateMatchSet;

/// Weights and threshold for combining relational and group scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    pub w_r: f64,
    pub w_g: f64,
    pub s_t: f64,
}

impl FusionParams {
    pub fn new(w_r: f64, w_g: f64, s_t: f64) -> Result<FusionParams> {
        let p = FusionParams { w_r, w_g, s_t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_r.is_finite() && self.w_g.is_finite() && self.s_t.is_finite()) {
            return Err(Error::Config("fusion parameters must be finite".into()));
        }
        if self.w_r < 0.0 || self.w_g < 0.0 {
            return Err(Error::Config("fusion weights must be non-negative".into()));
        }
        if (self.w_r + self.w_g - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "fusion weights must sum to 1, got {} + {}",
                self.w_r, self.w_g
            )));
        }
        if !(0.0..=1.0).contains(&self.s_t) {
            return Err(Error::Config(format!(
                "fusion threshold {} outside [0, 1]",
                self.s_t
            )));
        }
        Ok(())
    }
}

/// M_F: certificate pairs present in both match sets whose weighted score
/// reaches the fusion threshold (boundary inclusive).
pub fn fuse(
    m_r: &CertificateMatchSet,
    m_g: &CertificateMatchSet,
    params: &FusionParams,
) -> Result<CertificateMatchSet> {
    params.validate()?;
    let mut out = CertificateMatchSet::new("fused");
    for (c1, c2, lt, sim_r) in m_r.iter() {
        if let Some(sim_g) = m_g.get(c1, c2, lt) {
            let fused = params.w_r * sim_r + params.w_g * sim_g;
            if fused >= params.s_t {
                out.insert(c1, c2, lt, fused);
            }
        }
    }
    Ok(out)
}

/// One record-level link materialized from a matched certificate pair.
type SegmentLink = (RecordId, RecordId, f64);

/// Group the records of one connected part and its internal links.
fn split_into_components(
    records: &BTreeSet<RecordId>,
    links: &[SegmentLink],
) -> Vec<(BTreeSet<RecordId>, Vec<SegmentLink>)> {
    let groups: Vec<Vec<RecordId>> = links.iter().map(|&(a, b, _)| vec![a, b]).collect();
    let mut parts: Vec<BTreeSet<RecordId>> = components(&groups)
        .into_iter()
        .map(|set| set.into_iter().collect())
        .collect();
    // Records isolated by link removal become their own parts.
    let connected: BTreeSet<RecordId> = parts.iter().flatten().copied().collect();
    for &r in records {
        if !connected.contains(&r) {
            parts.push(BTreeSet::from([r]));
        }
    }
    parts.sort_by_key(|part| *part.first().expect("non-empty component"));
    parts
        .into_iter()
        .map(|part| {
            let inner: Vec<SegmentLink> = links
                .iter()
                .filter(|&&(a, _, _)| part.contains(&a))
                .copied()
                .collect();
            (part, inner)
        })
        .collect()
}

/// Turn the fused match set into record-level links between anchor-role
/// records, take connected components, and repair any component violating
/// the segment invariants by removing its lowest-scored link. Every record
/// of the store ends up in exactly one segment.
pub fn assemble_life_segments(
    m_f: &CertificateMatchSet,
    g: &CertificateGraph,
    store: &RecordStore,
    linkage_types: &[LinkageType],
    role_pairs: &RolePairSet,
    temporal: &TemporalConstraintTable,
) -> Result<Vec<LifeSegment>> {
    let by_name: BTreeMap<&str, &LinkageType> =
        linkage_types.iter().map(|lt| (lt.name.as_str(), lt)).collect();
    let mut links: Vec<SegmentLink> = Vec::new();
    for (c1, c2, lt_name, score) in m_f.iter() {
        let lt = by_name.get(lt_name).ok_or_else(|| {
            Error::Config(format!("match set names unknown linkage type '{lt_name}'"))
        })?;
        let edge = g.edge_between(c1, c2).ok_or_else(|| {
            Error::Integrity(format!(
                "matched pair {} / {} has no edge in the graph",
                store.certificate(c1).id,
                store.certificate(c2).id
            ))
        })?;
        let anchors = lt.anchor_links(edge, store);
        let &(r1, r2, _) = anchors.first().ok_or_else(|| {
            Error::Integrity(format!(
                "matched pair {} / {} has no anchor link for '{lt_name}'",
                store.certificate(c1).id,
                store.certificate(c2).id
            ))
        })?;
        links.push((r1, r2, score));
    }

    let linked_records: BTreeSet<RecordId> =
        links.iter().flat_map(|&(a, b, _)| [a, b]).collect();
    let mut segments: Vec<LifeSegment> = Vec::new();
    let mut worklist = split_into_components(&linked_records, &links);
    while let Some((records, mut inner)) = worklist.pop() {
        if records.len() == 1 {
            let r = *records.first().expect("non-empty component");
            segments.push(LifeSegment::singleton(store.segment_member(r)));
            continue;
        }
        let members = order_by_event_year(
            records.iter().map(|&r| store.segment_member(r)).collect(),
        );
        if first_violation(&members, role_pairs, temporal).is_none() {
            segments.push(LifeSegment::new(members, role_pairs, temporal)?);
            continue;
        }
        // Drop the weakest link (ties: largest record-id pair) and retry
        // the resulting parts.
        let weakest = inner
            .iter()
            .enumerate()
            .min_by(|(_, x), (_, y)| {
                x.2.partial_cmp(&y.2)
                    .expect("finite scores")
                    .then_with(|| {
                        let kx = (&store.record(x.0).id, &store.record(x.1).id);
                        let ky = (&store.record(y.0).id, &store.record(y.1).id);
                        ky.cmp(&kx)
                    })
            })
            .map(|(i, _)| i)
            .expect("invalid multi-record component must have links");
        inner.swap_remove(weakest);
        worklist.extend(split_into_components(&records, &inner));
    }

    for (r, _) in store.records() {
        if !linked_records.contains(&r) {
            segments.push(LifeSegment::singleton(store.segment_member(r)));
        }
    }
    segments.sort_by(|a, b| a.members()[0].record_id.cmp(&b.members()[0].record_id));
    Ok(segments)
}

/// Serialize segments as one row per member.
pub fn write_segments_tsv<W: Write>(segments: &[LifeSegment], writer: &mut W) -> Result<()> {
    writeln!(
        writer,
        "segment_id\tposition\trecord_id\tcertificate_id\tevent_year"
    )?;
    for (sid, segment) in segments.iter().enumerate() {
        for (pos, m) in segment.members().iter().enumerate() {
            writeln!(
                writer,
                "{sid}\t{pos}\t{}\t{}\t{}",
                m.record_id, m.certificate_id, m.event_year
            )?;
        }
    }
    Ok(())
}
