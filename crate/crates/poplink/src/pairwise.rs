//! Pipeline step 3: attribute-by-attribute comparison of candidate record
//! pairs, aggregated to one similarity per pair, thresholded at `s_m`.
//!
//! This stage deliberately aims for high recall: `s_m` is low by default
//! and precision comes later from relational/group evidence.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::comparators::{ComparatorSpec, SimilarityScore};
use crate::error::{Error, Result};
use crate::ingest::RecordStore;
use crate::model::{IndividualRecord, RecordId};

/// What to do when an attribute value is missing on exactly one side of a
/// pair. Attributes absent from both records carry no evidence and are
/// skipped under either policy (identical records must always score 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingValuePolicy {
    /// Count the attribute with similarity 0 at full weight.
    IncludeAsZero,
    /// Drop the attribute from both numerator and denominator.
    ExcludeAttribute,
}

/// Per-attribute weights for the aggregate record similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum AttributeWeighting {
    /// Every attribute weighs 1.0.
    Uniform,
    /// Weights estimated from linked data; absent entries default to 1.0.
    Trained { weights: BTreeMap<String, f64> },
}

impl AttributeWeighting {
    pub fn weight(&self, attribute: &str) -> f64 {
        match self {
            AttributeWeighting::Uniform => 1.0,
            AttributeWeighting::Trained { weights } => {
                weights.get(attribute).copied().unwrap_or(1.0)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let AttributeWeighting::Trained { weights } = self {
            for (attr, w) in weights {
                if !w.is_finite() || *w < 0.0 {
                    return Err(Error::Config(format!(
                        "trained weight for '{attr}' must be finite and non-negative, got {w}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Weighted mean over per-attribute comparisons; the core of
/// [`record_pair_sim`], exposed for property testing. Each part is
/// `(similarity if both values present, weight)`.
pub fn aggregate_parts<I>(parts: I, policy: MissingValuePolicy) -> SimilarityScore
where
    I: IntoIterator<Item = (Option<SimilarityScore>, f64)>,
{
    let mut num = 0.0;
    let mut denom = 0.0;
    for (sim, weight) in parts {
        match sim {
            Some(s) => {
                num += weight * s;
                denom += weight;
            }
            None => {
                if policy == MissingValuePolicy::IncludeAsZero {
                    denom += weight;
                }
            }
        }
    }
    if denom == 0.0 {
        0.0
    } else {
        num / denom
    }
}

/// Aggregate similarity of two records over the configured comparators
/// under the given weighting and missing-value policy. Symmetric, in
/// [0, 1], and 1 for records with identical attribute maps.
pub fn record_pair_sim(
    r1: &IndividualRecord,
    r2: &IndividualRecord,
    comparators: &BTreeMap<String, ComparatorSpec>,
    weighting: &AttributeWeighting,
    policy: MissingValuePolicy,
) -> SimilarityScore {
    aggregate_parts(
        comparators.iter().filter_map(|(attr, spec)| {
            let weight = weighting.weight(attr);
            match (r1.attr(attr), r2.attr(attr)) {
                (Some(a), Some(b)) => Some((Some(spec.compare(a, b)), weight)),
                // Absent on one side: the policy decides.
                (Some(_), None) | (None, Some(_)) => Some((None, weight)),
                // Absent on both sides: no evidence, skipped.
                (None, None) => None,
            }
        }),
        policy,
    )
}

/// Round a score to the 6-decimal precision of the serialized artifacts.
///
/// Scores are quantized when they enter a link or match set so that
/// writing and re-reading a TSV is the identity, which in turn makes a
/// resumed pipeline byte-identical to a fresh one.
pub fn quantize(score: f64) -> f64 {
    (score * 1e6).round() / 1e6
}

/// The high-recall individual link set S: canonical record pairs with
/// similarity ≥ `s_m`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkSet {
    entries: BTreeMap<(RecordId, RecordId), SimilarityScore>,
    threshold: f64,
}

impl LinkSet {
    pub fn new(threshold: f64) -> Result<LinkSet> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Config(format!(
                "similarity threshold s_m={threshold} outside [0, 1]"
            )));
        }
        Ok(LinkSet { entries: BTreeMap::new(), threshold })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Insert a scored pair; pairs below the threshold are ignored.
    pub fn insert(&mut self, a: RecordId, b: RecordId, score: SimilarityScore) {
        debug_assert!(a != b, "self-link");
        let score = quantize(score);
        if score >= self.threshold {
            let key = if a < b { (a, b) } else { (b, a) };
            self.entries.insert(key, score);
        }
    }

    pub fn get(&self, a: RecordId, b: RecordId) -> Option<SimilarityScore> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.entries.get(&key).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((RecordId, RecordId), SimilarityScore)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Serialize as the inter-stage TSV: `record_id_1`, `record_id_2`,
    /// `similarity` (6 decimal places), rows sorted by external record ids.
    pub fn write_tsv<W: Write>(&self, store: &RecordStore, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
        w.write_record(["record_id_1", "record_id_2", "similarity"])?;
        let mut rows: Vec<(&str, &str, f64)> = self
            .entries
            .iter()
            .map(|(&(a, b), &score)| {
                let (ea, eb) = (store.record(a).id.as_str(), store.record(b).id.as_str());
                if ea <= eb {
                    (ea, eb, score)
                } else {
                    (eb, ea, score)
                }
            })
            .collect();
        rows.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        for (a, b, score) in rows {
            w.write_record([a, b, &format!("{score:.6}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parse a LinkSet TSV produced by [`LinkSet::write_tsv`].
    pub fn read_tsv<R: Read>(reader: R, store: &RecordStore, threshold: f64) -> Result<LinkSet> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .has_headers(true)
            .from_reader(reader);
        let mut set = LinkSet::new(threshold)?;
        for row in rdr.records() {
            let row = row?;
            let a = store
                .record_by_ext_id(&row[0])
                .ok_or_else(|| Error::Integrity(format!("unknown record id '{}'", &row[0])))?;
            let b = store
                .record_by_ext_id(&row[1])
                .ok_or_else(|| Error::Integrity(format!("unknown record id '{}'", &row[1])))?;
            let score: f64 = row[2]
                .parse()
                .map_err(|_| Error::Schema(format!("bad similarity '{}'", &row[2])))?;
            set.insert(a, b, score);
        }
        Ok(set)
    }
}

/// Score all candidates and keep those at or above `s_m`.
pub fn build_link_set<F>(
    candidates: &[(RecordId, RecordId)],
    scorer: F,
    s_m: f64,
) -> Result<LinkSet>
where
    F: Fn(RecordId, RecordId) -> SimilarityScore + Sync,
{
    use rayon::prelude::*;
    let mut set = LinkSet::new(s_m)?;
    let scored: Vec<SimilarityScore> = candidates
        .par_iter()
        .map(|&(a, b)| scorer(a, b))
        .collect();
    for (&(a, b), &score) in candidates.iter().zip(scored.iter()) {
        set.insert(a, b, score);
    }
    Ok(set)
}

/// Estimate attribute weights from ground-truth entity ids in the store:
/// per attribute, `max(0, mean similarity over matched record pairs − mean
/// over an equal-sized random non-matched sample)`, renormalized to mean 1.
/// Deterministic for a fixed seed.
pub fn train_weights(
    store: &RecordStore,
    comparators: &BTreeMap<String, ComparatorSpec>,
    sample_size: usize,
    seed: u64,
) -> Result<AttributeWeighting> {
    if sample_size == 0 {
        return Err(Error::Config("train_weights sample_size must be positive".into()));
    }
    let mut by_entity: BTreeMap<&str, Vec<RecordId>> = BTreeMap::new();
    for (id, record) in store.records() {
        if let Some(entity) = &record.entity {
            by_entity.entry(entity).or_default().push(id);
        }
    }
    let mut matched: Vec<(RecordId, RecordId)> = Vec::new();
    for ids in by_entity.values() {
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                matched.push((a, b));
            }
        }
    }
    if matched.is_empty() {
        return Err(Error::Config(
            "no linked record pairs available for weight training; use uniform weighting".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if matched.len() > sample_size {
        matched = matched
            .choose_multiple(&mut rng, sample_size)
            .copied()
            .collect();
    }
    let n_records = store.record_count();
    let mut random: Vec<(RecordId, RecordId)> = Vec::with_capacity(matched.len());
    let mut attempts = 0usize;
    while random.len() < matched.len() && attempts < matched.len() * 1000 {
        attempts += 1;
        let a = RecordId(rng.gen_range(0..n_records) as u32);
        let b = RecordId(rng.gen_range(0..n_records) as u32);
        if a == b || store.record(a).certificate == store.record(b).certificate {
            continue;
        }
        let (ra, rb) = (store.record(a), store.record(b));
        if ra.entity.is_some() && ra.entity == rb.entity {
            continue;
        }
        random.push((a, b));
    }
    if random.is_empty() {
        return Err(Error::Config(
            "could not sample non-matched pairs for weight training".into(),
        ));
    }

    let mean_per_attr = |pairs: &[(RecordId, RecordId)]| -> BTreeMap<String, f64> {
        let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for &(a, b) in pairs {
            let (ra, rb) = (store.record(a), store.record(b));
            for (attr, spec) in comparators {
                if let (Some(va), Some(vb)) = (ra.attr(attr), rb.attr(attr)) {
                    let entry = sums.entry(attr.clone()).or_insert((0.0, 0));
                    entry.0 += spec.compare(va, vb);
                    entry.1 += 1;
                }
            }
        }
        sums.into_iter()
            .map(|(attr, (sum, n))| (attr, if n == 0 { 0.0 } else { sum / n as f64 }))
            .collect()
    };
    let matched_means = mean_per_attr(&matched);
    let random_means = mean_per_attr(&random);

    let mut weights: BTreeMap<String, f64> = comparators
        .keys()
        .map(|attr| {
            let m = matched_means.get(attr).copied().unwrap_or(0.0);
            let r = random_means.get(attr).copied().unwrap_or(0.0);
            (attr.clone(), (m - r).max(0.0))
        })
        .collect();
    let total: f64 = weights.values().sum();
    if total > 0.0 {
        let scale = weights.len() as f64 / total;
        for w in weights.values_mut() {
            *w *= scale;
        }
    } else {
        // No attribute discriminates; fall back to uniform weights.
        for w in weights.values_mut() {
            *w = 1.0;
        }
    }
    Ok(AttributeWeighting::Trained { weights })
}
