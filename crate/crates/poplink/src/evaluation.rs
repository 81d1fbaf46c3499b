//! Precision/recall/AUC-PR scoring of an automatic certificate match set
//! against a manually (or synthetically) produced gold link set.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::RecordStore;
use crate::model::CertId;
use crate::relational::CertificateMatchSet;

/// Ground-truth certificate links. Pairs are stored in canonical (ascending
/// certificate id) order; a pair may carry any number of link-type labels,
/// or none.
#[derive(Debug, Clone, Default)]
pub struct GoldLinkSet {
    pairs: BTreeMap<(CertId, CertId), BTreeSet<String>>,
}

impl GoldLinkSet {
    pub fn new() -> GoldLinkSet {
        GoldLinkSet::default()
    }

    /// Add one gold pair, optionally labeled with a link type. The same
    /// pair may be inserted once per distinct label; exact duplicates are
    /// an integrity error, as is a self-pair.
    pub fn insert(&mut self, c1: CertId, c2: CertId, label: Option<&str>) -> Result<()> {
        if c1 == c2 {
            return Err(Error::Integrity(format!(
                "gold link pairs a certificate with itself (cert index {})",
                c1.0
            )));
        }
        let key = if c1 < c2 { (c1, c2) } else { (c2, c1) };
        match label {
            Some(l) => {
                // A pair is either unlabeled or labeled; an empty label set
                // marks an earlier unlabeled insert.
                if self.pairs.get(&key).is_some_and(BTreeSet::is_empty) {
                    return Err(Error::Integrity(format!(
                        "gold link ({}, {}) mixes labeled and unlabeled rows",
                        key.0 .0, key.1 .0
                    )));
                }
                if !self.pairs.entry(key).or_default().insert(l.to_string()) {
                    return Err(Error::Integrity(format!(
                        "duplicate gold link ({}, {}, {l})",
                        key.0 .0, key.1 .0
                    )));
                }
            }
            None => {
                if self.pairs.contains_key(&key) {
                    return Err(Error::Integrity(format!(
                        "duplicate gold link ({}, {})",
                        key.0 .0, key.1 .0
                    )));
                }
                self.pairs.insert(key, BTreeSet::new());
            }
        }
        Ok(())
    }

    /// Number of distinct gold certificate pairs.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains_pair(&self, c1: CertId, c2: CertId) -> bool {
        let key = if c1 < c2 { (c1, c2) } else { (c2, c1) };
        self.pairs.contains_key(&key)
    }

    /// Labels recorded for a pair; empty when the pair is unlabeled or
    /// absent.
    pub fn labels(&self, c1: CertId, c2: CertId) -> Option<&BTreeSet<String>> {
        let key = if c1 < c2 { (c1, c2) } else { (c2, c1) };
        self.pairs.get(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((CertId, CertId), &BTreeSet<String>)> {
        self.pairs.iter().map(|(&k, v)| (k, v))
    }

    /// Total number of (pair, label) combinations; unlabeled pairs count
    /// once. This is the gold total under strict matching.
    pub fn labeled_len(&self) -> usize {
        self.pairs.values().map(|l| l.len().max(1)).sum()
    }

    /// True when every pair carries at least one label.
    pub fn fully_labeled(&self) -> bool {
        self.pairs.values().all(|l| !l.is_empty())
    }
}

/// Parse a gold link TSV: `cert_id_1\tcert_id_2` with an optional third
/// `link_type` column. Certificate ids must resolve in the store.
pub fn read_gold_tsv<R: Read>(reader: R, store: &RecordStore) -> Result<GoldLinkSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let labeled = match headers.iter().collect::<Vec<_>>().as_slice() {
        ["cert_id_1", "cert_id_2"] => false,
        ["cert_id_1", "cert_id_2", "link_type"] => true,
        other => {
            return Err(Error::Schema(format!(
                "gold link file header {other:?}, expected cert_id_1, cert_id_2[, link_type]"
            )))
        }
    };
    let mut gold = GoldLinkSet::new();
    for row in rdr.records() {
        let row = row?;
        let resolve = |ext: &str| {
            store.cert_by_ext_id(ext).ok_or_else(|| {
                Error::Integrity(format!("gold link references unknown certificate '{ext}'"))
            })
        };
        let c1 = resolve(&row[0])?;
        let c2 = resolve(&row[1])?;
        let label = if labeled {
            let l = row[2].trim();
            if l.is_empty() {
                return Err(Error::Schema(format!(
                    "empty link_type for gold pair {} / {}",
                    &row[0], &row[1]
                )));
            }
            Some(l.to_string())
        } else {
            None
        };
        gold.insert(c1, c2, label.as_deref())?;
    }
    Ok(gold)
}

/// tp / fp / fn counts of an automatic match set against gold. Lenient
/// matching compares unordered certificate pairs and ignores link-type
/// labels (several linkage types over one pair collapse to one
/// prediction); strict matching compares (pair, label) combinations and
/// requires a fully labeled gold set.
pub fn confusion(
    auto: &CertificateMatchSet,
    gold: &GoldLinkSet,
    strict: bool,
) -> Result<(usize, usize, usize)> {
    if strict && !gold.fully_labeled() {
        return Err(Error::Evaluation(
            "strict evaluation needs link_type labels on every gold pair".into(),
        ));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut matched_gold = 0usize;
    if strict {
        let mut seen: BTreeSet<(CertId, CertId, String)> = BTreeSet::new();
        for (c1, c2, lt, _) in auto.iter() {
            let key = canonical(c1, c2);
            if !seen.insert((key.0, key.1, lt.to_string())) {
                continue;
            }
            match gold.labels(c1, c2) {
                Some(labels) if labels.contains(lt) => tp += 1,
                _ => fp += 1,
            }
        }
        matched_gold = tp;
        let fn_count = gold.labeled_len() - matched_gold;
        return Ok((tp, fp, fn_count));
    }
    let mut seen: BTreeSet<(CertId, CertId)> = BTreeSet::new();
    for (c1, c2, _, _) in auto.iter() {
        if !seen.insert(canonical(c1, c2)) {
            continue;
        }
        if gold.contains_pair(c1, c2) {
            tp += 1;
            matched_gold += 1;
        } else {
            fp += 1;
        }
    }
    Ok((tp, fp, gold.len() - matched_gold))
}

fn canonical(c1: CertId, c2: CertId) -> (CertId, CertId) {
    if c1 < c2 {
        (c1, c2)
    } else {
        (c2, c1)
    }
}

/// One point of the precision-recall curve, tagged with the score
/// threshold that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Sweep distinct score thresholds descending over `scored` (each entry a
/// prediction score plus whether the pair is gold) and emit one
/// (threshold, precision, recall) point per threshold. All entries tied at
/// a score enter together. `gold_total` is the recall denominator and must
/// cover at least the positives present in the list.
pub fn pr_points(scored: &[(f64, bool)], gold_total: usize) -> Result<Vec<PrPoint>> {
    if gold_total == 0 {
        return Err(Error::Evaluation(
            "precision-recall sweep needs at least one gold positive".into(),
        ));
    }
    if scored.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::Evaluation("non-finite prediction score".into()));
    }
    let in_list = scored.iter().filter(|(_, g)| *g).count();
    if in_list > gold_total {
        return Err(Error::Evaluation(format!(
            "scored list holds {in_list} positives but gold_total is {gold_total}"
        )));
    }
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite scores"));
    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut predicted = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            predicted += 1;
            tp += usize::from(sorted[i].1);
            i += 1;
        }
        points.push(PrPoint {
            threshold,
            precision: tp as f64 / predicted as f64,
            recall: tp as f64 / gold_total as f64,
        });
    }
    Ok(points)
}

/// Area under the precision-recall curve by the step rule
/// Σ (rᵢ − rᵢ₋₁)·pᵢ with r₀ = 0, against an explicit gold total (recall
/// may top out below 1 when gold pairs are missing from the list).
pub fn auc_pr_against(scored: &[(f64, bool)], gold_total: usize) -> Result<f64> {
    let points = pr_points(scored, gold_total)?;
    let mut auc = 0.0;
    let mut prev_recall = 0.0;
    for p in &points {
        auc += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    Ok(auc)
}

/// Area under the precision-recall curve of a self-contained scored list:
/// the gold total is the number of positives in the list, which must be
/// nonzero.
pub fn auc_pr(scored: &[(f64, bool)]) -> Result<f64> {
    let positives = scored.iter().filter(|(_, g)| *g).count();
    if positives == 0 {
        return Err(Error::Evaluation(
            "AUC-PR is undefined without gold positives".into(),
        ));
    }
    auc_pr_against(scored, positives)
}

/// Counts, point metrics, and ranking metrics of one match set against one
/// gold slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PRReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub pr_curve: Vec<PrPoint>,
    pub auc_pr: f64,
}

/// The overall report plus one report per certificate-type pair with gold
/// support (e.g. `birth_death`), each sliced to predictions and gold pairs
/// of that type pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub overall: PRReport,
    pub per_type: BTreeMap<String, PRReport>,
}

fn type_pair_key(store: &RecordStore, c1: CertId, c2: CertId) -> String {
    let mut names = [
        store.certificate(c1).cert_type.as_str(),
        store.certificate(c2).cert_type.as_str(),
    ];
    names.sort_unstable();
    format!("{}_{}", names[0], names[1])
}

/// Prediction list for the curve: one entry per distinct prediction
/// identity (pair for lenient, pair+label for strict) with its best score.
fn scored_list(auto: &CertificateMatchSet, gold: &GoldLinkSet, strict: bool) -> Vec<(f64, bool)> {
    let mut best: BTreeMap<(CertId, CertId, Option<&str>), (f64, bool)> = BTreeMap::new();
    for (c1, c2, lt, score) in auto.iter() {
        let (a, b) = canonical(c1, c2);
        let key = if strict { (a, b, Some(lt)) } else { (a, b, None) };
        let is_gold = match gold.labels(c1, c2) {
            Some(labels) if strict => labels.contains(lt),
            Some(_) => true,
            None => false,
        };
        let entry = best.entry(key).or_insert((score, is_gold));
        if score > entry.0 {
            entry.0 = score;
        }
    }
    best.into_values().collect()
}

fn report_for(
    auto: &CertificateMatchSet,
    gold: &GoldLinkSet,
    strict: bool,
) -> Result<PRReport> {
    let (tp, fp, fn_count) = confusion(auto, gold, strict)?;
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_count == 0 { 0.0 } else { tp as f64 / (tp + fn_count) as f64 };
    let gold_total = if strict { gold.labeled_len() } else { gold.len() };
    let scored = scored_list(auto, gold, strict);
    let pr_curve = pr_points(&scored, gold_total)?;
    let auc = auc_pr_against(&scored, gold_total)?;
    Ok(PRReport {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_count,
        precision,
        recall,
        pr_curve,
        auc_pr: auc,
    })
}

/// Score `auto` against `gold` overall and per certificate-type pair.
/// Type pairs without gold support are folded into the overall report
/// only. Errors when the gold set is empty.
pub fn evaluate(
    auto: &CertificateMatchSet,
    gold: &GoldLinkSet,
    store: &RecordStore,
    strict: bool,
) -> Result<EvaluationReport> {
    if gold.is_empty() {
        return Err(Error::Evaluation("gold link set is empty".into()));
    }
    let overall = report_for(auto, gold, strict)?;
    let mut gold_by_type: BTreeMap<String, GoldLinkSet> = BTreeMap::new();
    for ((c1, c2), labels) in gold.iter() {
        let slice = gold_by_type.entry(type_pair_key(store, c1, c2)).or_default();
        if labels.is_empty() {
            slice.insert(c1, c2, None)?;
        } else {
            for l in labels {
                slice.insert(c1, c2, Some(l))?;
            }
        }
    }
    let mut auto_by_type: BTreeMap<String, CertificateMatchSet> = BTreeMap::new();
    for (c1, c2, lt, score) in auto.iter() {
        let key = type_pair_key(store, c1, c2);
        if gold_by_type.contains_key(&key) {
            auto_by_type
                .entry(key)
                .or_insert_with(|| CertificateMatchSet::new(auto.method()))
                .insert(c1, c2, lt, score);
        }
    }
    let mut per_type = BTreeMap::new();
    for (key, gold_slice) in &gold_by_type {
        let empty = CertificateMatchSet::new(auto.method());
        let auto_slice = auto_by_type.get(key).unwrap_or(&empty);
        per_type.insert(key.clone(), report_for(auto_slice, gold_slice, strict)?);
    }
    Ok(EvaluationReport { overall, per_type })
}

/// Render the report as deterministic `key\tvalue` lines: the overall
/// section, each type-pair section, and the mean/std of the per-type
/// AUC-PR values as a second aggregation.
pub fn render_report(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let mut section = |name: &str, r: &PRReport| {
        out.push_str(&format!("{name}.tp\t{}\n", r.true_positives));
        out.push_str(&format!("{name}.fp\t{}\n", r.false_positives));
        out.push_str(&format!("{name}.fn\t{}\n", r.false_negatives));
        out.push_str(&format!("{name}.precision\t{:.6}\n", r.precision));
        out.push_str(&format!("{name}.recall\t{:.6}\n", r.recall));
        out.push_str(&format!("{name}.auc_pr\t{:.6}\n", r.auc_pr));
    };
    section("all", &report.overall);
    for (name, r) in &report.per_type {
        section(name, r);
    }
    drop(section);
    let aucs: Vec<f64> = report.per_type.values().map(|r| r.auc_pr).collect();
    if !aucs.is_empty() {
        let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
        let var = aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / aucs.len() as f64;
        out.push_str(&format!("per_type.auc_pr.mean\t{mean:.6}\n"));
        out.push_str(&format!("per_type.auc_pr.std\t{:.6}\n", var.sqrt()));
    }
    out
}

/// Serialize a precision-recall curve as `threshold	precision	recall`
/// rows for external plotting.
pub fn write_pr_curve_tsv<W: Write>(points: &[PrPoint], writer: &mut W) -> Result<()> {
    writeln!(writer, "threshold\tprecision\trecall")?;
    for p in points {
        writeln!(writer, "{:.6}\t{:.6}\t{:.6}", p.threshold, p.precision, p.recall)?;
    }
    Ok(())
}
