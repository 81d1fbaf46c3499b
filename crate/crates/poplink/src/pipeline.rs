//! Stage orchestration: runs the linkage pipeline end to end against a
//! loaded configuration, writing one artifact per stage into a run
//! directory. Runs can stop after a named stage and can resume from
//! cached artifacts; because scores are quantized on insertion, a
//! resumed run produces byte-identical artifacts to a fresh one.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::blocking::{build_blocks, emit_candidates, BlockingReport, CandidateSet};
use crate::config::{PipelineConfig, WeightingMode};
use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate, read_gold_tsv, render_report, write_pr_curve_tsv, EvaluationReport, GoldLinkSet,
};
use crate::fusion::{assemble_life_segments, fuse, write_segments_tsv};
use crate::graph::{build_graph, CertificateGraph};
use crate::ingest::{
    parse_certificates_file, IngestReport, RecordStore,
};
use crate::model::LifeSegment;
use crate::pairwise::{
    build_link_set, record_pair_sim, train_weights, AttributeWeighting, LinkSet,
};
use crate::relational::CertificateMatchSet;

/// Fixed run-directory layout.
pub const RECORDS_FILE: &str = "records.tsv";
pub const CANDIDATES_FILE: &str = "candidates.tsv";
pub const LINKS_FILE: &str = "links.tsv";
pub const M_R_FILE: &str = "m_r.tsv";
pub const M_G_FILE: &str = "m_g.tsv";
pub const M_F_FILE: &str = "m_f.tsv";
pub const SEGMENTS_FILE: &str = "segments.tsv";
pub const INGEST_REPORT_FILE: &str = "ingest_report.tsv";
pub const BLOCKING_REPORT_FILE: &str = "blocking_report.tsv";
/// Wall-clock diagnostics; the one run file exempt from the
/// byte-identical determinism contract.
pub const TIMING_FILE: &str = "timing.log";

/// Pipeline stages in execution order, named as accepted by
/// `--stop-after`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Block,
    Pairwise,
    Relational,
    Group,
    Fuse,
    Segments,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Block,
        Stage::Pairwise,
        Stage::Relational,
        Stage::Group,
        Stage::Fuse,
        Stage::Segments,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Block => "block",
            Stage::Pairwise => "pairwise",
            Stage::Relational => "relational",
            Stage::Group => "group",
            Stage::Fuse => "fuse",
            Stage::Segments => "segments",
        }
    }

    pub fn parse(s: &str) -> Result<Stage> {
        Stage::ALL
            .into_iter()
            .find(|stage| stage.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage '{s}'")))
    }
}

/// Runtime knobs orthogonal to the linkage configuration.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Worker threads for the stage-internal pools; 0 means one per core.
    pub workers: usize,
    /// Reuse cached stage artifacts found in the run directory.
    pub resume: bool,
    /// Stop after this stage instead of running to the end.
    pub stop_after: Option<Stage>,
    /// Run directory receiving the artifacts.
    pub out_dir: PathBuf,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> RunOptions {
        RunOptions { workers: 0, resume: false, stop_after: None, out_dir: out_dir.into() }
    }
}

/// Everything a (possibly truncated) linkage run produced, by stage.
#[derive(Debug)]
pub struct RunOutcome {
    pub store: RecordStore,
    pub ingest_report: IngestReport,
    pub candidates: Option<CandidateSet>,
    pub blocking_report: Option<BlockingReport>,
    pub links: Option<LinkSet>,
    pub m_r: Option<CertificateMatchSet>,
    pub m_g: Option<CertificateMatchSet>,
    pub m_f: Option<CertificateMatchSet>,
    pub segments: Option<Vec<LifeSegment>>,
    /// Per executed stage: name, seconds, and whether it was loaded from
    /// a cached artifact rather than computed.
    pub timings: Vec<(&'static str, f64, bool)>,
}

fn artifact_writer(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn artifact_reader(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

// -------------------------------------------------------------------
// Stage computations, shared by the artifact-writing runner and the
// in-memory sweep.

/// Ingest the configured certificate files into a frozen store.
pub fn ingest_sources(cfg: &PipelineConfig) -> Result<(RecordStore, IngestReport)> {
    let sources = cfg.data.sources();
    if sources.is_empty() {
        return Err(Error::Config("no certificate data files configured under [data]".into()));
    }
    let mut report = IngestReport::default();
    let mut batches = Vec::new();
    for (cert_type, path) in sources {
        batches.extend(parse_certificates_file(
            path,
            cert_type,
            &cfg.ingest.schema,
            &cfg.vocab,
            &cfg.ingest.cleaning,
            &cfg.ingest.parse_options,
            &mut report,
        )?);
    }
    let store =
        RecordStore::assemble(batches, &cfg.vocab, cfg.ingest.impute_birth_years, &mut report)?;
    Ok((store, report))
}

/// Rebuild a store from the canonical records artifact of an earlier run.
pub fn load_store(cfg: &PipelineConfig, path: &Path) -> Result<(RecordStore, IngestReport)> {
    let mut report = IngestReport::default();
    let batches = RecordStore::read_canonical_tsv(
        artifact_reader(path)?,
        &cfg.vocab,
        &cfg.ingest.cleaning,
        &mut report,
    )?;
    let store =
        RecordStore::assemble(batches, &cfg.vocab, cfg.ingest.impute_birth_years, &mut report)?;
    Ok((store, report))
}

/// Blocking: key expansion happened at config load; here the blocks are
/// materialized and reduced to admissible candidate pairs.
pub fn compute_candidates(
    cfg: &PipelineConfig,
    store: &RecordStore,
) -> (CandidateSet, BlockingReport) {
    let blocks = build_blocks(store, &cfg.blocking_keys);
    emit_candidates(&blocks, store, &cfg.role_pairs, &cfg.temporal, &cfg.candidates)
}

/// Pair-wise attribute similarity over the candidate pairs, thresholded
/// at `s_m`. Training the attribute weights (when configured) draws on
/// ground-truth entity ids in the store.
pub fn compute_links(
    cfg: &PipelineConfig,
    store: &RecordStore,
    candidates: &CandidateSet,
) -> Result<LinkSet> {
    let weighting = match cfg.weighting {
        WeightingMode::Uniform => AttributeWeighting::Uniform,
        WeightingMode::Trained => {
            train_weights(store, &cfg.comparators, cfg.train_sample_size, cfg.seed)?
        }
    };
    let pairs: Vec<_> = candidates.pair_iter().collect();
    build_link_set(
        &pairs,
        |a, b| {
            record_pair_sim(
                store.record(a),
                store.record(b),
                &cfg.comparators,
                &weighting,
                cfg.missing_value_policy,
            )
        },
        cfg.s_m,
    )
}

fn active_constraints(cfg: &PipelineConfig) -> Option<&crate::model::LinkConstraintTable> {
    cfg.constraints_enabled.then_some(&cfg.link_constraints)
}

/// Relational (graph-neighborhood) scoring of the certificate graph.
pub fn compute_m_r(
    cfg: &PipelineConfig,
    store: &RecordStore,
    g: &CertificateGraph,
) -> Result<CertificateMatchSet> {
    crate::relational::score_relational(
        g,
        store,
        cfg.relational_method,
        &cfg.linkage_types,
        active_constraints(cfg),
        cfg.assignment_mode,
    )
}

/// Group (household/certificate-membership) scoring of the graph.
pub fn compute_m_g(
    cfg: &PipelineConfig,
    store: &RecordStore,
    g: &CertificateGraph,
) -> Result<CertificateMatchSet> {
    crate::group::score_group(
        g,
        store,
        cfg.group_method,
        &cfg.linkage_types,
        active_constraints(cfg),
        cfg.assignment_mode,
    )
}

/// Collapse the record-level link set to certificate pairs (best link per
/// pair), for evaluating pair-wise linkage on its own.
pub fn pairwise_match_set(links: &LinkSet, store: &RecordStore) -> CertificateMatchSet {
    let mut best: std::collections::BTreeMap<(crate::model::CertId, crate::model::CertId), f64> =
        std::collections::BTreeMap::new();
    for ((a, b), score) in links.iter() {
        let (ca, cb) = (store.record(a).certificate, store.record(b).certificate);
        let key = if ca <= cb { (ca, cb) } else { (cb, ca) };
        let entry = best.entry(key).or_insert(score);
        if score > *entry {
            *entry = score;
        }
    }
    let mut set = CertificateMatchSet::new("pairwise");
    for ((c1, c2), score) in best {
        set.insert(c1, c2, "pairwise", score);
    }
    set
}

// -------------------------------------------------------------------
// The artifact-writing runner.

/// Run the linkage pipeline under `cfg`, writing artifacts into
/// `opts.out_dir`. All stage-internal parallelism runs on a dedicated
/// pool of `opts.workers` threads; results are deterministic regardless
/// of the worker count.
pub fn run_link(cfg: &PipelineConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_link_on_pool(cfg, opts))
}

fn run_link_on_pool(cfg: &PipelineConfig, opts: &RunOptions) -> Result<RunOutcome> {
    std::fs::create_dir_all(&opts.out_dir)?;
    let dir = opts.out_dir.as_path();
    let stop = |stage: Stage| opts.stop_after == Some(stage);
    let cached = |name: &str| opts.resume && dir.join(name).exists();
    let mut timings: Vec<(&'static str, f64, bool)> = Vec::new();
    fn timed(
        timings: &mut Vec<(&'static str, f64, bool)>,
        name: &'static str,
        started: Instant,
        from_cache: bool,
    ) {
        timings.push((name, started.elapsed().as_secs_f64(), from_cache));
    }

    // Ingest.
    let t = Instant::now();
    let from_cache = cached(RECORDS_FILE);
    let (store, ingest_report) = if from_cache {
        load_store(cfg, &dir.join(RECORDS_FILE))?
    } else {
        let (store, report) = ingest_sources(cfg)?;
        store.write_canonical_tsv(&cfg.vocab, artifact_writer(dir, RECORDS_FILE)?)?;
        let mut w = artifact_writer(dir, INGEST_REPORT_FILE)?;
        write!(w, "{report}")?;
        w.flush()?;
        (store, report)
    };
    timed(&mut timings, "ingest", t, from_cache);
    let mut outcome = RunOutcome {
        store,
        ingest_report,
        candidates: None,
        blocking_report: None,
        links: None,
        m_r: None,
        m_g: None,
        m_f: None,
        segments: None,
        timings: Vec::new(),
    };
    if stop(Stage::Ingest) {
        return finish(outcome, timings, dir);
    }

    // Blocking; skipped when a cached link set already covers it, unless
    // blocking itself is the requested stopping point.
    let links_cached = cached(LINKS_FILE);
    if !links_cached || stop(Stage::Block) {
        let t = Instant::now();
        let (candidates, report) = compute_candidates(cfg, &outcome.store);
        let mut w = artifact_writer(dir, CANDIDATES_FILE)?;
        candidates.write_tsv(&outcome.store, &cfg.blocking_keys, &mut w)?;
        w.flush()?;
        write_blocking_report(&report, &cfg.blocking_keys, artifact_writer(dir, BLOCKING_REPORT_FILE)?)?;
        timed(&mut timings, "block", t, false);
        outcome.candidates = Some(candidates);
        outcome.blocking_report = Some(report);
        if stop(Stage::Block) {
            return finish(outcome, timings, dir);
        }
    }

    // Pair-wise similarity.
    let t = Instant::now();
    let links = if links_cached {
        LinkSet::read_tsv(artifact_reader(&dir.join(LINKS_FILE))?, &outcome.store, cfg.s_m)?
    } else {
        let candidates = outcome.candidates.as_ref().expect("blocking ran");
        let links = compute_links(cfg, &outcome.store, candidates)?;
        let mut w = artifact_writer(dir, LINKS_FILE)?;
        links.write_tsv(&outcome.store, &mut w)?;
        w.flush()?;
        links
    };
    timed(&mut timings, "pairwise", t, links_cached);
    outcome.links = Some(links);
    if stop(Stage::Pairwise) {
        return finish(outcome, timings, dir);
    }

    // Certificate graph (in-memory view of the link set; no artifact).
    let t = Instant::now();
    let graph = build_graph(outcome.links.as_ref().expect("links present"), &outcome.store)?;
    timed(&mut timings, "graph", t, false);

    // Relational and group scoring.
    let t = Instant::now();
    let from_cache = cached(M_R_FILE);
    let m_r = if from_cache {
        CertificateMatchSet::read_tsv(artifact_reader(&dir.join(M_R_FILE))?, &outcome.store)?
    } else {
        let m_r = compute_m_r(cfg, &outcome.store, &graph)?;
        let mut w = artifact_writer(dir, M_R_FILE)?;
        m_r.write_tsv(&outcome.store, &mut w)?;
        w.flush()?;
        m_r
    };
    timed(&mut timings, "relational", t, from_cache);
    outcome.m_r = Some(m_r);
    if stop(Stage::Relational) {
        return finish(outcome, timings, dir);
    }

    let t = Instant::now();
    let from_cache = cached(M_G_FILE);
    let m_g = if from_cache {
        CertificateMatchSet::read_tsv(artifact_reader(&dir.join(M_G_FILE))?, &outcome.store)?
    } else {
        let m_g = compute_m_g(cfg, &outcome.store, &graph)?;
        let mut w = artifact_writer(dir, M_G_FILE)?;
        m_g.write_tsv(&outcome.store, &mut w)?;
        w.flush()?;
        m_g
    };
    timed(&mut timings, "group", t, from_cache);
    outcome.m_g = Some(m_g);
    if stop(Stage::Group) {
        return finish(outcome, timings, dir);
    }

    // Fusion.
    let t = Instant::now();
    let from_cache = cached(M_F_FILE);
    let m_f = if from_cache {
        CertificateMatchSet::read_tsv(artifact_reader(&dir.join(M_F_FILE))?, &outcome.store)?
    } else {
        let m_f = fuse(
            outcome.m_r.as_ref().expect("relational scored"),
            outcome.m_g.as_ref().expect("group scored"),
            &cfg.fusion,
        )?;
        let mut w = artifact_writer(dir, M_F_FILE)?;
        m_f.write_tsv(&outcome.store, &mut w)?;
        w.flush()?;
        m_f
    };
    timed(&mut timings, "fuse", t, from_cache);
    outcome.m_f = Some(m_f);
    if stop(Stage::Fuse) {
        return finish(outcome, timings, dir);
    }

    // Life segments (always recomputed: cheap, and the segments file has
    // no reader).
    let t = Instant::now();
    let segments = assemble_life_segments(
        outcome.m_f.as_ref().expect("fused"),
        &graph,
        &outcome.store,
        &cfg.linkage_types,
        &cfg.role_pairs,
        &cfg.temporal,
    )?;
    let mut w = artifact_writer(dir, SEGMENTS_FILE)?;
    write_segments_tsv(&segments, &mut w)?;
    w.flush()?;
    timed(&mut timings, "segments", t, false);
    outcome.segments = Some(segments);
    finish(outcome, timings, dir)
}

fn finish(
    mut outcome: RunOutcome,
    timings: Vec<(&'static str, f64, bool)>,
    dir: &Path,
) -> Result<RunOutcome> {
    let mut w = artifact_writer(dir, TIMING_FILE)?;
    for (stage, seconds, from_cache) in &timings {
        let suffix = if *from_cache { "\tcached" } else { "" };
        writeln!(w, "{stage}\t{seconds:.3}{suffix}")?;
    }
    w.flush()?;
    outcome.timings = timings;
    Ok(outcome)
}

fn write_blocking_report<W: Write>(
    report: &BlockingReport,
    keys: &[crate::blocking::BlockingKey],
    mut w: W,
) -> Result<()> {
    writeln!(w, "blocks\t{}", report.blocks)?;
    writeln!(w, "candidates\t{}", report.candidates)?;
    writeln!(w, "oversized_blocks\t{}", report.oversized.len())?;
    for (key_idx, value, size) in &report.oversized {
        // Block values join attribute encodings with an unprintable
        // separator; swap it for a readable one.
        let value = value.replace('\u{1f}', "|");
        writeln!(w, "oversized\t{}\t{value}\t{size}", keys[*key_idx as usize].id)?;
    }
    Ok(())
}

// -------------------------------------------------------------------
// Evaluation over run artifacts.

/// Load the configured gold link file, resolving certificate ids against
/// the store. A missing or unconfigured gold file is a configuration
/// error.
pub fn load_gold(cfg: &PipelineConfig, store: &RecordStore) -> Result<GoldLinkSet> {
    let path = cfg
        .data
        .gold
        .as_deref()
        .ok_or_else(|| Error::Config("no gold link file configured under [data]".into()))?;
    let file = File::open(path)
        .map_err(|e| Error::Config(format!("cannot open gold file {}: {e}", path.display())))?;
    read_gold_tsv(BufReader::new(file), store)
}

/// One evaluated run artifact.
#[derive(Debug)]
pub struct EvaluatedArtifact {
    /// Stage label: `pairwise`, `relational`, `group`, or `fused`.
    pub label: &'static str,
    pub report: EvaluationReport,
}

/// Evaluate whatever linkage artifacts a run directory holds against the
/// configured gold links: `report.<label>.tsv` per artifact, plus
/// `pr_curve.tsv` for the most final artifact present.
pub fn run_evaluate(cfg: &PipelineConfig, out_dir: &Path) -> Result<Vec<EvaluatedArtifact>> {
    let records = out_dir.join(RECORDS_FILE);
    let (store, _) = if records.exists() {
        load_store(cfg, &records)?
    } else {
        ingest_sources(cfg)?
    };
    let gold = load_gold(cfg, &store)?;

    let mut evaluated: Vec<EvaluatedArtifact> = Vec::new();
    let links_path = out_dir.join(LINKS_FILE);
    if links_path.exists() {
        let links = LinkSet::read_tsv(artifact_reader(&links_path)?, &store, cfg.s_m)?;
        let set = pairwise_match_set(&links, &store);
        evaluated.push(EvaluatedArtifact {
            label: "pairwise",
            report: evaluate(&set, &gold, &store, cfg.strict_evaluation)?,
        });
    }
    for (label, file) in
        [("relational", M_R_FILE), ("group", M_G_FILE), ("fused", M_F_FILE)]
    {
        let path = out_dir.join(file);
        if !path.exists() {
            continue;
        }
        let set = CertificateMatchSet::read_tsv(artifact_reader(&path)?, &store)?;
        evaluated.push(EvaluatedArtifact {
            label,
            report: evaluate(&set, &gold, &store, cfg.strict_evaluation)?,
        });
    }
    if evaluated.is_empty() {
        return Err(Error::Config(format!(
            "no linkage artifacts found in {} (expected {LINKS_FILE}, {M_R_FILE}, {M_G_FILE} or {M_F_FILE})",
            out_dir.display()
        )));
    }
    for e in &evaluated {
        let mut w = artifact_writer(out_dir, &format!("report.{}.tsv", e.label))?;
        write!(w, "{}", render_report(&e.report))?;
        w.flush()?;
    }
    let last = evaluated.last().expect("at least one artifact");
    let mut w = artifact_writer(out_dir, "pr_curve.tsv")?;
    write_pr_curve_tsv(&last.report.overall.pr_curve, &mut w)?;
    w.flush()?;
    Ok(evaluated)
}

// -------------------------------------------------------------------
// Option sweep.

/// One cell of the option grid with its end-to-end quality.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub missing_value_policy: &'static str,
    pub weighting: &'static str,
    pub census_decade_limit: bool,
    pub constraints: bool,
    pub pairwise_auc_pr: f64,
    pub fused_auc_pr: f64,
}

/// Run the full pipeline in memory for all 16 combinations of the four
/// option toggles, scoring each against the gold links. Ingest runs once;
/// the option toggles only affect later stages.
pub fn run_sweep(cfg: &PipelineConfig, workers: usize) -> Result<Vec<SweepRow>> {
    use crate::pairwise::MissingValuePolicy;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| {
        let (store, _) = ingest_sources(cfg)?;
        let gold = load_gold(cfg, &store)?;
        let mut rows = Vec::with_capacity(16);
        for policy in [MissingValuePolicy::IncludeAsZero, MissingValuePolicy::ExcludeAttribute] {
            for weighting in [WeightingMode::Uniform, WeightingMode::Trained] {
                for decade_limit in [false, true] {
                    for constraints in [false, true] {
                        let mut combo = cfg.clone();
                        combo.missing_value_policy = policy;
                        combo.weighting = weighting;
                        combo.candidates.census_decade_limit = decade_limit;
                        combo.constraints_enabled = constraints;

                        let (candidates, _) = compute_candidates(&combo, &store);
                        let links = compute_links(&combo, &store, &candidates)?;
                        let graph = build_graph(&links, &store)?;
                        let m_r = compute_m_r(&combo, &store, &graph)?;
                        let m_g = compute_m_g(&combo, &store, &graph)?;
                        let m_f = fuse(&m_r, &m_g, &combo.fusion)?;

                        let strict = combo.strict_evaluation;
                        let pairwise =
                            evaluate(&pairwise_match_set(&links, &store), &gold, &store, strict)?;
                        let fused = evaluate(&m_f, &gold, &store, strict)?;
                        rows.push(SweepRow {
                            missing_value_policy: match policy {
                                MissingValuePolicy::IncludeAsZero => "include_as_zero",
                                MissingValuePolicy::ExcludeAttribute => "exclude_attribute",
                            },
                            weighting: match weighting {
                                WeightingMode::Uniform => "uniform",
                                WeightingMode::Trained => "trained",
                            },
                            census_decade_limit: decade_limit,
                            constraints,
                            pairwise_auc_pr: pairwise.overall.auc_pr,
                            fused_auc_pr: fused.overall.auc_pr,
                        });
                    }
                }
            }
        }
        Ok(rows)
    })
}

/// The 16 grid rows as a TSV table.
pub fn render_sweep_rows(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "missing_value_policy\tweighting\tcensus_decade_limit\tconstraints\tpairwise_auc_pr\tfused_auc_pr\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\n",
            r.missing_value_policy,
            r.weighting,
            r.census_decade_limit,
            r.constraints,
            r.pairwise_auc_pr,
            r.fused_auc_pr
        ));
    }
    out
}

/// Per-option aggregation: mean and standard deviation of the fused
/// AUC-PR over the eight grid cells holding each option value.
pub fn render_sweep_summary(rows: &[SweepRow]) -> String {
    let mut out = String::from("option\tvalue\tmean_fused_auc_pr\tstd_fused_auc_pr\n");
    let mut section = |option: &str, split: &dyn Fn(&SweepRow) -> String| {
        let mut by_value: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
        for r in rows {
            by_value.entry(split(r)).or_default().push(r.fused_auc_pr);
        }
        for (value, aucs) in by_value {
            let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
            let var = aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / aucs.len() as f64;
            out.push_str(&format!("{option}\t{value}\t{mean:.6}\t{:.6}\n", var.sqrt()));
        }
    };
    section("missing_value_policy", &|r| r.missing_value_policy.to_string());
    section("weighting", &|r| r.weighting.to_string());
    section("census_decade_limit", &|r| r.census_decade_limit.to_string());
    section("constraints", &|r| r.constraints.to_string());
    drop(section);
    out
}
