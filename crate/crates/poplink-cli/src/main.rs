//! Command-line driver for the poplink record-linkage pipeline.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration or
//! validation error (including command-line usage errors).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use poplink::config::PipelineConfig;
use poplink::error::Error;
use poplink::pipeline::{self, RunOptions, Stage};
use poplink::synthgen;

#[derive(Parser)]
#[command(
    name = "poplink",
    version,
    about = "Reconstruct populations by linking birth, death, marriage and census certificates"
)]
struct Cli {
    /// Configuration file (TOML). Sections not present fall back to the
    /// built-in defaults; omit the flag to run entirely on defaults.
    #[arg(long, global = true, value_name = "file")]
    config: Option<PathBuf>,

    /// Worker threads for the parallel stages; 0 means one per core.
    /// Results are byte-identical for any worker count.
    #[arg(long, global = true, default_value_t = 0, value_name = "n")]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic certificate corpus with gold links.
    Generate {
        /// Directory receiving the corpus files.
        #[arg(long, default_value = "data", value_name = "dir")]
        out: PathBuf,
    },
    /// Parse, clean and validate the configured certificate files.
    Ingest {
        /// Run directory receiving records.tsv and the ingest report.
        #[arg(long, default_value = "run", value_name = "dir")]
        out: PathBuf,
    },
    /// Run the linkage pipeline, writing one artifact per stage.
    Link {
        /// Run directory receiving the stage artifacts.
        #[arg(long, default_value = "run", value_name = "dir")]
        out: PathBuf,
        /// Reuse cached stage artifacts found in the run directory.
        #[arg(long)]
        resume: bool,
        /// Stop after this stage: ingest, block, pairwise, relational,
        /// group, fuse or segments.
        #[arg(long, value_name = "stage")]
        stop_after: Option<String>,
    },
    /// Score the run artifacts against the configured gold links.
    Evaluate {
        /// Run directory holding the linkage artifacts.
        #[arg(long, default_value = "run", value_name = "dir")]
        out: PathBuf,
    },
    /// Run all 16 combinations of the four option toggles and aggregate
    /// their end-to-end quality.
    Sweep {
        /// Directory receiving sweep.tsv and sweep_summary.tsv.
        #[arg(long, default_value = "run", value_name = "dir")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Schema(_) | Error::Toml(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig, Error> {
    match path {
        Some(p) => PipelineConfig::load_path(p),
        None => PipelineConfig::load_default(),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = load_config(&cli.config)?;
    match cli.command {
        Command::Generate { out } => cmd_generate(&cfg, &out),
        Command::Ingest { out } => cmd_link(
            &cfg,
            RunOptions {
                workers: cli.workers,
                resume: false,
                stop_after: Some(Stage::Ingest),
                out_dir: out,
            },
        ),
        Command::Link { out, resume, stop_after } => {
            let stop_after = stop_after.as_deref().map(Stage::parse).transpose()?;
            cmd_link(
                &cfg,
                RunOptions { workers: cli.workers, resume, stop_after, out_dir: out },
            )
        }
        Command::Evaluate { out } => cmd_evaluate(&cfg, &out),
        Command::Sweep { out } => cmd_sweep(&cfg, &out, cli.workers),
    }
}

fn cmd_generate(cfg: &PipelineConfig, out: &PathBuf) -> Result<(), Error> {
    let params = cfg
        .synthgen
        .clone()
        .ok_or_else(|| Error::Config("configuration has no [synthgen] section".into()))?;
    let pop = synthgen::generate(&params, out)?;
    let mut by_type = std::collections::BTreeMap::new();
    for cert in &pop.certificates {
        *by_type.entry(cert.cert_type.as_str()).or_insert(0usize) += 1;
    }
    let records: usize = pop.certificates.iter().map(|c| c.members.len()).sum();
    println!("wrote synthetic corpus to {}", out.display());
    println!("  seed\t{}", params.seed);
    println!("  entities\t{}", pop.entities.len());
    println!("  certificates\t{}", pop.certificates.len());
    for (cert_type, n) in by_type {
        println!("    {cert_type}\t{n}");
    }
    println!("  records\t{records}");
    println!("  gold links\t{}", pop.gold.len());
    Ok(())
}

fn cmd_link(cfg: &PipelineConfig, opts: RunOptions) -> Result<(), Error> {
    let outcome = pipeline::run_link(cfg, &opts)?;
    if let Some(report) = &outcome.blocking_report {
        for (_, value, size) in &report.oversized {
            eprintln!(
                "warning: block '{}' holds {size} records (cap {})",
                value.replace('\u{1f}', "|"),
                cfg.candidates.block_cap
            );
        }
    }
    println!("run directory: {}", opts.out_dir.display());
    for (stage, seconds, cached) in &outcome.timings {
        let detail = match *stage {
            "ingest" => format!(
                "{} certificates, {} records",
                outcome.store.certificate_count(),
                outcome.store.record_count()
            ),
            "block" => match (&outcome.candidates, &outcome.blocking_report) {
                (Some(c), Some(r)) => format!("{} candidate pairs from {} blocks", c.len(), r.blocks),
                _ => String::new(),
            },
            "pairwise" => match &outcome.links {
                Some(l) => format!("{} links at s_m={}", l.len(), cfg.s_m),
                None => String::new(),
            },
            "relational" => match &outcome.m_r {
                Some(m) => format!("{} matches ({})", m.len(), m.method()),
                None => String::new(),
            },
            "group" => match &outcome.m_g {
                Some(m) => format!("{} matches ({})", m.len(), m.method()),
                None => String::new(),
            },
            "fuse" => match &outcome.m_f {
                Some(m) => format!("{} matched pairs", m.len()),
                None => String::new(),
            },
            "segments" => match &outcome.segments {
                Some(s) => format!("{} life segments", s.len()),
                None => String::new(),
            },
            _ => String::new(),
        };
        let cached = if *cached { " (cached)" } else { "" };
        println!("  {stage:<10} {seconds:>8.3}s{cached}  {detail}");
    }
    Ok(())
}

fn cmd_evaluate(cfg: &PipelineConfig, out: &PathBuf) -> Result<(), Error> {
    let evaluated = pipeline::run_evaluate(cfg, out)?;
    println!("evaluation of {}", out.display());
    println!("  artifact\tprecision\trecall\tauc_pr");
    for e in &evaluated {
        let r = &e.report.overall;
        println!(
            "  {}\t{:.6}\t{:.6}\t{:.6}",
            e.label, r.precision, r.recall, r.auc_pr
        );
    }
    println!("reports written to {}/report.<artifact>.tsv", out.display());
    Ok(())
}

fn cmd_sweep(cfg: &PipelineConfig, out: &PathBuf, workers: usize) -> Result<(), Error> {
    let rows = pipeline::run_sweep(cfg, workers)?;
    std::fs::create_dir_all(out)?;
    let table = pipeline::render_sweep_rows(&rows);
    let summary = pipeline::render_sweep_summary(&rows);
    std::fs::write(out.join("sweep.tsv"), &table)?;
    std::fs::write(out.join("sweep_summary.tsv"), &summary)?;
    print!("{summary}");
    println!("full grid written to {}", out.join("sweep.tsv").display());
    Ok(())
}
