use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use schelling_core::harness::{
    export, import_json_lines, sweep, ExperimentConfig, ExperimentKind, ExportFormat, SweepOptions,
};

#[derive(Parser)]
#[command(name = "schelling", version, about = "Schelling segregation experiments on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Config file in `key = value` form.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for records, tables and snapshots.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Base seed; changes the config hash.
    #[arg(long)]
    seed: Option<u64>,
    /// Event cap per simulation.
    #[arg(long)]
    max_events: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    JsonLines,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dynamics to absorption, with optional snapshots.
    Simulate(Common),
    /// Final monochromatic radius against window size.
    Scaling(Common),
    /// Growth of the region taken over from a planted viral node.
    ViralGrowth(Common),
    /// First-passage ball shape constants.
    FppShape(Common),
    /// Exact binomial, hypergeometric and node-bias checks.
    BoundsSweep(Common),
    /// Sample conditioned viral patches and replay the induction.
    ViralReplay(Common),
    /// Safety margins of a monochromatic disc around a viral node.
    PersistenceGeometry(Common),
    /// Re-export `records.jsonl` from a previous run as per-kind files.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn defaults(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind);
    match kind {
        ExperimentKind::Simulate => {
            c.n = vec![32];
            c.w = vec![2];
            c.tau = vec![0.45];
        }
        ExperimentKind::Scaling => {
            c.n = vec![256];
            c.w = vec![2, 3, 4];
            c.tau = vec![0.45];
            c.seeds = 20;
        }
        ExperimentKind::ViralGrowth => {
            c.n = vec![64];
            c.w = vec![4];
            c.tau = vec![0.45];
        }
        ExperimentKind::FppShape => {
            c.t_stops = vec![10.0, 20.0, 40.0];
            c.reps = 20;
        }
        ExperimentKind::BoundsSweep => {
            c.n = (1..=200).collect();
        }
        ExperimentKind::ViralReplay => {
            c.w = vec![500];
            c = c.with_extra("eps", 0.1);
        }
        ExperimentKind::PersistenceGeometry => {
            c.w = vec![2, 4, 8, 16];
            c = c.with_extra("eps", 0.1);
        }
    }
    c
}

fn load(kind: ExperimentKind, common: &Common) -> Result<ExperimentConfig, String> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| e.to_string())?,
        None => defaults(kind),
    };
    if cfg.kind != kind {
        return Err(format!("config is for `{}`, not `{kind}`", cfg.kind));
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(m) = common.max_events {
        cfg.max_events = m;
    }
    if let Some(j) = common.jobs {
        cfg.jobs = j;
    }
    cfg.out = Some(common.out.clone());
    Ok(cfg)
}

fn write_exports(records: &[schelling_core::harness::RunRecord], out: &PathBuf, format: Format) -> Result<(), String> {
    let formats: &[ExportFormat] = match format {
        Format::Csv => &[ExportFormat::Csv],
        Format::JsonLines => &[ExportFormat::JsonLines],
        Format::Both => &[ExportFormat::Csv, ExportFormat::JsonLines],
    };
    for &f in formats {
        for p in export(records, f, out).map_err(|e| e.to_string())? {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), String> {
    let (kind, common) = match cli.command {
        Command::Export { common, format } => {
            let path = common.out.join("records.jsonl");
            let records = import_json_lines(&path).map_err(|e| e.to_string())?;
            return write_exports(&records, &common.out, format);
        }
        Command::Simulate(c) => (ExperimentKind::Simulate, c),
        Command::Scaling(c) => (ExperimentKind::Scaling, c),
        Command::ViralGrowth(c) => (ExperimentKind::ViralGrowth, c),
        Command::FppShape(c) => (ExperimentKind::FppShape, c),
        Command::BoundsSweep(c) => (ExperimentKind::BoundsSweep, c),
        Command::ViralReplay(c) => (ExperimentKind::ViralReplay, c),
        Command::PersistenceGeometry(c) => (ExperimentKind::PersistenceGeometry, c),
    };
    let cfg = load(kind, &common)?;
    std::fs::create_dir_all(&common.out).map_err(|e| format!("{}: {e}", common.out.display()))?;
    cfg.save(common.out.join(format!("{}-{}.conf", kind, &cfg.hash()[..12])))
        .map_err(|e| e.to_string())?;
    let opts = SweepOptions {
        jobs: cfg.jobs,
        sink: Some(common.out.join("records.jsonl")),
    };
    let outcome = sweep(std::slice::from_ref(&cfg), &opts).map_err(|e| e.to_string())?;
    let errors = outcome.records.iter().filter(|r| r.is_error()).count();
    println!(
        "config {}: {} units run, {} resumed, {} records, {} errors",
        &cfg.hash()[..12],
        outcome.computed,
        outcome.skipped,
        outcome.records.len(),
        errors
    );
    for r in outcome.records.iter().filter(|r| r.is_error()) {
        eprintln!("error: {}", r.error.as_deref().unwrap_or(""));
    }
    write_exports(&outcome.records, &common.out, Format::Csv)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("schelling: {e}");
            ExitCode::FAILURE
        }
    }
}
