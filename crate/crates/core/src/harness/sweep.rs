//! Parallel, resumable execution of config grids.

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::record::{import_json_lines, RunRecord};
use super::run::{cells, replicates, run_unit, Cell};
use crate::{Error, Result};

/// Default cap on the number of (cell, replicate) units in one sweep.
pub const DEFAULT_MAX_RUNS: u64 = 1_000_000;

/// First eight bytes of `sha256("{hash}:{cell}:{replicate}")`, big-endian.
pub fn derive_seed(config_hash: &str, cell: u64, replicate: u64) -> u64 {
    let d = Sha256::digest(format!("{config_hash}:{cell}:{replicate}").as_bytes());
    u64::from_be_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Worker threads; 0 uses the config's `jobs` (largest over the grid).
    pub jobs: usize,
    /// Append-only JSON-lines sink; completed units found here are skipped.
    pub sink: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    /// Every record of the grid, ordered by config, cell, replicate, index.
    pub records: Vec<RunRecord>,
    pub computed: usize,
    pub skipped: usize,
}

struct Unit<'a> {
    order: usize,
    cfg: &'a ExperimentConfig,
    hash: String,
    cell: Cell,
    replicate: u64,
}

fn execute(unit: &Unit<'_>) -> Vec<RunRecord> {
    let seed = derive_seed(&unit.hash, unit.cell.index, unit.replicate);
    let start = Instant::now();
    let result = run_unit(unit.cfg, &unit.cell, unit.replicate, seed);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let base = RunRecord {
        kind: unit.cfg.kind.name().to_string(),
        config_hash: unit.hash.clone(),
        seed,
        cell: unit.cell.index,
        replicate: unit.replicate,
        index: 0,
        fields: Vec::new(),
        wall_ms,
        artifacts: Vec::new(),
        error: None,
    };
    match result {
        Ok(out) => out
            .rows
            .into_iter()
            .enumerate()
            .map(|(i, (kind, fields))| RunRecord {
                kind,
                index: i as u64,
                fields,
                artifacts: out.artifacts.clone(),
                ..base.clone()
            })
            .collect(),
        Err(e) => vec![RunRecord { error: Some(e.to_string()), ..base }],
    }
}

fn append(sink: &Mutex<fs::File>, path: &Path, recs: &[RunRecord]) -> Result<()> {
    let text: String = recs.iter().map(|r| r.to_json_line() + "\n").collect();
    let mut f = sink.lock().unwrap_or_else(|p| p.into_inner());
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}

/// Runs every (cell, replicate) of every config. Failed units become error
/// records and the sweep continues.
pub fn sweep(configs: &[ExperimentConfig], opts: &SweepOptions) -> Result<SweepOutcome> {
    let mut units = Vec::new();
    let mut max_runs = DEFAULT_MAX_RUNS;
    for cfg in configs {
        if let Some(m) = cfg.extra_u64("max_runs")? {
            max_runs = max_runs.min(m);
        }
        let hash = cfg.hash();
        for cell in cells(cfg)? {
            for replicate in 0..replicates(cfg) {
                units.push(Unit { order: units.len(), cfg, hash: hash.clone(), cell: cell.clone(), replicate });
            }
        }
    }
    if units.len() as u64 > max_runs {
        return Err(Error::Budget(format!("grid expands to {} runs, cap is {max_runs}", units.len())));
    }

    let mut existing: Vec<RunRecord> = Vec::new();
    if let Some(path) = &opts.sink {
        if path.exists() {
            existing = import_json_lines(path)?;
        }
    }
    let done: HashSet<(String, u64, u64)> =
        existing.iter().map(|r| (r.config_hash.clone(), r.cell, r.replicate)).collect();
    let key = |u: &Unit| (u.hash.clone(), u.cell.index, u.replicate);
    let (skip, todo): (Vec<&Unit>, Vec<&Unit>) = units.iter().partition(|u| done.contains(&key(u)));

    let sink = match &opts.sink {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
            Some((Mutex::new(f), path.clone()))
        }
        None => None,
    };

    let jobs = if opts.jobs > 0 { opts.jobs } else { configs.iter().map(|c| c.jobs).max().unwrap_or(1).max(1) };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::param(format!("thread pool: {e}")))?;
    let fresh: Vec<(usize, Vec<RunRecord>)> = pool.install(|| {
        todo.par_iter()
            .map(|u| {
                let recs = execute(u);
                if let Some((f, path)) = &sink {
                    append(f, path, &recs)?;
                }
                Ok((u.order, recs))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    // Merge in grid order; previously completed units keep their stored records.
    let mut by_unit: Vec<Vec<RunRecord>> = vec![Vec::new(); units.len()];
    for (order, recs) in fresh {
        by_unit[order] = recs;
    }
    for u in &skip {
        let k = key(u);
        by_unit[u.order] = existing
            .iter()
            .filter(|r| (r.config_hash.clone(), r.cell, r.replicate) == k)
            .cloned()
            .collect();
        by_unit[u.order].sort_by_key(|r| r.index);
    }
    Ok(SweepOutcome {
        records: by_unit.into_iter().flatten().collect(),
        computed: todo.len(),
        skipped: skip.len(),
    })
}

/// Record stream of a single config, in memory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    Ok(sweep(std::slice::from_ref(config), &SweepOptions::default())?.records)
}
