//! Experiment runners: one cell and replicate at a time.

use std::fs;
use std::path::PathBuf;

use num_bigint::BigUint;
use num_traits::Pow;

use crate::analysis::{persistence_margin, radius_stats, MarginOptions, Sample};
use crate::bounds::{
    check_gen_chernoff, cor_a2_grid, cor_a2_on_row, ln_ratio_biguint, rational_to_f64, BinomRow,
    Hypergeometric, Rounding,
};
use crate::dynamics::DynamicsState;
use crate::fpp::{estimate_mu, WeightDistribution};
use crate::lattice::{create_torus_run, snap, Init};
use crate::viral::{
    check_condition_events, replay_sequence, sample_conditioned_on_events, sample_viral_conditioned,
    DiamondSequence, EventOptions, FractionConvention,
};
use crate::{Coord, Error, Result, SchellingParams, TorusGrid, TorusRect};

use super::config::{ExperimentConfig, ExperimentKind};
use super::record::Row;

/// One point of a config's parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub index: u64,
    pub n: usize,
    pub w: usize,
    pub tau: f64,
    /// Kind-specific label: weight distribution, bound family, radius.
    pub label: String,
    pub eps: f64,
}

impl Cell {
    fn describe(&self) -> String {
        format!(
            "cell {} (n={}, w={}, tau={}, eps={}{}{})",
            self.index,
            self.n,
            self.w,
            self.tau,
            self.eps,
            if self.label.is_empty() { "" } else { ", " },
            self.label
        )
    }
}

/// Output of one (cell, replicate) unit before bookkeeping is attached.
pub(crate) struct UnitOutput {
    pub rows: Vec<(String, Vec<(String, super::record::Field)>)>,
    pub artifacts: Vec<PathBuf>,
}

fn eps_list(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    match cfg.extra_f64_list("eps")? {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Ok(cfg.tau.iter().map(|t| 1.0 - 2.0 * t).collect()),
    }
}

fn nonempty<T>(v: &[T], what: &str, kind: ExperimentKind) -> Result<()> {
    if v.is_empty() {
        Err(Error::param(format!("{kind} needs a nonempty `{what}` list")))
    } else {
        Ok(())
    }
}

/// Expands a config into its cells.
pub fn cells(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    use ExperimentKind::*;
    let kind = cfg.kind;
    let mut out = Vec::new();
    let mut push = |n, w, tau, eps, label: String| {
        let index = out.len() as u64;
        out.push(Cell { index, n, w, tau, label, eps });
    };
    match kind {
        Simulate | Scaling | ViralGrowth => {
            nonempty(&cfg.n, "n", kind)?;
            nonempty(&cfg.w, "w", kind)?;
            nonempty(&cfg.tau, "tau", kind)?;
            for &n in &cfg.n {
                for &w in &cfg.w {
                    for &tau in &cfg.tau {
                        push(n, w, tau, 1.0 - 2.0 * tau, String::new());
                    }
                }
            }
        }
        FppShape => {
            let dists = cfg.extra_str("dist").unwrap_or("exponential(1)");
            for d in dists.split(',').map(str::trim).filter(|d| !d.is_empty()) {
                push(0, 0, 0.0, 0.0, d.to_string());
            }
            if out.is_empty() {
                return Err(Error::param("fpp-shape needs at least one `dist`"));
            }
        }
        BoundsSweep => {
            nonempty(&cfg.n, "n", kind)?;
            let fams = cfg.extra_str("family").unwrap_or("lemma-a1,cor-a2,chernoff");
            for f in fams.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                if !["lemma-a1", "cor-a2", "chernoff"].contains(&f) {
                    return Err(Error::param(format!("unknown bound family {f:?}")));
                }
                for &n in &cfg.n {
                    push(n, 0, 0.0, 0.0, f.to_string());
                }
            }
        }
        ViralReplay => {
            nonempty(&cfg.w, "w", kind)?;
            let epss = eps_list(cfg)?;
            nonempty(&epss, "eps or tau", kind)?;
            for &w in &cfg.w {
                for &eps in &epss {
                    push(0, w, (1.0 - eps) / 2.0, eps, String::new());
                }
            }
        }
        PersistenceGeometry => {
            nonempty(&cfg.w, "w", kind)?;
            let epss = eps_list(cfg)?;
            nonempty(&epss, "eps or tau", kind)?;
            let radii = cfg.extra_int_list("big_r")?;
            for &w in &cfg.w {
                for &eps in &epss {
                    let rs = match &radii {
                        Some(v) if !v.is_empty() => v.clone(),
                        _ => vec![w * w * w],
                    };
                    for r in rs {
                        push(0, w, (1.0 - eps) / 2.0, eps, format!("R={r}"));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Replicates per cell; deterministic kinds run once.
pub fn replicates(cfg: &ExperimentConfig) -> u64 {
    match cfg.kind {
        ExperimentKind::BoundsSweep | ExperimentKind::PersistenceGeometry => 1,
        _ => cfg.seeds.max(1),
    }
}

pub(crate) fn run_unit(cfg: &ExperimentConfig, cell: &Cell, replicate: u64, seed: u64) -> Result<UnitOutput> {
    let res = match cfg.kind {
        ExperimentKind::Simulate => simulate(cfg, cell, replicate, seed, true),
        ExperimentKind::Scaling => simulate(cfg, cell, replicate, seed, false),
        ExperimentKind::ViralGrowth => viral_growth(cfg, cell, seed),
        ExperimentKind::FppShape => fpp_shape(cfg, cell, seed),
        ExperimentKind::BoundsSweep => bounds_sweep(cfg, cell),
        ExperimentKind::ViralReplay => viral_replay(cfg, cell, seed),
        ExperimentKind::PersistenceGeometry => persistence(cell),
    };
    res.map_err(|e| Error::param(format!("{}: {e}", cell.describe())))
}

fn one(kind: &str, row: Row) -> Vec<(String, Vec<(String, super::record::Field)>)> {
    vec![(kind.to_string(), row.finish())]
}

fn out_dir(cfg: &ExperimentConfig, sub: &str) -> Result<Option<PathBuf>> {
    match &cfg.out {
        Some(o) => {
            let d = o.join(sub);
            fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
            Ok(Some(d))
        }
        None => Ok(None),
    }
}

fn simulate(cfg: &ExperimentConfig, cell: &Cell, rep: u64, seed: u64, snapshots: bool) -> Result<UnitOutput> {
    let params = SchellingParams::new(cell.n, cell.w, cell.tau, seed)?;
    let grid = create_torus_run(&params, Init::UniformRandom, 0)?;
    let mut state = DynamicsState::new(params, grid)?;
    let mut artifacts = Vec::new();
    let snap_dir = if snapshots { out_dir(cfg, "snapshots")? } else { None };
    let stem = format!("c{}_r{}", cell.index, rep);
    if let Some(dir) = &snap_dir {
        let p = dir.join(format!("{stem}_t0.pgm"));
        state.snapshot(&p)?;
        artifacts.push(p);
    }
    for &t in &cfg.t_stops {
        state.run_until_time(t);
        if let Some(dir) = &snap_dir {
            let p = dir.join(format!("{stem}_t{t}.pgm"));
            state.snapshot(&p)?;
            artifacts.push(p);
        }
    }
    let report = state.run_until_absorbed(cfg.max_events);
    if let Some(dir) = &snap_dir {
        let p = dir.join(format!("{stem}_final.pgm"));
        state.snapshot(&p)?;
        artifacts.push(p);
    }
    let stats = radius_stats(&report.final_grid, &Sample::All, false);
    let t_abs = report.absorption_time;
    let mut row = Row::new()
        .int("n", cell.n)
        .int("w", cell.w)
        .float("tau", cell.tau)
        .float("T", t_abs)
        .int("flips", report.total_flips);
    let kind = if snapshots {
        row = row.bool("absorbed", !report.truncated).bool("truncated", report.truncated);
        "simulate"
    } else {
        "scaling"
    };
    row = row.float("mean_radius", stats.mean).int("max_radius", stats.max);
    Ok(UnitOutput { rows: one(kind, row), artifacts })
}

fn all_plus(grid: &TorusGrid, y: Coord, r: usize) -> bool {
    let rect = TorusRect::centered(y, r.min(grid.max_radius()), grid.n());
    grid.naive_rect_sum(&rect) == rect.area() as i64
}

fn viral_growth(cfg: &ExperimentConfig, cell: &Cell, seed: u64) -> Result<UnitOutput> {
    let mu1 = cfg.require_f64("mu1_hat")?;
    if !(mu1 > 0.0) {
        return Err(Error::param("mu1_hat must be positive"));
    }
    let (n, w) = (cell.n, cell.w);
    let params = SchellingParams::new(n, w, cell.tau, seed)?;
    let side = 4 * w + 1;
    if side > n {
        return Err(Error::param(format!("viral patch side {side} exceeds n={n}")));
    }
    let patch = sample_viral_conditioned(w, params.eps(), seed, 0)?;
    let mut spins = create_torus_run(&params, Init::UniformRandom, 0)?.spins().to_vec();
    let y = Coord::new(n / 2, n / 2);
    for i in 0..side {
        for j in 0..side {
            let at = y.offset(i as isize - 2 * w as isize, j as isize - 2 * w as isize, n);
            spins[at.index(n)] = patch.grid.spin(Coord::new(i, j));
        }
    }
    let grid = TorusGrid::from_spins(n, w, spins)?;
    let mut state = DynamicsState::new(params, grid)?;

    let cap = (n - 1) / 2;
    let big_r = cfg.extra_u64("big_r")?.map_or(cap, |r| (r as usize).min(cap));
    let w4 = (w as u64).pow(4) as usize;
    let r = (big_r / w4).max(1);
    let w3 = (w as f64).powi(3);
    let t2 = w3;
    let t3 = w3 + 2.0 * (w as f64).ln() * r as f64 / mu1;

    state.run_until_time(t2);
    let mut g2 = state.grid_snapshot();
    g2.rebuild_prefix();
    let quarter = all_plus(&g2, y, w / 4);
    let radius_t2 = g2.mono_radius_centered(y);
    state.run_until_time(t3);
    let mut g3 = state.grid_snapshot();
    g3.rebuild_prefix();
    let mono_r = all_plus(&g3, y, r);
    let radius_t3 = g3.mono_radius_centered(y);
    let row = Row::new()
        .int("n", n)
        .int("w", w)
        .float("tau", cell.tau)
        .float("mu1_hat", mu1)
        .int("big_r", big_r)
        .int("r", r)
        .float("t2", t2)
        .float("t3", t3)
        .bool("quarter_mono_t2", quarter)
        .int("radius_t2", radius_t2)
        .bool("mono_r_t3", mono_r)
        .int("radius_t3", radius_t3)
        .int("flips", state.flips())
        .bool("absorbed", state.is_absorbed());
    Ok(UnitOutput { rows: one("viral-growth", row), artifacts: Vec::new() })
}

fn fpp_shape(cfg: &ExperimentConfig, cell: &Cell, seed: u64) -> Result<UnitOutput> {
    let dist = WeightDistribution::parse(&cell.label)?;
    if cfg.t_stops.is_empty() {
        return Err(Error::param("fpp-shape needs `t_stops` as its t grid"));
    }
    let size = cfg.extra_u64("size")?.map(|s| s as usize);
    let est = estimate_mu(dist, &cfg.t_stops, cfg.reps, seed, size)?;
    let mut rows = Vec::with_capacity(est.samples.len() + 1);
    for s in &est.samples {
        let row = Row::new()
            .text("dist", s.dist.clone())
            .float("t", s.t)
            .int("rep", s.rep)
            .int("inradius", s.inradius)
            .int("outradius", s.outradius)
            .float("inner_ratio", s.inner_ratio)
            .float("outer_ratio", s.outer_ratio);
        rows.push(("fpp-shape".to_string(), row.finish()));
    }
    let summary = Row::new()
        .text("dist", dist.label())
        .int("reps", cfg.reps)
        .int("size", est.size)
        .float("mu1_hat", est.mu1_hat)
        .float("mu2_hat", est.mu2_hat)
        .float("containment", est.containment_at_max_t);
    rows.push(("fpp-summary".to_string(), summary.finish()));
    Ok(UnitOutput { rows, artifacts: Vec::new() })
}

fn bound_row(family: &str, n: u64, p1: f64, p2: f64, lhs: f64, rhs: f64, holds: bool) -> (String, Vec<(String, super::record::Field)>) {
    let row = Row::new()
        .text("family", family)
        .int("n", n)
        .float("param1", p1)
        .float("param2", p2)
        .float("lhs", lhs)
        .float("rhs", rhs)
        .bool("holds", holds);
    ("bounds-sweep".to_string(), row.finish())
}

/// Log-scale rows: `lhs` and `rhs` are natural logs for the two tail
/// families, probabilities for the Chernoff family.
fn bounds_sweep(cfg: &ExperimentConfig, cell: &Cell) -> Result<UnitOutput> {
    let n = cell.n as u64;
    let family = cell.label.as_str();
    let mut rows = Vec::new();
    match family {
        "lemma-a1" => {
            if n < 3 {
                return Err(Error::Hypothesis(format!("no admissible (r, q) for n={n}")));
            }
            let row = BinomRow::new(n);
            for r in (n / 2 + 1)..n {
                for q in (r + 1)..=n {
                    let lhs = ln_ratio_biguint(row.upper_count(q as i64), row.upper_count(r as i64));
                    let rhs = if q == n {
                        f64::NEG_INFINITY
                    } else {
                        (q - r) as f64 * (((n - q) as f64).ln() - (r as f64).ln()) - (n as f64).ln()
                    };
                    // Exact comparison by cross-multiplication.
                    let d = (q - r) as u32;
                    let left = row.upper_count(q as i64) * BigUint::from(n) * Pow::pow(BigUint::from(r), d);
                    let right = row.upper_count(r as i64) * Pow::pow(BigUint::from(n - q), d);
                    rows.push(bound_row(family, n, r as f64, q as f64, lhs, rhs, left > right));
                }
            }
        }
        "cor-a2" => {
            let step = cfg.extra_f64("grid_step")?.unwrap_or(0.01);
            let rounding = match cfg.extra_str("rounding").unwrap_or("products") {
                "products" => Rounding::Products,
                "events" => Rounding::Events,
                "literal" => Rounding::Literal,
                other => return Err(Error::param(format!("unknown rounding {other:?}"))),
            };
            let row = BinomRow::new(n);
            for (eps, gamma) in cor_a2_grid(step) {
                let c = cor_a2_on_row(&row, eps, gamma, rounding);
                rows.push(bound_row(family, n, eps, gamma, c.ln_lhs, c.ln_rhs, c.holds));
            }
        }
        "chernoff" => {
            let step = cfg.extra_f64("grid_step")?.unwrap_or(0.05);
            let deltas = cfg.extra_f64_list("delta")?.unwrap_or_else(|| vec![0.1, 0.25, 0.5]);
            for delta in deltas {
                let pool = 4 * n;
                let marked = snap(delta * pool as f64).round() as u64;
                let fam = Hypergeometric::new(pool, marked, n)?;
                let d = marked as f64 / pool as f64;
                let mut j = 0;
                loop {
                    let gamma = snap(d + j as f64 * step);
                    if gamma > 1.0 {
                        break;
                    }
                    let c = check_gen_chernoff(&fam, gamma)?;
                    let lhs = rational_to_f64(&c.lhs);
                    rows.push(bound_row(family, n, d, gamma, lhs, c.bound, c.holds));
                    j += 1;
                }
            }
        }
        other => return Err(Error::param(format!("unknown bound family {other:?}"))),
    }
    Ok(UnitOutput { rows, artifacts: Vec::new() })
}

fn viral_replay(cfg: &ExperimentConfig, cell: &Cell, seed: u64) -> Result<UnitOutput> {
    let max_draws = cfg.extra_u64("max_draws")?.unwrap_or(100_000);
    let opts = EventOptions::default();
    let cs = sample_conditioned_on_events(cell.w, cell.eps, seed, 0, opts, max_draws)?;
    let seq = DiamondSequence::new(cell.w)?;
    let outcome = replay_sequence(&cs.patch, &seq)?;
    let literal = check_condition_events(
        &cs.patch,
        EventOptions { convention: FractionConvention::LiteralFraction, max_listed: 0, ..opts },
    )?;
    let mut artifacts = Vec::new();
    if cfg.extra_bool("trace")?.unwrap_or(false) {
        if let Some(dir) = out_dir(cfg, "traces")? {
            let p = dir.join(format!("c{}_seed{seed}.csv", cell.index));
            outcome.write_trace(&cs.patch, &seq, &p)?;
            artifacts.push(p);
        }
    }
    let row = Row::new()
        .int("w", cell.w)
        .float("eps", cell.eps)
        .int("inside_draws", cs.inside_draws)
        .int("outside_draws", cs.outside_draws)
        .bool("all_hold", cs.report.all_hold)
        .float("e1_min_slack", cs.report.e1_min_slack)
        .bool("succeeded", outcome.succeeded)
        .int("flips", outcome.flips)
        .bool("quarter_mono", outcome.quarter_neighborhood_mono)
        .bool("literal_hold", literal.all_hold);
    Ok(UnitOutput { rows: one("viral-replay", row), artifacts })
}

fn persistence(cell: &Cell) -> Result<UnitOutput> {
    let big_r: u64 = cell
        .label
        .strip_prefix("R=")
        .and_then(|r| r.parse().ok())
        .ok_or_else(|| Error::param("bad radius label"))?;
    let m = persistence_margin(big_r, cell.w, cell.eps, MarginOptions::default())?;
    let row = Row::new()
        .int("w", cell.w)
        .int("big_r", big_r)
        .float("eps", cell.eps)
        .int("min_inside_count", m.min_inside_count)
        .float("required", m.required)
        .bool("pass", m.pass);
    Ok(UnitOutput { rows: one("persistence-geometry", row), artifacts: Vec::new() })
}
