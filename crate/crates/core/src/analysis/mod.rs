//! Configuration-level measurements: node classification, monochromatic
//! radius statistics, block infection traces and ball-persistence geometry.

mod infection;
mod persistence;

pub use infection::{block_fpp, infection_trace, InfectionTimeline, InfectionTracker};
pub use persistence::{persistence_margin, MarginOptions, PersistenceMargin, PersistenceMonitor, ShellScope};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::lattice::{BiasThreshold, Coord, TorusGrid};
use crate::{Error, Result};

/// Per-node flags; signs are `+1`, `-1`, or 0 for "not biased".
#[derive(Clone, Debug, PartialEq)]
pub struct NodeClassification {
    pub eps: f64,
    pub eps_threshold: BiasThreshold,
    pub viral_threshold: BiasThreshold,
    pub biased: Vec<i8>,
    pub unhappy: Vec<bool>,
    pub viral: Vec<i8>,
}

impl NodeClassification {
    pub fn count_biased(&self) -> usize {
        self.biased.iter().filter(|&&s| s != 0).count()
    }

    pub fn count_unhappy(&self) -> usize {
        self.unhappy.iter().filter(|&&u| u).count()
    }

    pub fn count_viral(&self) -> usize {
        self.viral.iter().filter(|&&s| s != 0).count()
    }
}

fn sign_of(th: &BiasThreshold, b: i64) -> i8 {
    if th.positive(b) {
        1
    } else if th.negative(b) {
        -1
    } else {
        0
    }
}

/// Classifies every node; viral nodes are `(eps + eps^2)`-biased.
pub fn classify_nodes(grid: &TorusGrid, eps: f64) -> Result<NodeClassification> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("eps must lie in (0, 1), got {eps}")));
    }
    let m = grid.area();
    let eps_threshold = BiasThreshold::new(eps, m);
    let viral_threshold = BiasThreshold::new(eps + eps * eps, m);
    let bias = grid.bias_field();
    let mut out = NodeClassification {
        eps,
        eps_threshold,
        viral_threshold,
        biased: Vec::with_capacity(bias.len()),
        unhappy: Vec::with_capacity(bias.len()),
        viral: Vec::with_capacity(bias.len()),
    };
    for (&b, &s) in bias.iter().zip(grid.spins()) {
        out.biased.push(sign_of(&eps_threshold, b));
        out.unhappy.push(eps_threshold.unhappy(s, b));
        out.viral.push(sign_of(&viral_threshold, b));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum Sample {
    All,
    Coords(Vec<Coord>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionReport {
    pub coords: Vec<Coord>,
    pub centered: Vec<usize>,
    pub containing: Option<Vec<usize>>,
    pub mean: f64,
    pub median: f64,
    pub max: usize,
    /// `histogram[r]` = number of sampled nodes with centered radius `r`.
    pub histogram: Vec<u64>,
}

impl RegionReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("row,col,radius\n");
        for (c, r) in self.coords.iter().zip(&self.centered) {
            let _ = writeln!(out, "{},{},{}", c.row, c.col, r);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.csv()).map_err(|e| Error::io(path, e))
    }
}

/// Centered radius of every node, row-major.
pub fn centered_radius_field(grid: &TorusGrid) -> Vec<usize> {
    let mut g;
    let grid = if grid.prefix_fresh() {
        grid
    } else {
        g = grid.clone();
        g.rebuild_prefix();
        &g
    };
    let n = grid.n();
    (0..n * n).map(|i| grid.mono_radius_centered(Coord::from_index(i, n))).collect()
}

/// Largest `r` such that some monochromatic `N_r(c)` contains `x`, given the
/// centered radius field. Doubling scan, then bisection: the property is
/// downward closed in `r`.
pub fn containing_radius(n: usize, field: &[usize], x: Coord) -> usize {
    let max_r = (n - 1) / 2;
    let holds = |r: usize| -> bool {
        let ri = r as isize;
        for dr in -ri..=ri {
            for dc in -ri..=ri {
                if field[x.offset(dr, dc, n).index(n)] >= r {
                    return true;
                }
            }
        }
        false
    };
    let mut lo = field[x.index(n)];
    if lo >= max_r {
        return max_r;
    }
    let mut step = 1;
    let mut hi;
    loop {
        let cand = (lo + step).min(max_r);
        if holds(cand) {
            lo = cand;
            if cand == max_r {
                return max_r;
            }
            step *= 2;
        } else {
            hi = cand - 1;
            break;
        }
    }
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

pub fn radius_stats(grid: &TorusGrid, sample: &Sample, with_containing: bool) -> RegionReport {
    let n = grid.n();
    let field = centered_radius_field(grid);
    let coords: Vec<Coord> = match sample {
        Sample::All => (0..n * n).map(|i| Coord::from_index(i, n)).collect(),
        Sample::Coords(c) => c.iter().map(|c| Coord::new(c.row % n, c.col % n)).collect(),
    };
    let centered: Vec<usize> = coords.iter().map(|c| field[c.index(n)]).collect();
    let containing =
        with_containing.then(|| coords.iter().map(|&c| containing_radius(n, &field, c)).collect());
    let max = centered.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0u64; max + 1];
    for &r in &centered {
        histogram[r] += 1;
    }
    let k = centered.len();
    let mean = if k == 0 { 0.0 } else { centered.iter().sum::<usize>() as f64 / k as f64 };
    let mut sorted = centered.clone();
    sorted.sort_unstable();
    let median = match k {
        0 => 0.0,
        _ if k % 2 == 1 => sorted[k / 2] as f64,
        _ => (sorted[k / 2 - 1] + sorted[k / 2]) as f64 / 2.0,
    };
    RegionReport {
        coords,
        centered,
        containing,
        mean,
        median,
        max,
        histogram,
    }
}
