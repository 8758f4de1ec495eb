use rand::Rng;

use super::events::{check_condition_events, ConditionReport, EventOptions};
use crate::bounds::conditional_upper_pmf;
use crate::lattice::{window_area, BiasThreshold, Coord, TorusGrid};
use crate::rng::{self, Purpose, StreamRng};
use crate::{Error, Result};

/// A `(4w+1) x (4w+1)` patch around a node `x` at its center, large enough to
/// hold `N(y)` for every `y` in `N(x)`.
#[derive(Clone, Debug)]
pub struct ViralPatch {
    pub w: usize,
    pub eps: f64,
    pub grid: TorusGrid,
    pub center: Coord,
}

impl ViralPatch {
    pub fn side(w: usize) -> usize {
        4 * w + 1
    }

    /// Wraps an explicit patch; the center is the middle node.
    pub fn from_grid(grid: TorusGrid, eps: f64) -> Result<Self> {
        let w = grid.w();
        if grid.n() != Self::side(w) {
            return Err(Error::param(format!(
                "patch side must be 4w+1 = {}, got {}",
                Self::side(w),
                grid.n()
            )));
        }
        Ok(ViralPatch {
            w,
            eps,
            center: Coord::new(2 * w, 2 * w),
            grid,
        })
    }

    /// Absolute coordinate of an offset from the center.
    pub fn at(&self, dr: i64, dc: i64) -> Coord {
        Coord::new((self.center.row as i64 + dr) as usize, (self.center.col as i64 + dc) as usize)
    }

    pub fn center_bias(&self) -> i64 {
        self.grid.bias_at(self.center)
    }

    pub fn viral_threshold(&self) -> BiasThreshold {
        BiasThreshold::new(self.eps + self.eps * self.eps, window_area(self.w))
    }
}

fn viral_min_count(w: usize, eps: f64) -> Result<u64> {
    let m = window_area(w);
    let limit = BiasThreshold::new(eps + eps * eps, m).limit();
    let k0 = crate::bounds::node_bias_min_count(m, limit);
    if k0 > m as i64 {
        return Err(Error::param(format!(
            "viral threshold {} is unreachable with {m} spins",
            limit
        )));
    }
    Ok(k0 as u64)
}

fn check_eps(w: usize, eps: f64) -> Result<()> {
    if w < 1 {
        return Err(Error::param("w must be at least 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Redraws the spins of `N(x)` from the law conditioned on `x` being viral
/// with positive bias: the `+1` count from the exact conditional binomial,
/// then a uniformly random placement.
pub fn resample_inside(patch: &mut ViralPatch, rng: &mut StreamRng) -> Result<()> {
    let w = patch.w;
    let m = window_area(w) as u64;
    let k0 = viral_min_count(w, patch.eps)?;
    let pmf = conditional_upper_pmf(m, k0);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut k = k0 + pmf.len() as u64 - 1;
    for (j, p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            k = k0 + j as u64;
            break;
        }
    }
    // Partial Fisher-Yates: the first k slots become +1.
    let side = 2 * w + 1;
    let mut slots: Vec<u32> = (0..m as u32).collect();
    for i in 0..k as usize {
        let j = rng.random_range(i..m as usize);
        slots.swap(i, j);
    }
    let mut spins = patch.grid.spins().to_vec();
    let n = patch.grid.n();
    let origin = patch.at(-(w as i64), -(w as i64));
    let mut set = |slot: u32, s: i8| {
        let (r, c) = (slot as usize / side, slot as usize % side);
        spins[(origin.row + r) * n + origin.col + c] = s;
    };
    for (i, &slot) in slots.iter().enumerate() {
        set(slot, if (i as u64) < k { 1 } else { -1 });
    }
    patch.grid = TorusGrid::from_spins(n, w, spins)?;
    Ok(())
}

/// Redraws every spin outside `N(x)` uniformly.
pub fn resample_outside(patch: &mut ViralPatch, rng: &mut StreamRng) -> Result<()> {
    let n = patch.grid.n();
    let w = patch.w;
    let mut fresh = vec![0i8; n * n];
    rng::fill_spins(rng, &mut fresh);
    let mut spins = patch.grid.spins().to_vec();
    let (lo, hi) = (w, 3 * w);
    for r in 0..n {
        for c in 0..n {
            let inside = (lo..=hi).contains(&r) && (lo..=hi).contains(&c);
            if !inside {
                spins[r * n + c] = fresh[r * n + c];
            }
        }
    }
    patch.grid = TorusGrid::from_spins(n, w, spins)?;
    Ok(())
}

/// Uniform spins conditioned on the center being positively viral.
pub fn sample_viral_conditioned(w: usize, eps: f64, seed: u64, sample_index: u64) -> Result<ViralPatch> {
    check_eps(w, eps)?;
    viral_min_count(w, eps)?;
    let mut rng = rng::stream(seed, sample_index, Purpose::ViralSample);
    sample_with(w, eps, &mut rng)
}

fn sample_with(w: usize, eps: f64, rng: &mut StreamRng) -> Result<ViralPatch> {
    let n = ViralPatch::side(w);
    let grid = TorusGrid::uniform(n, w, 1)?;
    let mut patch = ViralPatch::from_grid(grid, eps)?;
    resample_outside(&mut patch, rng)?;
    resample_inside(&mut patch, rng)?;
    Ok(patch)
}

#[derive(Clone, Debug)]
pub struct ConditionedSample {
    pub patch: ViralPatch,
    pub report: ConditionReport,
    pub inside_draws: u64,
    pub outside_draws: u64,
}

/// Viral sample further conditioned on the regional events. The inside and
/// outside of `N(x)` are independent and each event family depends on one
/// side only, so each side is redrawn separately until its events hold.
pub fn sample_conditioned_on_events(
    w: usize,
    eps: f64,
    seed: u64,
    sample_index: u64,
    opts: EventOptions,
    max_draws: u64,
) -> Result<ConditionedSample> {
    check_eps(w, eps)?;
    let mut rng = rng::stream(seed, sample_index, Purpose::ViralSample);
    let mut patch = sample_with(w, eps, &mut rng)?;
    let mut inside_draws = 1;
    let mut outside_draws = 1;
    loop {
        let rep = check_condition_events(&patch, opts)?;
        if rep.all_hold {
            return Ok(ConditionedSample {
                patch,
                report: rep,
                inside_draws,
                outside_draws,
            });
        }
        if inside_draws + outside_draws > max_draws {
            return Err(Error::Budget(format!(
                "conditioning events did not hold within {max_draws} redraws"
            )));
        }
        if rep.e1_failures > 0 {
            resample_inside(&mut patch, &mut rng)?;
            inside_draws += 1;
        }
        if rep.e2_failures > 0 {
            resample_outside(&mut patch, &mut rng)?;
            outside_draws += 1;
        }
    }
}
