//! Geometry behind the persistence of monochromatic Euclidean balls.
//!
//! A node in a monochromatic ball stays happy as long as at least
//! `((1 - eps)/2)(2w+1)^2` of its neighbors lie inside the ball. The
//! minimum over nodes is attained on the boundary shell; the margin counts it
//! exactly with integer arithmetic.

use num_integer::Roots;

use crate::dynamics::FlipRecord;
use crate::lattice::{snap, window_area, Coord, TorusGrid};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShellScope {
    /// Nodes with `R - 1 < |v| <= R`.
    Shell,
    /// Every node of the ball.
    FullInterior,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginOptions {
    pub scope: ShellScope,
    /// Upper limit on counted node-rows, `nodes * (2w+1)`.
    pub budget: u64,
}

impl Default for MarginOptions {
    fn default() -> Self {
        MarginOptions {
            scope: ShellScope::Shell,
            budget: 4_000_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PersistenceMargin {
    pub radius: u64,
    pub w: usize,
    pub eps: f64,
    pub min_inside_count: u64,
    pub required: f64,
    pub pass: bool,
    pub nodes_checked: u64,
    /// A node attaining the minimum, in the first octant.
    pub argmin: (i64, i64),
}

/// Largest `x >= 0` with `x^2 + y^2 <= r2`, or `None` if `y^2 > r2`.
fn half_width(r2: i128, y: i64) -> Option<i64> {
    let rest = r2 - (y as i128) * (y as i128);
    if rest < 0 {
        None
    } else {
        Some(rest.sqrt() as i64)
    }
}

/// Neighbors of `(a, b)` within distance `w` (L-infinity) lying in the ball.
fn inside_count(a: i64, b: i64, w: i64, r2: i128) -> u64 {
    let mut count = 0u64;
    for y in (b - w)..=(b + w) {
        if let Some(h) = half_width(r2, y) {
            let lo = (a - w).max(-h);
            let hi = (a + w).min(h);
            if hi >= lo {
                count += (hi - lo + 1) as u64;
            }
        }
    }
    count
}

/// Minimum neighbor count inside `B_R(0)` over the checked nodes, against the
/// happiness requirement `((1 - eps)/2)(2w+1)^2`.
pub fn persistence_margin(radius: u64, w: usize, eps: f64, opts: MarginOptions) -> Result<PersistenceMargin> {
    if radius < 1 || w < 1 {
        return Err(Error::param("need R >= 1 and w >= 1"));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::param(format!("eps must lie in [0, 1), got {eps}")));
    }
    let r = radius as i64;
    let r2 = (r as i128) * (r as i128);
    let inner2 = ((r - 1) as i128) * ((r - 1) as i128);
    // By the eightfold symmetry only 0 <= b <= a is needed. Each column b
    // contributes the a-range of nodes in scope.
    let mut planned = 0u64;
    let mut ranges = Vec::new();
    for b in 0..=r {
        let Some(hi) = half_width(r2, b) else { break };
        let lo = match opts.scope {
            ShellScope::FullInterior => 0,
            ShellScope::Shell => match half_width(inner2, b) {
                Some(h) => h + 1,
                None => 0,
            },
        }
        .max(b);
        if hi >= lo {
            ranges.push((b, lo, hi));
            planned += (hi - lo + 1) as u64;
        }
    }
    let cost = planned.saturating_mul(2 * w as u64 + 1);
    if cost > opts.budget {
        return Err(Error::Budget(format!(
            "margin for R={radius}, w={w} needs {cost} row counts, budget is {}",
            opts.budget
        )));
    }
    let wi = w as i64;
    let mut min = u64::MAX;
    let mut argmin = (0, 0);
    for &(b, lo, hi) in &ranges {
        for a in lo..=hi {
            let c = inside_count(a, b, wi, r2);
            if c < min {
                min = c;
                argmin = (a, b);
            }
        }
    }
    let m = window_area(w);
    let required = (1.0 - eps) / 2.0 * m as f64;
    Ok(PersistenceMargin {
        radius,
        w,
        eps,
        min_inside_count: min,
        required,
        pass: 2.0 * min as f64 >= snap((1.0 - eps) * m as f64),
        nodes_checked: planned,
        argmin,
    })
}

/// Watches every Euclidean ball `B_R(x)` on a torus during a run and reports
/// flips inside a ball that was monochromatic at some earlier moment.
#[derive(Clone, Debug)]
pub struct PersistenceMonitor {
    n: usize,
    radius: u64,
    offsets: Vec<(isize, isize)>,
    sums: Vec<i64>,
    recorded: Vec<bool>,
    pub violations: Vec<(FlipRecord, Coord)>,
    pub mono_events: u64,
}

impl PersistenceMonitor {
    pub fn new(grid: &TorusGrid, radius: u64) -> Result<Self> {
        let n = grid.n();
        if 2 * radius as usize + 1 > n {
            return Err(Error::param(format!(
                "ball of radius {radius} does not fit on a torus of side {n}"
            )));
        }
        let r = radius as isize;
        let r2 = (r * r) as i128;
        let mut offsets = Vec::new();
        for dr in -r..=r {
            for dc in -r..=r {
                if (dr * dr + dc * dc) as i128 <= r2 {
                    offsets.push((dr, dc));
                }
            }
        }
        let area = offsets.len() as i64;
        let mut sums = vec![0i64; n * n];
        for (i, s) in sums.iter_mut().enumerate() {
            let x = Coord::from_index(i, n);
            *s = offsets.iter().map(|&(dr, dc)| grid.spin(x.offset(dr, dc, n)) as i64).sum();
        }
        let recorded: Vec<bool> = sums.iter().map(|s| s.abs() == area).collect();
        let mono_events = recorded.iter().filter(|&&r| r).count() as u64;
        Ok(PersistenceMonitor {
            n,
            radius,
            offsets,
            sums,
            recorded,
            violations: Vec::new(),
            mono_events,
        })
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    /// Number of centers whose ball has been monochromatic at some point.
    pub fn recorded_count(&self) -> usize {
        self.recorded.iter().filter(|&&r| r).count()
    }

    pub fn observe(&mut self, flip: &FlipRecord) {
        let area = self.offsets.len() as i64;
        let delta = 2 * flip.new_spin as i64;
        // Centers whose ball contains the flipped node: the ball is symmetric.
        for &(dr, dc) in &self.offsets {
            let x = flip.at.offset(dr, dc, self.n).index(self.n);
            if self.recorded[x] {
                self.violations.push((*flip, Coord::from_index(x, self.n)));
            }
            self.sums[x] += delta;
            if !self.recorded[x] && self.sums[x].abs() == area {
                self.recorded[x] = true;
                self.mono_events += 1;
            }
        }
    }
}
