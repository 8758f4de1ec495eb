//! Node-weighted first-passage percolation on a finite square grid with
//! 8-adjacency.
//!
//! A path's cost is the sum of the weights of the nodes it enters; the
//! origin's own weight is never paid. Balls `B(t)` are compared against
//! L-infinity squares `D(r)` centered at the origin.

mod estimate;

pub use estimate::{estimate_mu, percentile, MuEstimate, MuSample};

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::lattice::Coord;
use crate::rng::{self, Purpose};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightDistribution {
    Deterministic(f64),
    Exponential { mean: f64 },
    /// Sum of independent exponentials with rates `k, k-1, ..., 1`: the time
    /// to collect `k` coupons when each missing one arrives at rate 1.
    CouponCollector { k: u32 },
}

impl WeightDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightDistribution::Deterministic(c) if !(c >= 0.0 && c.is_finite()) => {
                Err(Error::param(format!("deterministic weight must be finite and >= 0, got {c}")))
            }
            WeightDistribution::Exponential { mean } if !(mean > 0.0 && mean.is_finite()) => {
                Err(Error::param(format!("exponential mean must be positive, got {mean}")))
            }
            WeightDistribution::CouponCollector { k } if k < 1 => {
                Err(Error::param("coupon-collector k must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            WeightDistribution::Deterministic(c) => c,
            WeightDistribution::Exponential { mean } => mean,
            WeightDistribution::CouponCollector { k } => (1..=k).map(|i| 1.0 / i as f64).sum(),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            WeightDistribution::Deterministic(c) => c,
            WeightDistribution::Exponential { mean } => mean * rng::exponential(rng, 1.0),
            WeightDistribution::CouponCollector { k } => {
                (1..=k).rev().map(|rate| rng::exponential(rng, rate as f64)).sum()
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            WeightDistribution::Deterministic(c) => format!("deterministic({c})"),
            WeightDistribution::Exponential { mean } => format!("exponential({mean})"),
            WeightDistribution::CouponCollector { k } => format!("coupon-collector({k})"),
        }
    }

    /// Parses the forms produced by [`label`](Self::label).
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("unknown weight distribution {s:?}"));
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let arg = rest.strip_suffix(')').ok_or_else(bad)?.trim();
        let d = match name.trim() {
            "deterministic" => WeightDistribution::Deterministic(arg.parse().map_err(|_| bad())?),
            "exponential" => WeightDistribution::Exponential {
                mean: arg.parse().map_err(|_| bad())?,
            },
            "coupon-collector" => WeightDistribution::CouponCollector {
                k: arg.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        d.validate()?;
        Ok(d)
    }
}

/// I.i.d. weights on a `size x size` grid, row-major.
pub fn sample_weights(dist: WeightDistribution, size: usize, seed: u64, run_index: u64) -> Result<Vec<f64>> {
    dist.validate()?;
    if size == 0 {
        return Err(Error::param("grid size must be at least 1"));
    }
    let mut r = rng::stream(seed, run_index, Purpose::Weights);
    Ok((0..size * size).map(|_| dist.sample(&mut r)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    cost: f64,
    row: usize,
    col: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so the max-heap pops the smallest (cost, row, col).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.row.cmp(&self.row))
            .then_with(|| other.col.cmp(&self.col))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub const NEIGHBORS8: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Multi-source Dijkstra: each source starts at its given time. Nodes whose
/// passage exceeds `cutoff` are left at infinity.
pub fn passage_multi(size: usize, weights: &[f64], sources: &[(Coord, f64)], cutoff: f64) -> Vec<f64> {
    assert_eq!(weights.len(), size * size, "weight field has wrong size");
    let mut dist = vec![f64::INFINITY; size * size];
    let mut heap = BinaryHeap::new();
    for &(c, t0) in sources {
        let i = c.row * size + c.col;
        if t0 < dist[i] {
            dist[i] = t0;
            heap.push(Entry { cost: t0, row: c.row, col: c.col });
        }
    }
    while let Some(Entry { cost, row, col }) = heap.pop() {
        if cost > dist[row * size + col] || cost > cutoff {
            continue;
        }
        for (dr, dc) in NEIGHBORS8 {
            let (r, c) = (row as isize + dr, col as isize + dc);
            if r < 0 || c < 0 || r >= size as isize || c >= size as isize {
                continue;
            }
            let j = r as usize * size + c as usize;
            let nc = cost + weights[j];
            if nc < dist[j] && nc <= cutoff {
                dist[j] = nc;
                heap.push(Entry { cost: nc, row: r as usize, col: c as usize });
            }
        }
    }
    dist
}

/// One FPP realization with its passage-time field.
#[derive(Clone, Debug)]
pub struct FppInstance {
    size: usize,
    origin: Coord,
    weights: Vec<f64>,
    passage: Vec<f64>,
    cutoff: f64,
}

impl FppInstance {
    pub fn new(size: usize, origin: Coord, weights: Vec<f64>) -> Result<Self> {
        Self::with_cutoff(size, origin, weights, f64::INFINITY)
    }

    /// Passage times above `cutoff` are not resolved (reported as infinite).
    pub fn with_cutoff(size: usize, origin: Coord, weights: Vec<f64>, cutoff: f64) -> Result<Self> {
        if weights.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                got: weights.len(),
            });
        }
        if origin.row >= size || origin.col >= size {
            return Err(Error::param(format!("origin {origin:?} outside a {size}x{size} grid")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::param(format!("weights must be nonnegative, found {w}")));
        }
        let passage = passage_multi(size, &weights, &[(origin, 0.0)], cutoff);
        Ok(FppInstance { size, origin, weights, passage, cutoff })
    }

    /// Centered origin on a fresh sample.
    pub fn sampled(dist: WeightDistribution, size: usize, seed: u64, run_index: u64, cutoff: f64) -> Result<Self> {
        let weights = sample_weights(dist, size, seed, run_index)?;
        Self::with_cutoff(size, Coord::new(size / 2, size / 2), weights, cutoff)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn origin(&self) -> Coord {
        self.origin
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn passage(&self) -> &[f64] {
        &self.passage
    }

    pub fn passage_at(&self, c: Coord) -> f64 {
        self.passage[c.row * self.size + c.col]
    }

    fn linf(&self, i: usize) -> usize {
        let (r, c) = (i / self.size, i % self.size);
        r.abs_diff(self.origin.row).max(c.abs_diff(self.origin.col))
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if t > self.cutoff {
            return Err(Error::param(format!("t = {t} exceeds the solved cutoff {}", self.cutoff)));
        }
        let s = self.size;
        let touches = (0..s).any(|k| {
            [k, (s - 1) * s + k, k * s, k * s + s - 1]
                .iter()
                .any(|&i| self.passage[i] <= t)
        });
        if touches {
            return Err(Error::BoundaryContact { t });
        }
        Ok(())
    }

    /// `B(t) = {v : passage(v) <= t}`.
    pub fn ball(&self, t: f64) -> Result<Vec<Coord>> {
        self.check_t(t)?;
        Ok((0..self.passage.len())
            .filter(|&i| self.passage[i] <= t)
            .map(|i| Coord::from_index(i, self.size))
            .collect())
    }

    /// Largest `r` with `D(r) ⊆ B(t)` and smallest `R` with `B(t) ⊆ D(R)`.
    pub fn radii(&self, t: f64) -> Result<(usize, usize)> {
        self.check_t(t)?;
        let mut inner = usize::MAX;
        let mut outer = 0;
        for (i, &p) in self.passage.iter().enumerate() {
            let d = self.linf(i);
            if p <= t {
                outer = outer.max(d);
            } else {
                inner = inner.min(d);
            }
        }
        // The boundary check guarantees some node lies outside the ball.
        Ok((inner - 1, outer))
    }

    pub fn bounding_check(&self, t: f64, r: usize, big_r: usize) -> Result<BoundingCheck> {
        let (inner, outer) = self.radii(t)?;
        Ok(BoundingCheck {
            inner_holds: r <= inner,
            outer_holds: outer <= big_r,
        })
    }

    pub fn write_passage_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.passage_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn passage_csv(&self) -> String {
        let mut out = String::from("row,col,passage\n");
        for (i, p) in self.passage.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:?}", i / self.size, i % self.size, p);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundingCheck {
    pub inner_holds: bool,
    pub outer_holds: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_weights_give_chebyshev_distance() {
        let inst = FppInstance::new(9, Coord::new(2, 6), vec![1.0; 81]).unwrap();
        for i in 0..81 {
            let c = Coord::from_index(i, 9);
            let d = c.row.abs_diff(2).max(c.col.abs_diff(6)) as f64;
            assert_eq!(inst.passage_at(c), d);
        }
    }

    #[test]
    fn deterministic_ball_is_a_square() {
        let inst = FppInstance::new(21, Coord::new(10, 10), vec![1.0; 441]).unwrap();
        assert_eq!(inst.radii(5.0).unwrap(), (5, 5));
        assert_eq!(inst.ball(0.0).unwrap(), vec![Coord::new(10, 10)]);
        let c = inst.bounding_check(0.0, 0, 0).unwrap();
        assert!(c.inner_holds && c.outer_holds);
        assert!(!inst.bounding_check(0.0, 1, 0).unwrap().inner_holds);
        assert!(matches!(inst.ball(10.0), Err(Error::BoundaryContact { .. })));
    }

    #[test]
    fn parse_round_trips_labels() {
        for d in [
            WeightDistribution::Deterministic(1.5),
            WeightDistribution::Exponential { mean: 2.0 },
            WeightDistribution::CouponCollector { k: 4 },
        ] {
            assert_eq!(WeightDistribution::parse(&d.label()).unwrap(), d);
        }
        assert!(WeightDistribution::parse("exponential(0)").is_err());
        assert!(WeightDistribution::parse("coupon-collector(0)").is_err());
    }

    #[test]
    fn coupon_collector_mean_is_harmonic() {
        let d = WeightDistribution::CouponCollector { k: 4 };
        assert!((d.mean() - 25.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn cutoff_leaves_far_nodes_unresolved() {
        let inst = FppInstance::with_cutoff(21, Coord::new(10, 10), vec![1.0; 441], 3.0).unwrap();
        assert_eq!(inst.passage_at(Coord::new(10, 14)), f64::INFINITY);
        assert_eq!(inst.radii(3.0).unwrap(), (3, 3));
        assert!(inst.radii(4.0).is_err());
    }
}
