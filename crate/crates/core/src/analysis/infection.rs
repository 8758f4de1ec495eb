//! Block infection traces and the coupled block-level passage process.
//!
//! The torus is cut into square blocks. A block is infected once one of its
//! nodes flips to the tracked sign, and unhappy once one of its nodes is
//! ε-biased toward that sign.

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dynamics::{DynamicsState, FlipRecord};
use crate::fpp::NEIGHBORS8;
use crate::lattice::Coord;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct InfectionTimeline {
    pub block_width: usize,
    pub blocks_per_side: usize,
    pub sign: i8,
    pub origin_block: Coord,
    pub t_infected: Vec<Option<f64>>,
    pub t_unhappy: Vec<Option<f64>>,
    /// `(time, radius)` whenever the infected frontier grows; radius is the
    /// largest torus L-infinity block distance of an infected block.
    pub frontier: Vec<(f64, usize)>,
}

impl InfectionTimeline {
    pub fn infected_count(&self) -> usize {
        self.t_infected.iter().filter(|t| t.is_some()).count()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("block_row,block_col,t_infected,t_unhappy\n");
        let fmt = |t: Option<f64>| t.map(|v| format!("{v:?}")).unwrap_or_default();
        for i in 0..self.t_infected.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                i / self.blocks_per_side,
                i % self.blocks_per_side,
                fmt(self.t_infected[i]),
                fmt(self.t_unhappy[i])
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.csv()).map_err(|e| Error::io(path, e))
    }
}

/// Incremental recorder, fed the state at construction and after each flip.
#[derive(Clone, Debug)]
pub struct InfectionTracker {
    timeline: InfectionTimeline,
    n: usize,
}

impl InfectionTracker {
    pub fn new(state: &DynamicsState, block_width: usize, sign: i8, origin: Coord) -> Result<Self> {
        let n = state.params().n;
        if block_width == 0 || n % block_width != 0 {
            return Err(Error::param(format!(
                "block width {block_width} must divide the torus side {n}"
            )));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::param("tracked sign must be +1 or -1"));
        }
        let k = n / block_width;
        let mut tracker = InfectionTracker {
            timeline: InfectionTimeline {
                block_width,
                blocks_per_side: k,
                sign,
                origin_block: Coord::new(origin.row / block_width, origin.col / block_width),
                t_infected: vec![None; k * k],
                t_unhappy: vec![None; k * k],
                frontier: Vec::new(),
            },
            n,
        };
        let th = state.threshold();
        for i in 0..n * n {
            if th.positive(sign as i64 * state.bias_field()[i]) {
                let b = tracker.block_of(Coord::from_index(i, n));
                tracker.timeline.t_unhappy[b].get_or_insert(state.time());
            }
        }
        Ok(tracker)
    }

    fn block_of(&self, c: Coord) -> usize {
        let bw = self.timeline.block_width;
        (c.row / bw) * self.timeline.blocks_per_side + c.col / bw
    }

    pub fn observe(&mut self, state: &DynamicsState, flip: &FlipRecord) {
        let tl = &mut self.timeline;
        let sign = tl.sign;
        let bw = tl.block_width;
        let k = tl.blocks_per_side;
        if flip.new_spin == sign {
            let b = (flip.at.row / bw) * k + flip.at.col / bw;
            if tl.t_infected[b].is_none() {
                tl.t_infected[b] = Some(flip.time);
                let bc = Coord::new(b / k, b % k);
                let d = tl.origin_block.torus_linf(bc, k);
                let cur = tl.frontier.last().map_or(0, |f| f.1);
                if tl.frontier.is_empty() || d > cur {
                    tl.frontier.push((flip.time, d.max(cur)));
                }
            }
        }
        let th = state.threshold();
        let w = state.params().w as isize;
        let n = self.n;
        for dr in -w..=w {
            for dc in -w..=w {
                let y = flip.at.offset(dr, dc, n);
                if th.positive(sign as i64 * state.bias(y)) {
                    let b = (y.row / bw) * k + y.col / bw;
                    tl.t_unhappy[b].get_or_insert(flip.time);
                }
            }
        }
    }

    pub fn finish(self) -> InfectionTimeline {
        self.timeline
    }

    pub fn timeline(&self) -> &InfectionTimeline {
        &self.timeline
    }
}

/// Runs `state` to `t_stop` while tracing block infections.
pub fn infection_trace(
    state: &mut DynamicsState,
    block_width: usize,
    sign: i8,
    origin: Coord,
    t_stop: f64,
) -> Result<InfectionTimeline> {
    let mut tracker = InfectionTracker::new(state, block_width, sign, origin)?;
    state.run_until_time_with(t_stop, |s, f| tracker.observe(s, f));
    Ok(tracker.finish())
}

fn first_after(rings: &[f64], t: f64) -> f64 {
    let i = rings.partition_point(|&r| r <= t);
    rings.get(i).copied().unwrap_or(f64::INFINITY)
}

/// Block passage times on a `k x k` torus of blocks: a seed block's time is
/// its first clock ring after 0, and any other block's time is its first ring
/// after the earliest time among its eight neighbors. `rings[b]` holds the
/// sorted ring times of all nodes in block `b`.
pub fn block_fpp(k: usize, seeds: &[bool], rings: &[Vec<f64>]) -> Vec<f64> {
    assert_eq!(seeds.len(), k * k);
    assert_eq!(rings.len(), k * k);
    let mut t = vec![f64::INFINITY; k * k];
    let mut heap = BinaryHeap::new();
    for b in 0..k * k {
        if seeds[b] {
            t[b] = first_after(&rings[b], 0.0);
            heap.push(Reverse((OrdF64(t[b]), b)));
        }
    }
    while let Some(Reverse((OrdF64(tb), b))) = heap.pop() {
        if tb > t[b] || !tb.is_finite() {
            continue;
        }
        let c = Coord::new(b / k, b % k);
        for (dr, dc) in NEIGHBORS8 {
            let v = c.offset(dr, dc, k).index(k);
            // First-ring-after is nondecreasing in its argument, so the
            // label-setting order stays valid.
            let cand = first_after(&rings[v], tb);
            if cand < t[v] {
                t[v] = cand;
                heap.push(Reverse((OrdF64(cand), v)));
            }
        }
    }
    t
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_fpp_on_a_line_of_rings() {
        let k = 3;
        let mut seeds = vec![false; 9];
        seeds[0] = true;
        let mut rings = vec![vec![5.0]; 9];
        rings[0] = vec![1.0, 2.0];
        rings[1] = vec![0.5, 1.5, 9.0];
        let t = block_fpp(k, &seeds, &rings);
        assert_eq!(t[0], 1.0);
        assert_eq!(t[1], 1.5);
        assert_eq!(t[4], 5.0);
    }

    #[test]
    fn first_after_is_strict() {
        assert_eq!(first_after(&[1.0, 2.0], 1.0), 2.0);
        assert_eq!(first_after(&[1.0, 2.0], 2.0), f64::INFINITY);
    }
}
