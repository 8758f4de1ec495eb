//! Regional bias events around a viral center `x`.
//!
//! * E1(y, d): the spin sum over `(N(y) ∩ N(x)) \ A(d/w)` is at least
//!   `(beta - eps^2/10)` times the region size.
//! * E2(y): the negative bias of `N(y) \ N(x)` is at most `eps^2` times its size.

use super::sample::ViralPatch;
use super::DiamondSequence;
use crate::lattice::{Coord, TorusRect};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionScope {
    /// Only the pairs the flip sequence uses: E1 for `y` on shell `d + 1`,
    /// E2 for every `y` in the diamond other than `x`.
    Relevant,
    /// E1 for every `y` in `N(x)` and every shell `d`, E2 for every `y` in `N(x)`.
    Full,
}

/// How the E1 bound is read: as a bias fraction `beta - eps^2/10`, or as a
/// `+1` fraction `1/2 + beta - eps^2/10` (a bias fraction twice as large).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FractionConvention {
    Bias,
    LiteralFraction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EventOptions {
    pub scope: ConditionScope,
    pub convention: FractionConvention,
    /// Failures listed individually; the counts are always complete.
    pub max_listed: usize,
}

impl Default for EventOptions {
    fn default() -> Self {
        EventOptions {
            scope: ConditionScope::Relevant,
            convention: FractionConvention::Bias,
            max_listed: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub options: EventOptions,
    pub e1_checked: u64,
    pub e1_failures: u64,
    /// `(y offset, d)` of listed E1 failures.
    pub e1_failed: Vec<((i64, i64), usize)>,
    pub e2_checked: u64,
    pub e2_failures: u64,
    pub e2_failed: Vec<(i64, i64)>,
    /// Smallest `sum / area - bound` seen for each family.
    pub e1_min_slack: f64,
    pub e2_min_slack: f64,
    pub all_hold: bool,
}

/// Rectangle `N(y) ∩ N(x)` in offsets from `x`: `(r0, r1, c0, c1)` inclusive.
fn overlap(a: i64, b: i64, w: i64) -> (i64, i64, i64, i64) {
    ((a - w).max(-w), (a + w).min(w), (b - w).max(-w), (b + w).min(w))
}

fn rect_of(patch: &ViralPatch, (r0, r1, c0, c1): (i64, i64, i64, i64)) -> TorusRect {
    TorusRect::new(patch.at(r0, c0), (r1 - r0 + 1) as usize, (c1 - c0 + 1) as usize)
}

pub fn check_condition_events(patch: &ViralPatch, opts: EventOptions) -> Result<ConditionReport> {
    let w = patch.w as i64;
    let eps = patch.eps;
    let beta = eps + eps * eps;
    let e2 = eps * eps;
    let e1_bound = match opts.convention {
        FractionConvention::Bias => beta - e2 / 10.0,
        FractionConvention::LiteralFraction => 2.0 * (beta - e2 / 10.0),
    };
    let mut grid_owned;
    let grid = if patch.grid.prefix_fresh() {
        &patch.grid
    } else {
        grid_owned = patch.grid.clone();
        grid_owned.rebuild_prefix();
        &grid_owned
    };
    let seq = DiamondSequence::new(patch.w)?;
    let dmax = seq.shells() - 1;
    let mut rep = ConditionReport {
        options: opts,
        e1_checked: 0,
        e1_failures: 0,
        e1_failed: Vec::new(),
        e2_checked: 0,
        e2_failures: 0,
        e2_failed: Vec::new(),
        e1_min_slack: f64::INFINITY,
        e2_min_slack: f64::INFINITY,
        all_hold: false,
    };
    let e1 = |rep: &mut ConditionReport, y: (i64, i64), d: usize, sum: i64, area: i64| {
        rep.e1_checked += 1;
        if area == 0 {
            return;
        }
        let slack = sum as f64 / area as f64 - e1_bound;
        rep.e1_min_slack = rep.e1_min_slack.min(slack);
        if (sum as f64) < e1_bound * area as f64 {
            rep.e1_failures += 1;
            if rep.e1_failed.len() < opts.max_listed {
                rep.e1_failed.push((y, d));
            }
        }
    };

    match opts.scope {
        ConditionScope::Relevant => {
            // A(d) lies inside N(y) for y on shell d + 1, so the region sum is
            // the overlap rectangle minus the diamond.
            let mut diamond_sum = 0i64;
            for d in 0..dmax {
                diamond_sum += seq
                    .shell(d)
                    .iter()
                    .map(|&(a, b)| grid.spin(patch.at(a, b)) as i64)
                    .sum::<i64>();
                let size = super::diamond_size(d) as i64;
                for &(a, b) in seq.shell(d + 1) {
                    let ov = overlap(a, b, w);
                    let rect = rect_of(patch, ov);
                    let sum = grid.rect_sum(&rect)? - diamond_sum;
                    e1(&mut rep, (a, b), d, sum, rect.area() as i64 - size);
                }
            }
        }
        ConditionScope::Full => {
            let side = (2 * w + 1) as usize;
            let stride = side + 1;
            let mut in_diamond = vec![false; side * side];
            let local = |a: i64, b: i64| ((a + w) as usize) * side + (b + w) as usize;
            let mut sums = vec![0i64; stride * stride];
            let mut counts = vec![0i64; stride * stride];
            for d in 0..=dmax {
                for &(a, b) in seq.shell(d) {
                    in_diamond[local(a, b)] = true;
                }
                for r in 0..side {
                    let (mut rs, mut rc) = (0i64, 0i64);
                    for c in 0..side {
                        if !in_diamond[r * side + c] {
                            rs += grid.spin(patch.at(r as i64 - w, c as i64 - w)) as i64;
                            rc += 1;
                        }
                        sums[(r + 1) * stride + c + 1] = sums[r * stride + c + 1] + rs;
                        counts[(r + 1) * stride + c + 1] = counts[r * stride + c + 1] + rc;
                    }
                }
                let q = |t: &[i64], (r0, r1, c0, c1): (i64, i64, i64, i64)| {
                    let (r0, r1, c0, c1) =
                        ((r0 + w) as usize, (r1 + w + 1) as usize, (c0 + w) as usize, (c1 + w + 1) as usize);
                    t[r1 * stride + c1] - t[r0 * stride + c1] - t[r1 * stride + c0] + t[r0 * stride + c0]
                };
                for a in -w..=w {
                    for b in -w..=w {
                        let ov = overlap(a, b, w);
                        e1(&mut rep, (a, b), d, q(&sums, ov), q(&counts, ov));
                    }
                }
            }
        }
    }

    let m = ((2 * w + 1) * (2 * w + 1)) as i64;
    let e2_targets: Vec<(i64, i64)> = match opts.scope {
        ConditionScope::Relevant => seq.nodes[1..].to_vec(),
        ConditionScope::Full => (-w..=w).flat_map(|a| (-w..=w).map(move |b| (a, b))).collect(),
    };
    for (a, b) in e2_targets {
        let ov = overlap(a, b, w);
        let rect = rect_of(patch, ov);
        let inter = grid.rect_sum(&rect)?;
        let y: Coord = patch.at(a, b);
        let sum = grid.bias_at(y) - inter;
        let area = m - rect.area() as i64;
        rep.e2_checked += 1;
        if area == 0 {
            continue;
        }
        rep.e2_min_slack = rep.e2_min_slack.min(sum as f64 / area as f64 + e2);
        if (-sum as f64) > e2 * area as f64 {
            rep.e2_failures += 1;
            if rep.e2_failed.len() < opts.max_listed {
                rep.e2_failed.push((a, b));
            }
        }
    }
    rep.all_hold = rep.e1_failures == 0 && rep.e2_failures == 0;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TorusGrid;

    fn patch_from(w: usize, eps: f64, f: impl Fn(i64, i64) -> i8) -> ViralPatch {
        let n = 4 * w + 1;
        let c = 2 * w as i64;
        let spins = (0..n * n).map(|i| f((i / n) as i64 - c, (i % n) as i64 - c)).collect();
        ViralPatch::from_grid(TorusGrid::from_spins(n, w, spins).unwrap(), eps).unwrap()
    }

    #[test]
    fn all_plus_holds_in_every_scope() {
        let p = patch_from(6, 0.1, |_, _| 1);
        for scope in [ConditionScope::Relevant, ConditionScope::Full] {
            for convention in [FractionConvention::Bias, FractionConvention::LiteralFraction] {
                let r = check_condition_events(&p, EventOptions { scope, convention, max_listed: 4 }).unwrap();
                assert!(r.all_hold, "{scope:?} {convention:?}");
            }
        }
    }

    #[test]
    fn negative_outside_breaks_e2_at_the_boundary() {
        let w = 6i64;
        let p = patch_from(6, 0.1, |a, b| if a.abs() <= w && b.abs() <= w { 1 } else { -1 });
        let r = check_condition_events(&p, EventOptions::default()).unwrap();
        assert_eq!(r.e1_failures, 0);
        assert!(r.e2_failures > 0);
        let opts = EventOptions { scope: ConditionScope::Full, max_listed: usize::MAX, ..Default::default() };
        let full = check_condition_events(&p, opts).unwrap();
        assert!(full.e2_failed.contains(&(w, w)));
    }

    #[test]
    fn full_and_relevant_agree_on_shared_pairs() {
        // Random-ish patch: relevant failures must be a subset of full failures.
        let p = patch_from(8, 0.1, |a, b| if (a * 7 + b * 13).rem_euclid(5) < 3 { 1 } else { -1 });
        let big = EventOptions { max_listed: usize::MAX, ..Default::default() };
        let rel = check_condition_events(&p, big).unwrap();
        let full = check_condition_events(&p, EventOptions { scope: ConditionScope::Full, ..big }).unwrap();
        for f in &rel.e1_failed {
            assert!(full.e1_failed.contains(f), "{f:?}");
        }
        for f in &rel.e2_failed {
            assert!(full.e2_failed.contains(f));
        }
    }
}
