//! Constructive flip sequence around a viral node.
//!
//! Nodes of the diamond `A(r) = {(a, b) : |a| + |b| <= r w}` are proposed in
//! order of increasing L1 shell. Given that the initial configuration has
//! well-behaved regional biases, each proposed node is unhappy with spin
//! `-1` when its turn comes, so the whole diamond turns `+1`.

mod events;
mod replay;
mod sample;

pub use events::{check_condition_events, ConditionReport, ConditionScope, EventOptions, FractionConvention};
pub use replay::{replay_sequence, ReplayOutcome, REPLAY_TRACE_HEADER};
pub use sample::{
    resample_inside, resample_outside, sample_conditioned_on_events, sample_viral_conditioned, ConditionedSample,
    ViralPatch,
};

use crate::{Error, Result};

/// L1 shells `|a| + |b| = d` for `d = 0..=floor(w/2)`, each in row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiamondSequence {
    pub w: usize,
    /// Offsets `(row, col)` relative to the center.
    pub nodes: Vec<(i64, i64)>,
    pub shell_sizes: Vec<usize>,
}

impl DiamondSequence {
    pub fn new(w: usize) -> Result<Self> {
        if w < 1 {
            return Err(Error::param("w must be at least 1"));
        }
        let dmax = (w / 2) as i64;
        let mut nodes = Vec::new();
        let mut shell_sizes = Vec::new();
        for d in 0..=dmax {
            let before = nodes.len();
            for a in -d..=d {
                let rest = d - a.abs();
                if rest == 0 {
                    nodes.push((a, 0));
                } else {
                    nodes.push((a, -rest));
                    nodes.push((a, rest));
                }
            }
            shell_sizes.push(nodes.len() - before);
        }
        Ok(DiamondSequence { w, nodes, shell_sizes })
    }

    pub fn shells(&self) -> usize {
        self.shell_sizes.len()
    }

    /// `|A(d / w)|`, the nodes in shells `0..=d`.
    pub fn cumulative(&self, d: usize) -> usize {
        self.shell_sizes[..=d].iter().sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes grouped by shell.
    pub fn shell(&self, d: usize) -> &[(i64, i64)] {
        let start: usize = self.shell_sizes[..d].iter().sum();
        &self.nodes[start..start + self.shell_sizes[d]]
    }
}

/// `|A(d/w)| = 2d(d+1) + 1`.
pub fn diamond_size(d: usize) -> usize {
    2 * d * (d + 1) + 1
}

/// Evaluation of the quadratic lower bound on a proposed node's bias over the
/// shell grid `r = 0, 1/w, ..., <= 1/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasSweep {
    pub w: usize,
    pub eps: f64,
    pub beta: f64,
    /// Minimum over the grid of the full bound, in bias units.
    pub min_over_r: f64,
    pub argmin_r: f64,
    /// `4 w^2 eps`, the bias a node must exceed.
    pub threshold_eps: f64,
    /// Continuous minimizer of the bracketed quadratic.
    pub r_star: f64,
    /// Continuous minimum of the bracketed quadratic (per `4 w^2`).
    pub analytic_min: f64,
    /// `eps + eps^2 / 15`.
    pub analytic_target: f64,
    pub holds: bool,
}

fn bracket(r: f64, eps: f64, beta: f64) -> f64 {
    let e2 = eps * eps;
    r * r / 2.0 * (1.0 - beta + e2 / 10.0) - r / 2.0 * (beta + 9.0 * e2 / 10.0) + (beta - e2 / 10.0)
}

pub fn bias_lower_bound_sweep(w: usize, eps: f64) -> Result<BiasSweep> {
    let beta = eps + eps * eps;
    let e2 = eps * eps;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Hypothesis(format!("need 0 < eps < 1, got {eps}")));
    }
    if 8.0 * (1.0 - beta + e2 / 10.0) <= 6.0 {
        return Err(Error::Hypothesis(format!(
            "eps too large: 8(1 - beta + eps^2/10) = {} must exceed 6",
            8.0 * (1.0 - beta + e2 / 10.0)
        )));
    }
    if (w as f64) <= 45.0 * beta / e2 {
        return Err(Error::Hypothesis(format!(
            "w = {w} must exceed 45 beta / eps^2 = {}",
            45.0 * beta / e2
        )));
    }
    let wf = w as f64;
    let mut min_over_r = f64::INFINITY;
    let mut argmin_r = 0.0;
    for d in 0..=(w / 2) {
        let r = d as f64 / wf;
        let v = 4.0 * wf * wf * bracket(r, eps, beta) - 3.0 * beta * wf;
        if v < min_over_r {
            min_over_r = v;
            argmin_r = r;
        }
    }
    let a = 1.0 - beta + e2 / 10.0;
    let r_star = (beta + 9.0 * e2 / 10.0) / (2.0 * a);
    let analytic_min = beta - e2 / 10.0 - (beta + 9.0 * e2 / 10.0).powi(2) / (8.0 * a);
    let threshold_eps = 4.0 * wf * wf * eps;
    Ok(BiasSweep {
        w,
        eps,
        beta,
        min_over_r,
        argmin_r,
        threshold_eps,
        r_star,
        analytic_min,
        analytic_target: eps + e2 / 15.0,
        holds: min_over_r > threshold_eps,
    })
}
