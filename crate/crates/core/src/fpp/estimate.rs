use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FppInstance, WeightDistribution};
use crate::{Error, Result};

/// One `(t, rep)` measurement, scaled by the weight mean `lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuSample {
    pub dist: String,
    pub t: f64,
    pub rep: u64,
    pub inradius: usize,
    pub outradius: usize,
    /// `lambda * inradius / t`.
    pub inner_ratio: f64,
    /// `lambda * outradius / t`.
    pub outer_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MuEstimate {
    pub mu1_hat: f64,
    pub mu2_hat: f64,
    pub size: usize,
    pub samples: Vec<MuSample>,
    /// Fraction of reps with `D(mu1 t/lambda) ⊆ B(t) ⊆ D(mu2 t/lambda)` at the largest `t`.
    pub containment_at_max_t: f64,
}

impl MuEstimate {
    pub fn samples_at(&self, t: f64) -> impl Iterator<Item = &MuSample> {
        self.samples.iter().filter(move |s| s.t == t)
    }

    /// Coefficient of variation of the outer ratio at each `t`.
    pub fn outer_cv_by_t(&self, t_grid: &[f64]) -> Vec<(f64, f64)> {
        t_grid
            .iter()
            .map(|&t| {
                let v: Vec<f64> = self.samples_at(t).map(|s| s.outer_ratio).collect();
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
                (t, var.sqrt() / mean)
            })
            .collect()
    }

    pub fn json_lines(&self) -> String {
        self.samples
            .iter()
            .map(|s| serde_json::to_string(s).expect("plain struct serializes") + "\n")
            .collect()
    }
}

/// Linearly interpolated percentile, `p` in `[0, 100]`.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let h = (v.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Fits the inner and outer shape constants from the 5th and 95th
/// percentiles of the scaled radii pooled over `t_grid`. With `size = None`
/// the grid starts near `6 t_max / lambda` and doubles on boundary contact.
pub fn estimate_mu(
    dist: WeightDistribution,
    t_grid: &[f64],
    reps: u64,
    seed: u64,
    size: Option<usize>,
) -> Result<MuEstimate> {
    dist.validate()?;
    if t_grid.is_empty() || t_grid.windows(2).any(|p| p[0] >= p[1]) || t_grid[0] <= 0.0 {
        return Err(Error::param("t grid must be positive and strictly increasing"));
    }
    if reps == 0 {
        return Err(Error::param("need at least one repetition"));
    }
    let lambda = dist.mean();
    if lambda <= 0.0 {
        return Err(Error::param("weight mean must be positive"));
    }
    let t_max = *t_grid.last().expect("nonempty");
    let mut s = size.unwrap_or_else(|| 2 * (3.0 * t_max / lambda).ceil() as usize + 11);
    loop {
        match measure(dist, t_grid, reps, seed, s, lambda) {
            Ok(samples) => return Ok(finish(samples, s, t_grid, reps)),
            Err(Error::BoundaryContact { .. }) if size.is_none() => s = 2 * s + 1,
            Err(e) => return Err(e),
        }
    }
}

fn measure(
    dist: WeightDistribution,
    t_grid: &[f64],
    reps: u64,
    seed: u64,
    size: usize,
    lambda: f64,
) -> Result<Vec<MuSample>> {
    let t_max = *t_grid.last().expect("nonempty");
    let label = dist.label();
    let per_rep: Vec<Result<Vec<MuSample>>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let inst = FppInstance::sampled(dist, size, seed, rep, t_max)?;
            t_grid
                .iter()
                .map(|&t| {
                    let (inr, outr) = inst.radii(t)?;
                    Ok(MuSample {
                        dist: label.clone(),
                        t,
                        rep,
                        inradius: inr,
                        outradius: outr,
                        inner_ratio: lambda * inr as f64 / t,
                        outer_ratio: lambda * outr as f64 / t,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(reps as usize * t_grid.len());
    for r in per_rep {
        out.extend(r?);
    }
    Ok(out)
}

fn finish(samples: Vec<MuSample>, size: usize, t_grid: &[f64], reps: u64) -> MuEstimate {
    let inner: Vec<f64> = samples.iter().map(|s| s.inner_ratio).collect();
    let outer: Vec<f64> = samples.iter().map(|s| s.outer_ratio).collect();
    let mu1_hat = percentile(&inner, 5.0);
    let mu2_hat = percentile(&outer, 95.0);
    let t_max = *t_grid.last().expect("nonempty");
    let contained = samples
        .iter()
        .filter(|s| s.t == t_max && s.inner_ratio >= mu1_hat && s.outer_ratio <= mu2_hat)
        .count();
    MuEstimate {
        mu1_hat,
        mu2_hat,
        size,
        samples,
        containment_at_max_t: contained as f64 / reps as f64,
    }
}
