use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;

use super::{ln_rational, ratio, BinomRow};
use crate::lattice::{window_area, BiasThreshold};

/// Exact probabilities for one node under i.i.d. uniform spins.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeBiasProbabilities {
    pub w: usize,
    pub eps: f64,
    pub p_eps_biased: BigRational,
    pub p_unhappy: BigRational,
    pub p_viral: BigRational,
    /// `None` when the node can never be ε-biased.
    pub p_viral_given_biased: Option<BigRational>,
}

impl NodeBiasProbabilities {
    pub fn ln_viral_given_biased(&self) -> Option<f64> {
        self.p_viral_given_biased.as_ref().map(ln_rational)
    }
}

/// Smallest `+1` count `K` with `2K - m > limit`.
pub fn min_positive_count(m: usize, limit: i64) -> i64 {
    (m as i64 + limit).div_euclid(2) + 1
}

pub fn node_bias_probabilities(w: usize, eps: f64) -> NodeBiasProbabilities {
    let m = window_area(w);
    let full = BinomRow::new(m as u64);
    let others = BinomRow::new(m as u64 - 1);
    let biased_count = |delta: f64| -> BigUint {
        let limit = BiasThreshold::new(delta, m).limit();
        // |b| > limit splits into two disjoint, equally likely sides.
        full.upper_count(min_positive_count(m, limit)) * 2u32
    };
    let eps_count = biased_count(eps);
    let viral_count = biased_count(eps + eps * eps);
    // A +1 node is unhappy when the other m-1 spins hold K' plus ones with
    // 1 + 2K' - (m-1) < -limit; the -1 case is symmetric.
    let limit = BiasThreshold::new(eps, m).limit();
    let kmax = (m as i64 - 3 - limit).div_euclid(2);
    let unhappy_count = if kmax < 0 {
        BigUint::zero()
    } else {
        others.lower_count(kmax)
    };
    let p_viral_given_biased = if eps_count.is_zero() {
        None
    } else {
        Some(ratio(viral_count.clone(), eps_count.clone()))
    };
    NodeBiasProbabilities {
        w,
        eps,
        p_eps_biased: ratio(eps_count, full.total()),
        p_unhappy: ratio(unhappy_count, others.total()),
        p_viral: ratio(viral_count, full.total()),
        p_viral_given_biased,
    }
}

/// Law of `K ~ Bin(m, 1/2)` conditioned on `K >= k0`, as weights for
/// `k0, k0 + 1, ...`. Terms below `1e-300` of the first are dropped; the
/// result is normalized.
pub fn conditional_upper_pmf(m: u64, k0: u64) -> Vec<f64> {
    assert!(k0 <= m);
    if 2 * k0 < m {
        // Below the mode the ratio recurrence grows; start from the mode
        // instead and walk both ways.
        let mode = m / 2;
        let mut up = vec![1.0f64];
        let mut t = 1.0;
        for i in mode..m {
            t *= (m - i) as f64 / (i + 1) as f64;
            if t < 1e-300 {
                break;
            }
            up.push(t);
        }
        let mut down = Vec::new();
        let mut t = 1.0;
        let mut i = mode;
        while i > k0 {
            t *= i as f64 / (m - i + 1) as f64;
            i -= 1;
            down.push(t);
        }
        let mut out: Vec<f64> = down.into_iter().rev().collect();
        out.extend(up);
        return normalize(out);
    }
    let mut out = vec![1.0f64];
    let mut t = 1.0;
    for i in k0..m {
        t *= (m - i) as f64 / (i + 1) as f64;
        if t < 1e-300 {
            break;
        }
        out.push(t);
    }
    normalize(out)
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}
