use std::fmt::Write as _;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use super::{ln_ratio_biguint, ln_rational, ratio, BinomRow};
use crate::lattice::snap;
use crate::{Error, Result};

/// One row of a check table.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub n: u64,
    pub param1: f64,
    pub param2: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub const CHECK_CSV_HEADER: &str = "n,param1,param2,lhs,rhs,holds";

pub fn check_rows_csv(rows: &[CheckRow]) -> String {
    let mut out = String::from(CHECK_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:e},{:e},{}",
            r.n, r.param1, r.param2, r.lhs, r.rhs, r.holds
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Conditional binomial tail versus a power bound.

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaA1Check {
    pub n: u64,
    pub r: u64,
    pub q: u64,
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub holds: bool,
}

/// `P(X >= q | X >= r) > (1/n) ((n - q)/r)^(q - r)` for `X ~ Bin(n, 1/2)`.
pub fn check_lemma_a1(n: u64, r: u64, q: u64) -> Result<LemmaA1Check> {
    if !(2 * r > n && r < q && q <= n) {
        return Err(Error::Hypothesis(format!(
            "need n/2 < r < q <= n, got n={n}, r={r}, q={q}"
        )));
    }
    let row = BinomRow::new(n);
    let lhs = ratio(row.upper_count(q as i64).clone(), row.upper_count(r as i64).clone());
    let d = (q - r) as u32;
    let rhs = ratio(
        Pow::pow(BigUint::from(n - q), d),
        BigUint::from(n) * Pow::pow(BigUint::from(r), d),
    );
    let holds = lhs > rhs;
    Ok(LemmaA1Check { n, r, q, lhs, rhs, holds })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub checked: u64,
    pub failures: Vec<(u64, u64, u64)>,
}

/// Every admissible `(n, r, q)` with `n <= n_max`, by exact cross-multiplication.
pub fn sweep_lemma_a1(n_max: u64) -> SweepSummary {
    let mut out = SweepSummary::default();
    for n in 2..=n_max {
        let row = BinomRow::new(n);
        let nb = BigUint::from(n);
        for r in (n / 2 + 1)..n {
            let tr = row.upper_count(r as i64);
            let rb = BigUint::from(r);
            let mut r_pow = BigUint::one();
            for q in (r + 1)..=n {
                r_pow *= &rb;
                let d = (q - r) as u32;
                let left = row.upper_count(q as i64) * &nb * &r_pow;
                let right = tr * Pow::pow(BigUint::from(n - q), d);
                out.checked += 1;
                if left <= right {
                    out.failures.push((n, r, q));
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Conditional tail bound with explicit threshold rounding.

/// How the two integer thresholds are derived from `gamma n` and `eps n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rounding {
    /// `q = ceil((1/2 + gamma) n)`, `r = floor((1/2 + eps) n)`.
    Products,
    /// Thresholds of the events themselves: both ceilings.
    Events,
    /// `q = ceil(1/2 + gamma) n = n`, `r = floor(1/2 + eps) n = 0`.
    Literal,
}

impl Rounding {
    pub const ALL: [Rounding; 3] = [Rounding::Products, Rounding::Events, Rounding::Literal];

    pub fn thresholds(self, n: u64, eps: f64, gamma: f64) -> (i64, i64) {
        let nf = n as f64;
        let hi = snap((0.5 + gamma) * nf);
        let lo = snap((0.5 + eps) * nf);
        match self {
            Rounding::Products => (hi.ceil() as i64, lo.floor() as i64),
            Rounding::Events => (hi.ceil() as i64, lo.ceil() as i64),
            Rounding::Literal => ((0.5 + gamma).ceil() as i64 * n as i64, (0.5 + eps).floor() as i64 * n as i64),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rounding::Products => "products",
            Rounding::Events => "events",
            Rounding::Literal => "literal",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorA2Check {
    pub n: u64,
    pub eps: f64,
    pub gamma: f64,
    pub rounding: Rounding,
    pub q: i64,
    pub r: i64,
    pub lhs: BigRational,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub holds: bool,
}

fn check_cor_a2_shape(n: u64, eps: f64, gamma: f64) -> Result<()> {
    if !(0.0 < eps && eps < gamma && gamma < 1.0 / 3.0) {
        return Err(Error::Hypothesis(format!(
            "need 0 < eps < gamma < 1/3, got eps={eps}, gamma={gamma}"
        )));
    }
    if n < 1 {
        return Err(Error::Hypothesis("need n >= 1".into()));
    }
    Ok(())
}

/// `P(X >= q | X >= r) >= (1/n) e^{-6 (gamma^2 - eps^2) n}`.
pub fn check_cor_a2(n: u64, eps: f64, gamma: f64, rounding: Rounding) -> Result<CorA2Check> {
    check_cor_a2_shape(n, eps, gamma)?;
    Ok(cor_a2_on_row(&BinomRow::new(n), eps, gamma, rounding))
}

pub fn cor_a2_on_row(row: &BinomRow, eps: f64, gamma: f64, rounding: Rounding) -> CorA2Check {
    let n = row.n();
    let (q, r) = rounding.thresholds(n, eps, gamma);
    let (tq, tr) = (row.upper_count(q), row.upper_count(r));
    let lhs = if tr.is_zero() {
        BigRational::zero()
    } else {
        ratio(tq.clone(), tr.clone())
    };
    let ln_lhs = ln_ratio_biguint(tq, tr);
    let ln_rhs = -(n as f64).ln() - 6.0 * (gamma * gamma - eps * eps) * n as f64;
    CorA2Check {
        n,
        eps,
        gamma,
        rounding,
        q,
        r,
        lhs,
        ln_lhs,
        ln_rhs,
        holds: ln_lhs >= ln_rhs,
    }
}

/// Admissible pairs `eps < gamma < 1/3` on a grid `step, 2 step, ...`.
pub fn cor_a2_grid(step: f64) -> Vec<(f64, f64)> {
    let k = (1.0 / 3.0 / step).ceil() as usize;
    let vals: Vec<f64> = (1..=k).map(|i| snap(i as f64 * step)).filter(|&v| v < 1.0 / 3.0).collect();
    let mut out = Vec::new();
    for &e in &vals {
        for &g in &vals {
            if e < g {
                out.push((e, g));
            }
        }
    }
    out
}

#[derive(Clone, Debug, Default)]
pub struct CorA2Sweep {
    pub checked: u64,
    pub failures: Vec<(Rounding, u64, f64, f64)>,
}

impl CorA2Sweep {
    pub fn failures_for(&self, rounding: Rounding) -> usize {
        self.failures.iter().filter(|f| f.0 == rounding).count()
    }
}

pub fn sweep_cor_a2(ns: impl IntoIterator<Item = u64>, grid: &[(f64, f64)], readings: &[Rounding]) -> CorA2Sweep {
    let mut out = CorA2Sweep::default();
    for n in ns {
        let row = BinomRow::new(n);
        for &(e, g) in grid {
            for &rd in readings {
                let c = cor_a2_on_row(&row, e, g, rd);
                out.checked += 1;
                if !c.holds {
                    out.failures.push((rd, n, e, g));
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Concentration for negatively correlated indicators.

/// Draws without replacement from a pool with some items marked. The
/// indicators "draw i is marked" satisfy `P(all of S) <= delta^|S|` with
/// `delta = marked / pool`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hypergeometric {
    pub pool: u64,
    pub marked: u64,
    pub draws: u64,
}

impl Hypergeometric {
    pub fn new(pool: u64, marked: u64, draws: u64) -> Result<Self> {
        if marked > pool || draws > pool || draws == 0 {
            return Err(Error::param(format!(
                "need marked <= pool, 0 < draws <= pool; got pool={pool}, marked={marked}, draws={draws}"
            )));
        }
        Ok(Hypergeometric { pool, marked, draws })
    }

    pub fn delta(&self) -> BigRational {
        ratio(BigUint::from(self.marked), BigUint::from(self.pool))
    }

    /// `P(X >= k)` exactly, `X` the number of marked draws.
    pub fn upper_tail(&self, k: i64) -> BigRational {
        let (nn, kk, n) = (self.pool, self.marked, self.draws);
        let marked = BinomRow::new(kk);
        let unmarked = BinomRow::new(nn - kk);
        let mut num = BigUint::zero();
        let lo = k.max(0) as u64;
        for x in lo..=n.min(kk) {
            if n - x <= nn - kk {
                num += marked.coeff(x) * unmarked.coeff(n - x);
            }
        }
        ratio(num, binomial(nn, n))
    }

    /// Exact check of `P(all of S marked) <= delta^|S|` for every `|S| <= draws`
    /// (the probability depends on `S` only through its size).
    pub fn negatively_correlated(&self) -> bool {
        let (nn, kk) = (BigUint::from(self.pool), BigUint::from(self.marked));
        let mut prob = BigRational::one();
        let mut pow = BigRational::one();
        let delta = self.delta();
        for s in 0..self.draws {
            if s >= self.marked {
                prob = BigRational::zero();
            } else {
                prob *= ratio(&kk - BigUint::from(s), &nn - BigUint::from(s));
            }
            pow *= &delta;
            if prob > pow {
                return false;
            }
        }
        true
    }
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    c
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChernoffCheck {
    pub n: u64,
    pub delta: f64,
    pub gamma: f64,
    pub lhs: BigRational,
    pub ln_lhs: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `P(sum X_i >= gamma n) <= e^{-2n(gamma - delta)^2}` on a hypergeometric family.
pub fn check_gen_chernoff(family: &Hypergeometric, gamma: f64) -> Result<ChernoffCheck> {
    let n = family.draws;
    let delta = family.marked as f64 / family.pool as f64;
    if !(gamma <= 1.0) || gamma < delta {
        return Err(Error::Hypothesis(format!(
            "need delta <= gamma <= 1, got delta={delta}, gamma={gamma}"
        )));
    }
    let k = snap(gamma * n as f64).ceil() as i64;
    let lhs = family.upper_tail(k);
    let ln_lhs = if lhs.is_zero() { f64::NEG_INFINITY } else { ln_rational(&lhs) };
    let exponent = -2.0 * n as f64 * (gamma - delta) * (gamma - delta);
    let bound = exponent.exp();
    // Compare in log space; the exact side carries full double precision.
    let holds = ln_lhs <= exponent + 1e-12 * exponent.abs().max(1.0) || lhs.is_zero();
    Ok(ChernoffCheck { n, delta, gamma, lhs, ln_lhs, bound, holds })
}

#[derive(Clone, Debug, Default)]
pub struct ChernoffSweep {
    pub checked: u64,
    pub failures: Vec<(u64, f64, f64)>,
    pub correlation_failures: Vec<(u64, f64)>,
}

/// Pool of `4n` items with `delta * 4n` marked, `n` draws, `gamma` on a grid
/// from `delta` to 1.
pub fn sweep_gen_chernoff(n_max: u64, deltas: &[f64], step: f64) -> ChernoffSweep {
    let mut out = ChernoffSweep::default();
    for n in 1..=n_max {
        for &delta in deltas {
            let pool = 4 * n;
            let marked = snap(delta * pool as f64).round() as u64;
            let fam = Hypergeometric::new(pool, marked, n).expect("valid family");
            if !fam.negatively_correlated() {
                out.correlation_failures.push((n, delta));
            }
            let d = marked as f64 / pool as f64;
            let mut j = 0;
            loop {
                let gamma = snap(d + j as f64 * step);
                if gamma > 1.0 {
                    break;
                }
                let c = check_gen_chernoff(&fam, gamma).expect("admissible");
                out.checked += 1;
                if !c.holds {
                    out.failures.push((n, delta, gamma));
                }
                j += 1;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Scaling shape of the viral-given-biased probability.

#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points: n,
    })
}

/// Regresses `ln P(viral | eps-biased)` on `eps^3 w^2`.
pub fn viral_given_biased_regression(ws: &[usize], epss: &[f64]) -> Option<LinearFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &w in ws {
        for &e in epss {
            let p = super::node_bias_probabilities(w, e);
            if let Some(l) = p.ln_viral_given_biased() {
                xs.push(e * e * e * (w * w) as f64);
                ys.push(l);
            }
        }
    }
    linear_fit(&xs, &ys)
}
