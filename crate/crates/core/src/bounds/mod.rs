//! Exact binomial and hypergeometric tails and the inequality checks built
//! on them.

mod checks;
mod loader;
mod node;

pub use checks::*;
pub use node::{conditional_upper_pmf, min_positive_count as node_bias_min_count, node_bias_probabilities, NodeBiasProbabilities};

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::f64::consts::LN_2;

/// Largest `n` evaluated by exact big-integer summation in automatic mode.
pub const EXACT_LIMIT: u64 = 10_000;

/// Relative-error target for log-space values.
pub const LOG_CERTIFY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailMode {
    /// Exact below [`EXACT_LIMIT`], log space above.
    Auto,
    Exact,
    Log,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TailValue {
    Exact(BigRational),
    Log {
        ln_value: f64,
        /// Bound on the relative error of `exp(ln_value)`.
        rel_err: f64,
        certified: bool,
    },
}

/// `P(X >= k)` for `X ~ Bin(n, 1/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactTail {
    pub n: u64,
    pub k: i64,
    pub value: TailValue,
}

impl ExactTail {
    pub fn ln(&self) -> f64 {
        match &self.value {
            TailValue::Exact(q) => ln_rational(q),
            TailValue::Log { ln_value, .. } => *ln_value,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.value {
            TailValue::Exact(q) => rational_to_f64(q),
            TailValue::Log { ln_value, .. } => ln_value.exp(),
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match &self.value {
            TailValue::Exact(q) => Some(q),
            TailValue::Log { .. } => None,
        }
    }
}

/// Natural log of a big integer, accurate to double precision at any size.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 960 {
        return libm::log(x.to_f64().expect("fits in f64"));
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("fits in f64");
    libm::log(top) + shift as f64 * LN_2
}

pub fn ln_rational(q: &BigRational) -> f64 {
    assert!(q.numer() >= &num_bigint::BigInt::zero(), "log of a negative rational");
    ln_ratio_biguint(q.numer().magnitude(), q.denom().magnitude())
}

/// `ln(num / den)` without the cancellation of subtracting two large logs:
/// the quotient is formed at 64-bit precision first.
pub fn ln_ratio_biguint(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return f64::NEG_INFINITY;
    }
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    libm::log(q.to_f64().expect("64-bit quotient")) - shift as f64 * LN_2
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    let l = ln_rational(q);
    if l < -700.0 || l > 700.0 {
        return l.exp();
    }
    // Ratio of leading parts keeps precision without overflow.
    let (num, den) = (q.numer().magnitude(), q.denom().magnitude());
    let shift = num.bits().max(den.bits()).saturating_sub(1000);
    let a = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let b = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    if a.is_finite() && b.is_finite() && b > 0.0 && a / b != 0.0 {
        a / b
    } else {
        l.exp()
    }
}

pub(crate) fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// Binomial coefficients `C(n, i)` and upper suffix sums for one `n`.
#[derive(Clone, Debug)]
pub struct BinomRow {
    n: u64,
    coeffs: Vec<BigUint>,
    /// `suffix[k] = sum_{i >= k} C(n, i)`, with `suffix[n + 1] = 0`.
    suffix: Vec<BigUint>,
}

impl BinomRow {
    pub fn new(n: u64) -> Self {
        let len = n as usize + 1;
        let mut coeffs = Vec::with_capacity(len);
        let mut c = BigUint::one();
        for i in 0..=n {
            coeffs.push(c.clone());
            if i < n {
                c = c * BigUint::from(n - i) / BigUint::from(i + 1);
            }
        }
        let mut suffix = vec![BigUint::zero(); len + 1];
        for i in (0..len).rev() {
            suffix[i] = &suffix[i + 1] + &coeffs[i];
        }
        BinomRow { n, coeffs, suffix }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn coeff(&self, i: u64) -> &BigUint {
        &self.coeffs[i as usize]
    }

    /// `sum_{i >= k} C(n, i)` with clamping outside `[0, n]`.
    pub fn upper_count(&self, k: i64) -> &BigUint {
        let idx = k.clamp(0, self.n as i64 + 1) as usize;
        &self.suffix[idx]
    }

    /// `sum_{i <= k} C(n, i)`.
    pub fn lower_count(&self, k: i64) -> BigUint {
        self.upper_count(0) - self.upper_count(k + 1)
    }

    pub fn total(&self) -> BigUint {
        BigUint::one() << self.n
    }

    pub fn upper_tail(&self, k: i64) -> BigRational {
        ratio(self.upper_count(k).clone(), self.total())
    }

    /// `ln sum_{i >= k} C(n, i) - n ln 2`.
    pub fn ln_upper_tail(&self, k: i64) -> f64 {
        ln_ratio_biguint(self.upper_count(k), &self.total())
    }
}

/// `P(X >= k)` for `X ~ Bin(n, 1/2)`; `k` outside `[0, n]` clamps.
pub fn binom_tail(n: u64, k: i64) -> ExactTail {
    binom_tail_with(n, k, TailMode::Auto)
}

pub fn binom_tail_with(n: u64, k: i64, mode: TailMode) -> ExactTail {
    let exact = match mode {
        TailMode::Auto => n <= EXACT_LIMIT,
        TailMode::Exact => true,
        TailMode::Log => false,
    };
    if k <= 0 || k > n as i64 {
        let v = if k <= 0 { BigRational::one() } else { BigRational::zero() };
        return ExactTail {
            n,
            k,
            value: if exact {
                TailValue::Exact(v)
            } else {
                TailValue::Log {
                    ln_value: if k <= 0 { 0.0 } else { f64::NEG_INFINITY },
                    rel_err: 0.0,
                    certified: true,
                }
            },
        };
    }
    let value = if exact {
        TailValue::Exact(exact_upper_tail(n, k as u64))
    } else {
        let (ln_value, rel_err) = log_upper_tail(n, k as u64);
        TailValue::Log {
            ln_value,
            rel_err,
            certified: rel_err <= LOG_CERTIFY_TOL,
        }
    };
    ExactTail { n, k, value }
}

fn exact_upper_tail(n: u64, k: u64) -> BigRational {
    // Sum the shorter side.
    let mut c = BigUint::one();
    let mut upper = BigUint::zero();
    let mut lower = BigUint::zero();
    let from_top = n - k < k;
    for i in 0..=n {
        if from_top {
            // c = C(n, i) = C(n, n - i); i runs over the top tail
            if i > n - k {
                break;
            }
            upper += &c;
        } else {
            if i >= k {
                break;
            }
            lower += &c;
        }
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    let total = BigUint::one() << n;
    let count = if from_top { upper } else { &total - lower };
    let g = count.gcd(&total);
    ratio(count / &g, total / g)
}

fn log_upper_tail(n: u64, k: u64) -> (f64, f64) {
    if 2 * k > n {
        return loader::ln_upper_tail_half(n, k);
    }
    // P(X >= k) = 1 - P(X >= n - k + 1) by symmetry.
    let (l, rel) = loader::ln_upper_tail_half(n, n - k + 1);
    let p = l.exp();
    let v = libm::log1p(-p);
    (v, rel * p / (1.0 - p) + f64::EPSILON)
}

pub use loader::{bd0, ln_dbinom_half, stirlerr};

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn small_tails() {
        assert_eq!(binom_tail(4, 0).exact().unwrap(), &q(1, 1));
        assert_eq!(binom_tail(4, 4).exact().unwrap(), &q(1, 16));
        assert_eq!(binom_tail(4, 2).exact().unwrap(), &q(11, 16));
        assert_eq!(binom_tail(4, 9).exact().unwrap(), &q(0, 1));
        assert_eq!(binom_tail(4, -3).exact().unwrap(), &q(1, 1));
    }

    #[test]
    fn complement_sums_to_one() {
        for n in 0..40u64 {
            let row = BinomRow::new(n);
            for k in -1..=(n as i64 + 1) {
                let up = binom_tail(n, k);
                let low = ratio(row.lower_count(k - 1), row.total());
                assert_eq!(up.exact().unwrap() + low, BigRational::one());
                assert_eq!(up.exact().unwrap(), &row.upper_tail(k));
            }
        }
    }

    #[test]
    fn log_mode_matches_exact() {
        for &(n, k) in &[(200u64, 120i64), (2001, 1100), (9999, 5000), (9999, 4000), (5000, 2800)] {
            let e = binom_tail_with(n, k, TailMode::Exact).ln();
            let l = binom_tail_with(n, k, TailMode::Log);
            let TailValue::Log { ln_value, rel_err, certified } = l.value else { panic!() };
            assert!(certified, "n={n} k={k} rel_err={rel_err}");
            assert!((ln_value - e).abs() <= 2.0 * rel_err + 1e-14, "n={n} k={k}: {ln_value} vs {e}");
        }
    }

    #[test]
    fn ln_biguint_large() {
        let x = BigUint::one() << 5000u32;
        assert!((ln_biguint(&x) - 5000.0 * LN_2).abs() < 1e-9);
    }
}
