//! Saddle-point evaluation of binomial probabilities in log space, after
//! C. Loader, "Fast and accurate computation of binomial probabilities" (2000).

use std::f64::consts::{LN_2, PI};

const S0: f64 = 1.0 / 12.0;
const S1: f64 = 1.0 / 360.0;
const S2: f64 = 1.0 / 1260.0;
const S3: f64 = 1.0 / 1680.0;
const S4: f64 = 1.0 / 1188.0;

/// `ln(n!) - (n + 1/2) ln n + n - ln(2 pi)/2` for integer `n >= 1`.
pub fn stirlerr(n: u64) -> f64 {
    if n <= 15 {
        let mut fact = 1.0f64;
        for i in 2..=n {
            fact *= i as f64;
        }
        let nf = n as f64;
        return libm::log(fact) - (nf + 0.5) * libm::log(nf) + nf - 0.5 * libm::log(2.0 * PI);
    }
    let nf = n as f64;
    let nn = nf * nf;
    if n > 500 {
        return (S0 - S1 / nn) / nf;
    }
    if n > 80 {
        return (S0 - (S1 - S2 / nn) / nn) / nf;
    }
    if n > 35 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
}

/// Deviance term `x ln(x/np) + np - x`, accurate when `x` is close to `np`.
pub fn bd0(x: f64, np: f64) -> f64 {
    bd0_scaled(x, np).0
}

/// `bd0` together with the magnitude of its intermediate quantities.
fn bd0_scaled(x: f64, np: f64) -> (f64, f64) {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return (s1, s1.abs());
            }
            s = s1;
        }
        return (s, s.abs());
    }
    let a = x * libm::log(x / np);
    (a + (np - x), a.abs() + (np - x).abs())
}

/// `ln P(X = k)` for `X ~ Bin(n, 1/2)`, with the sum of absolute values of
/// its addends (a scale for rounding error).
pub fn ln_dbinom_half(n: u64, k: u64) -> (f64, f64) {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        let v = -(n as f64) * LN_2;
        return (v, v.abs());
    }
    let (nf, kf, rf) = (n as f64, k as f64, (n - k) as f64);
    let half = nf / 2.0;
    let (b1, s1) = bd0_scaled(kf, half);
    let (b2, s2) = bd0_scaled(rf, half);
    let parts = [
        stirlerr(n),
        -stirlerr(k),
        -stirlerr(n - k),
        -b1,
        -b2,
        0.5 * libm::log(nf / (2.0 * PI * kf * rf)),
    ];
    // Compensated (Neumaier) sum of the addends.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &p in &parts {
        let t = sum + p;
        if sum.abs() >= p.abs() {
            comp += (sum - t) + p;
        } else {
            comp += (p - t) + sum;
        }
        sum = t;
    }
    let scale = parts.iter().map(|p| p.abs()).sum::<f64>() + s1 + s2;
    (sum + comp, scale)
}

/// `ln P(X >= k)` for `X ~ Bin(n, 1/2)` and `k > n/2`, with a bound on the
/// relative error of the corresponding probability.
pub fn ln_upper_tail_half(n: u64, k: u64) -> (f64, f64) {
    let (ln_pk, scale) = ln_dbinom_half(n, k);
    // Sum p_i / p_k by the ratio recurrence; terms decrease for i >= n/2.
    let mut sum = 1.0f64;
    let mut comp = 0.0f64;
    let mut term = 1.0f64;
    let mut terms = 1u64;
    let mut i = k;
    while i < n {
        term *= (n - i) as f64 / (i + 1) as f64;
        i += 1;
        terms += 1;
        let t = sum + term;
        comp += (sum - t) + term;
        sum = t;
        if term < 1e-20 * sum {
            break;
        }
    }
    let eps = f64::EPSILON;
    let rel = 4.0 * eps * (scale + 1.0) + 2.0 * eps * terms as f64 + 1e-20;
    (ln_pk + libm::log(sum + comp), rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stirlerr_branches_are_continuous() {
        // The series and the direct formula agree where they overlap.
        for n in [16u64, 36, 81, 501] {
            let nf = n as f64;
            let direct = libm::lgamma(nf + 1.0) - (nf + 0.5) * libm::log(nf) + nf
                - 0.5 * libm::log(2.0 * PI);
            assert!((stirlerr(n) - direct).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn small_pmf_matches_direct() {
        // C(10, 3) / 1024 = 120 / 1024
        let (v, _) = ln_dbinom_half(10, 3);
        assert!((v - (120.0f64 / 1024.0).ln()).abs() < 1e-13);
    }
}
