mod common;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use statrs::distribution::{Binomial, DiscreteCDF, Hypergeometric as StatrsHypergeometric};

use schelling_core::analysis::classify_nodes;
use schelling_core::bounds::{
    binom_tail, binom_tail_with, check_cor_a2, check_gen_chernoff, check_lemma_a1, conditional_upper_pmf,
    node_bias_probabilities, rational_to_f64, sweep_gen_chernoff, sweep_lemma_a1, viral_given_biased_regression,
    BinomRow, Hypergeometric, Rounding, TailMode,
};
use schelling_core::lattice::{create_torus_run, Init};
use schelling_core::SchellingParams;

use common::pascal_row;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

#[test]
fn small_binomial_tails() {
    assert_eq!(binom_tail(4, 0).exact().unwrap(), &BigRational::one());
    assert_eq!(binom_tail(4, 4).exact().unwrap(), &q(1, 16));
    assert_eq!(binom_tail(4, 2).exact().unwrap(), &q(11, 16));
    assert_eq!(binom_tail(4, -3).exact().unwrap(), &BigRational::one());
    assert!(binom_tail(4, 5).exact().unwrap().is_zero());
    assert_eq!(binom_tail(0, 0).exact().unwrap(), &BigRational::one());
}

#[test]
fn tails_match_pascal_triangle() {
    for n in [1usize, 7, 20, 40] {
        let row = pascal_row(n);
        let total: f64 = row.iter().sum();
        for k in 0..=n {
            let expect: f64 = row[k..].iter().sum::<f64>() / total;
            let got = binom_tail(n as u64, k as i64).to_f64();
            assert!((got - expect).abs() <= 1e-14 * expect.max(1e-300), "n={n} k={k}");
        }
    }
}

#[test]
fn tails_match_statrs() {
    for n in [50u64, 333, 1000] {
        let b = Binomial::new(0.5, n).unwrap();
        for k in (1..=n).step_by(7) {
            let expect = b.sf(k - 1);
            if expect < 1e-250 {
                continue;
            }
            let got = binom_tail(n, k as i64).to_f64();
            assert!((got / expect - 1.0).abs() < 1e-9, "n={n} k={k}: {got} vs {expect}");
        }
    }
}

#[test]
fn tail_plus_complement_is_one() {
    for n in [1u64, 2, 9, 50, 301] {
        let row = BinomRow::new(n);
        for k in -1..=(n as i64 + 1) {
            let upper = binom_tail(n, k).exact().unwrap().clone();
            let lower = BigRational::new(row.lower_count(k - 1).into(), row.total().into());
            assert_eq!(upper + lower, BigRational::one(), "n={n} k={k}");
        }
    }
}

#[test]
fn log_mode_agrees_with_exact() {
    for n in [500u64, 2000, 9000] {
        for frac in [0.5, 0.52, 0.6, 0.75] {
            let k = (frac * n as f64) as i64;
            let exact = binom_tail_with(n, k, TailMode::Exact).ln();
            let log = binom_tail_with(n, k, TailMode::Log).ln();
            assert!((exact - log).abs() <= 1e-10 * exact.abs().max(1.0), "n={n} k={k}: {exact} vs {log}");
        }
    }
    let big = binom_tail(1_000_000, 510_000);
    assert!(big.exact().is_none());
    let ln = big.ln();
    // Gaussian scale: z = 20, ln P around -z^2/2 - ln(z sqrt(2 pi)).
    assert!(ln < -200.0 && ln > -205.0, "{ln}");
}

#[test]
fn ratio_tail_examples() {
    let c = check_lemma_a1(4, 3, 4).unwrap();
    assert_eq!(c.lhs, q(1, 5));
    assert!(c.rhs.is_zero());
    assert!(c.holds);
    assert!(check_lemma_a1(6, 4, 5).unwrap().holds);
    assert!(check_lemma_a1(6, 4, 4).is_err());
    assert!(check_lemma_a1(6, 3, 5).is_err());
    assert!(check_lemma_a1(6, 4, 7).is_err());
}

#[test]
fn ratio_tail_sweep_matches_single_checks() {
    let s = sweep_lemma_a1(40);
    assert!(s.failures.is_empty(), "{:?}", s.failures);
    let mut count = 0;
    for n in 2..=40u64 {
        for r in (n / 2 + 1)..n {
            for qq in (r + 1)..=n {
                assert!(check_lemma_a1(n, r, qq).unwrap().holds);
                count += 1;
            }
        }
    }
    assert_eq!(s.checked, count);
}

#[test]
fn conditional_tail_examples() {
    let c = check_cor_a2(100, 0.05, 0.10, Rounding::Products).unwrap();
    assert_eq!((c.q, c.r), (60, 55));
    assert!(c.holds);
    let expect = rational_to_f64(binom_tail(100, 60).exact().unwrap()) / rational_to_f64(binom_tail(100, 55).exact().unwrap());
    assert!((rational_to_f64(&c.lhs) / expect - 1.0).abs() < 1e-12);
    // Same integer thresholds: conditional probability is 1.
    let d = check_cor_a2(10, 0.11, 0.12, Rounding::Events).unwrap();
    assert_eq!(d.q, d.r);
    assert_eq!(d.lhs, BigRational::one());
    assert!(d.holds);
    assert!(check_cor_a2(100, 0.2, 0.1, Rounding::Products).is_err());
    assert!(check_cor_a2(100, 0.1, 0.4, Rounding::Products).is_err());
    assert!(check_cor_a2(100, 0.0, 0.1, Rounding::Products).is_err());
}

#[test]
fn chernoff_examples() {
    let fam = Hypergeometric::new(40, 20, 20).unwrap();
    assert!(fam.negatively_correlated());
    let c = check_gen_chernoff(&fam, 0.75).unwrap();
    assert!((c.bound - (-2.0f64 * 20.0 * 0.0625).exp()).abs() < 1e-15);
    assert!(c.holds);
    let oracle = StatrsHypergeometric::new(40, 20, 20).unwrap().sf(14);
    assert!((rational_to_f64(&c.lhs) / oracle - 1.0).abs() < 1e-9);

    let eq = check_gen_chernoff(&fam, 0.5).unwrap();
    assert_eq!(eq.bound, 1.0);
    assert!(eq.holds);
    assert!(check_gen_chernoff(&fam, 0.4).is_err());
    assert!(Hypergeometric::new(10, 11, 3).is_err());
}

#[test]
fn hypergeometric_tail_matches_statrs() {
    for (pool, marked, draws) in [(30u64, 10u64, 12u64), (80, 40, 20), (100, 25, 60)] {
        let fam = Hypergeometric::new(pool, marked, draws).unwrap();
        let d = StatrsHypergeometric::new(pool, marked, draws).unwrap();
        for k in 1..=draws {
            let expect = d.sf(k - 1);
            let got = rational_to_f64(&fam.upper_tail(k as i64));
            assert!((got - expect).abs() <= 1e-12 + 1e-9 * expect, "{pool},{marked},{draws} k={k}");
        }
    }
}

#[test]
fn small_chernoff_sweep_holds() {
    let s = sweep_gen_chernoff(30, &[0.25, 0.5], 0.05);
    assert!(s.failures.is_empty());
    assert!(s.correlation_failures.is_empty());
    assert!(s.checked > 0);
}

#[test]
fn node_bias_examples() {
    let p = node_bias_probabilities(1, 0.2);
    assert_eq!(p.p_unhappy, q(37, 256));
    assert_eq!(p.p_viral_given_biased, Some(BigRational::one()));
    assert!(p.p_viral <= p.p_eps_biased);
    assert!(p.p_unhappy <= p.p_eps_biased);

    let sat = node_bias_probabilities(2, 1.0);
    assert!(sat.p_eps_biased.is_zero());
    assert!(sat.p_viral_given_biased.is_none());
}

#[test]
fn unhappy_probability_by_enumeration() {
    // Brute force over all 2^9 windows for w = 1.
    for eps in [0.05, 0.2, 0.5, 0.8] {
        let m = 9i64;
        let limit = (eps * m as f64 + 1e-9).floor() as i64;
        let (mut biased, mut unhappy, mut viral) = (0, 0, 0);
        let vlimit = ((eps + eps * eps) * m as f64 + 1e-9).floor() as i64;
        for mask in 0u32..512 {
            let b: i64 = (0..9).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).sum();
            let own = if mask >> 4 & 1 == 1 { 1 } else { -1 };
            biased += (b.abs() > limit) as i64;
            viral += (b.abs() > vlimit) as i64;
            unhappy += (own * b < -limit) as i64;
        }
        let p = node_bias_probabilities(1, eps);
        assert_eq!(p.p_eps_biased, q(biased, 512), "eps={eps}");
        assert_eq!(p.p_unhappy, q(unhappy, 512), "eps={eps}");
        assert_eq!(p.p_viral, q(viral, 512), "eps={eps}");
    }
}

#[test]
fn monte_carlo_matches_exact_node_probabilities() {
    let eps = 0.1;
    for w in 1..=3usize {
        let n = 64;
        let p = node_bias_probabilities(w, eps);
        let (mut biased, mut unhappy, mut viral, mut total) = (0usize, 0usize, 0usize, 0usize);
        for run in 0..8u64 {
            let params = SchellingParams::new(n, w, (1.0 - eps) / 2.0, 77).unwrap();
            let g = create_torus_run(&params, Init::UniformRandom, run).unwrap();
            let c = classify_nodes(&g, eps).unwrap();
            biased += c.count_biased();
            unhappy += c.count_unhappy();
            viral += c.count_viral();
            total += n * n;
        }
        // Neighbouring windows overlap, so allow a wide band.
        for (count, exact) in [(biased, &p.p_eps_biased), (unhappy, &p.p_unhappy), (viral, &p.p_viral)] {
            let pe = rational_to_f64(exact);
            let freq = count as f64 / total as f64;
            let se = (pe * (1.0 - pe) / total as f64).sqrt();
            assert!((freq - pe).abs() <= 10.0 * se * (2 * w + 1) as f64, "w={w}: {freq} vs {pe}");
        }
    }
}

#[test]
fn conditional_pmf_is_normalized_and_decreasing_above_mode() {
    let pmf = conditional_upper_pmf(25, 15);
    assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(pmf.windows(2).all(|p| p[0] > p[1]));
    let tail15 = rational_to_f64(binom_tail(25, 15).exact().unwrap());
    let tail16 = rational_to_f64(binom_tail(25, 16).exact().unwrap());
    assert!((pmf[0] - (tail15 - tail16) / tail15).abs() < 1e-12);
    let below = conditional_upper_pmf(25, 3);
    assert_eq!(below.len(), 23);
    assert!((below.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn viral_given_biased_decays_with_scale() {
    let fit = viral_given_biased_regression(&[5, 10, 15, 20], &[0.05, 0.1, 0.15, 0.2]).unwrap();
    assert!(fit.slope < 0.0);
    assert_eq!(fit.points, 16);
}
