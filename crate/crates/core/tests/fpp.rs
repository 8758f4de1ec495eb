mod common;

use rand::Rng;
use schelling_core::fpp::{estimate_mu, percentile, sample_weights, FppInstance, WeightDistribution};
use schelling_core::{Coord, Error};

use common::{bellman_ford, rng};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn deterministic_weights_are_constant() {
    let w = sample_weights(WeightDistribution::Deterministic(1.0), 20, 7, 0).unwrap();
    assert_eq!(w.len(), 400);
    assert!(w.iter().all(|&x| x == 1.0));
}

#[test]
fn exponential_sample_mean() {
    let w = sample_weights(WeightDistribution::Exponential { mean: 1.0 }, 1000, 11, 0).unwrap();
    let m = mean(&w);
    assert!((m - 1.0).abs() < 0.01, "mean {m}");
    assert!(w.iter().all(|&x| x >= 0.0));
    let scaled = sample_weights(WeightDistribution::Exponential { mean: 2.5 }, 400, 11, 0).unwrap();
    assert!((mean(&scaled) / 2.5 - 1.0).abs() < 0.02);
}

#[test]
fn coupon_collector_mean_is_harmonic() {
    let d = WeightDistribution::CouponCollector { k: 4 };
    assert!((d.mean() - 25.0 / 12.0).abs() < 1e-12);
    let w = sample_weights(d, 1000, 5, 3).unwrap();
    let m = mean(&w);
    assert!((m / (25.0 / 12.0) - 1.0).abs() < 0.01, "mean {m}");
}

#[test]
fn invalid_distributions_are_rejected() {
    assert!(sample_weights(WeightDistribution::Exponential { mean: 0.0 }, 5, 1, 0).is_err());
    assert!(sample_weights(WeightDistribution::Deterministic(-1.0), 5, 1, 0).is_err());
    assert!(sample_weights(WeightDistribution::CouponCollector { k: 0 }, 5, 1, 0).is_err());
    assert!(sample_weights(WeightDistribution::Deterministic(1.0), 0, 1, 0).is_err());
    assert!(FppInstance::new(3, Coord::new(1, 1), vec![1.0; 8]).is_err());
    assert!(FppInstance::new(3, Coord::new(3, 0), vec![1.0; 9]).is_err());
    let mut bad = vec![1.0; 9];
    bad[4] = f64::NAN;
    assert!(FppInstance::new(3, Coord::new(0, 0), bad).is_err());
}

#[test]
fn labels_round_trip() {
    for d in [
        WeightDistribution::Deterministic(1.5),
        WeightDistribution::Exponential { mean: 1.0 },
        WeightDistribution::CouponCollector { k: 4 },
    ] {
        assert_eq!(WeightDistribution::parse(&d.label()).unwrap(), d);
    }
    assert!(WeightDistribution::parse("gamma(2)").is_err());
}

#[test]
fn unit_weights_give_chebyshev_distance() {
    let size = 21;
    for origin in [(10, 10), (0, 0), (3, 17)] {
        let inst = FppInstance::new(size, Coord::new(origin.0, origin.1), vec![1.0; size * size]).unwrap();
        for r in 0..size {
            for c in 0..size {
                let d = r.abs_diff(origin.0).max(c.abs_diff(origin.1)) as f64;
                assert_eq!(inst.passage_at(Coord::new(r, c)), d);
            }
        }
    }
}

#[test]
fn zero_weights_give_zero_passage() {
    let inst = FppInstance::new(9, Coord::new(4, 4), vec![0.0; 81]).unwrap();
    assert!(inst.passage().iter().all(|&p| p == 0.0));
}

#[test]
fn origin_weight_is_never_paid() {
    let mut w = vec![1.0; 49];
    w[3 * 7 + 3] = 100.0;
    let inst = FppInstance::new(7, Coord::new(3, 3), w).unwrap();
    assert_eq!(inst.passage_at(Coord::new(3, 3)), 0.0);
    assert_eq!(inst.passage_at(Coord::new(3, 4)), 1.0);
}

#[test]
fn dijkstra_matches_bellman_ford() {
    let size = 15;
    let mut r = rng(2024);
    for k in 0..100u64 {
        let dist = match k % 3 {
            0 => WeightDistribution::Exponential { mean: 1.0 },
            1 => WeightDistribution::CouponCollector { k: 3 },
            _ => WeightDistribution::Deterministic(0.5),
        };
        let mut weights = sample_weights(dist, size, 99, k).unwrap();
        // Sprinkle exact zeros to exercise ties.
        for _ in 0..10 {
            let i = r.random_range(0..size * size);
            weights[i] = 0.0;
        }
        let origin = (r.random_range(0..size), r.random_range(0..size));
        let inst = FppInstance::new(size, Coord::new(origin.0, origin.1), weights.clone()).unwrap();
        let oracle = bellman_ford(size, &weights, origin);
        for (a, b) in inst.passage().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-9 * b.max(1.0), "instance {k}: {a} vs {b}");
        }
    }
}

#[test]
fn deterministic_ball_is_a_square() {
    let inst = FppInstance::new(21, Coord::new(10, 10), vec![1.0; 441]).unwrap();
    let ball = inst.ball(5.0).unwrap();
    assert_eq!(ball.len(), 121);
    assert!(ball.iter().all(|c| c.row.abs_diff(10) <= 5 && c.col.abs_diff(10) <= 5));
    assert_eq!(inst.radii(5.0).unwrap(), (5, 5));
    let chk = inst.bounding_check(5.0, 5, 5).unwrap();
    assert!(chk.inner_holds && chk.outer_holds);
    let chk = inst.bounding_check(5.0, 6, 4).unwrap();
    assert!(!chk.inner_holds && !chk.outer_holds);

    let b0 = inst.ball(0.0).unwrap();
    assert_eq!(b0, vec![Coord::new(10, 10)]);
    assert_eq!(inst.radii(0.0).unwrap(), (0, 0));
    assert_eq!(inst.radii(4.5).unwrap(), (4, 4));
}

#[test]
fn boundary_contact_is_an_error() {
    let inst = FppInstance::new(11, Coord::new(5, 5), vec![1.0; 121]).unwrap();
    assert!(inst.ball(4.9).is_ok());
    assert!(matches!(inst.ball(5.0), Err(Error::BoundaryContact { .. })));
    assert!(matches!(inst.radii(7.0), Err(Error::BoundaryContact { .. })));

    let cut = FppInstance::with_cutoff(41, Coord::new(20, 20), vec![1.0; 41 * 41], 3.0).unwrap();
    assert!(cut.ball(3.0).is_ok());
    assert!(cut.ball(3.5).is_err());
    assert!(cut.passage_at(Coord::new(20, 30)).is_infinite());
}

#[test]
fn balls_grow_with_time() {
    let inst = FppInstance::sampled(WeightDistribution::Exponential { mean: 1.0 }, 201, 3, 0, f64::INFINITY).unwrap();
    let mut prev: Vec<Coord> = Vec::new();
    for k in 0..=12 {
        let t = k as f64 * 0.5;
        let ball = inst.ball(t).unwrap();
        assert!(prev.iter().all(|c| ball.contains(c)), "B({t}) lost a node");
        assert!(ball.len() >= prev.len());
        prev = ball;
    }
}

#[test]
fn larger_weights_give_larger_passage() {
    let size = 25;
    let base = sample_weights(WeightDistribution::Exponential { mean: 1.0 }, size, 17, 0).unwrap();
    let mut r = rng(5);
    let heavier: Vec<f64> = base.iter().map(|&x| x + r.random::<f64>()).collect();
    let o = Coord::new(12, 12);
    let a = FppInstance::new(size, o, base).unwrap();
    let b = FppInstance::new(size, o, heavier).unwrap();
    assert!(a.passage().iter().zip(b.passage()).all(|(x, y)| x <= y));
}

#[test]
fn scaling_weights_scales_passage() {
    let size = 25;
    let base = sample_weights(WeightDistribution::Exponential { mean: 1.0 }, size, 8, 1).unwrap();
    let doubled: Vec<f64> = base.iter().map(|x| 2.0 * x).collect();
    let o = Coord::new(12, 12);
    let a = FppInstance::new(size, o, base).unwrap();
    let b = FppInstance::new(size, o, doubled).unwrap();
    for (x, y) in a.passage().iter().zip(b.passage()) {
        assert!((2.0 * x - y).abs() < 1e-9);
    }
}

#[test]
fn deterministic_shape_constants_are_one() {
    let est = estimate_mu(WeightDistribution::Deterministic(1.0), &[5.0, 10.0, 20.0], 4, 1, None).unwrap();
    assert_eq!(est.mu1_hat, 1.0);
    assert_eq!(est.mu2_hat, 1.0);
    assert_eq!(est.containment_at_max_t, 1.0);
}

#[test]
fn exponential_shape_estimates_are_ordered() {
    let grid = [10.0, 20.0, 40.0];
    let est = estimate_mu(WeightDistribution::Exponential { mean: 1.0 }, &grid, 40, 9, None).unwrap();
    assert!(est.mu1_hat > 0.0);
    assert!(est.mu1_hat <= est.mu2_hat);
    assert_eq!(est.samples.len(), 120);
    for s in &est.samples {
        assert!(s.inradius <= s.outradius);
    }
    let cv = est.outer_cv_by_t(&grid);
    assert!(cv[2].1 < cv[0].1, "outer CV should shrink with t: {cv:?}");
    let again = estimate_mu(WeightDistribution::Exponential { mean: 1.0 }, &grid, 40, 9, None).unwrap();
    assert_eq!(est, again);
    assert_eq!(est.json_lines().lines().count(), 120);
}

#[test]
fn estimate_rejects_bad_grids() {
    let d = WeightDistribution::Exponential { mean: 1.0 };
    assert!(estimate_mu(d, &[], 3, 1, None).is_err());
    assert!(estimate_mu(d, &[2.0, 1.0], 3, 1, None).is_err());
    assert!(estimate_mu(d, &[0.0, 1.0], 3, 1, None).is_err());
    assert!(estimate_mu(d, &[1.0], 0, 1, None).is_err());
    assert!(matches!(estimate_mu(d, &[30.0], 2, 1, Some(21)), Err(Error::BoundaryContact { .. })));
}

#[test]
fn percentile_interpolates() {
    let v = [3.0, 1.0, 2.0, 4.0];
    assert_eq!(percentile(&v, 0.0), 1.0);
    assert_eq!(percentile(&v, 100.0), 4.0);
    assert!((percentile(&v, 50.0) - 2.5).abs() < 1e-12);
    assert!(percentile(&[], 50.0).is_nan());
}

#[test]
fn passage_csv_layout() {
    let inst = FppInstance::new(3, Coord::new(1, 1), vec![1.0; 9]).unwrap();
    let csv = inst.passage_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("row,col,passage"));
    assert_eq!(lines.next(), Some("0,0,1.0"));
    assert_eq!(csv.lines().count(), 10);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    inst.write_passage_csv(&p).unwrap();
    assert_eq!(std::fs::read_to_string(p).unwrap(), csv);
}
