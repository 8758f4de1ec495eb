//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_spins(n: usize, seed: u64) -> Vec<i8> {
    let mut r = rng(seed);
    (0..n * n).map(|_| if r.random::<bool>() { 1 } else { -1 }).collect()
}

fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Sum of spins over the (2w+1)^2 window around (r, c), by double loop.
pub fn naive_bias(spins: &[i8], n: usize, w: usize, r: usize, c: usize) -> i64 {
    let w = w as isize;
    let mut s = 0;
    for dr in -w..=w {
        for dc in -w..=w {
            s += spins[wrap(r as isize + dr, n) * n + wrap(c as isize + dc, n)] as i64;
        }
    }
    s
}

pub fn naive_rect(spins: &[i8], n: usize, r0: usize, c0: usize, h: usize, wd: usize) -> i64 {
    let mut s = 0;
    for i in 0..h {
        for j in 0..wd {
            s += spins[((r0 + i) % n) * n + (c0 + j) % n] as i64;
        }
    }
    s
}

/// Largest r <= (n-1)/2 with the centered square all one spin.
pub fn brute_mono_radius(spins: &[i8], n: usize, r: usize, c: usize) -> usize {
    let s0 = spins[r * n + c];
    let mut best = 0;
    'outer: for rad in 1..=(n - 1) / 2 {
        let k = rad as isize;
        for dr in -k..=k {
            for dc in -k..=k {
                if spins[wrap(r as isize + dr, n) * n + wrap(c as isize + dc, n)] != s0 {
                    break 'outer;
                }
            }
        }
        best = rad;
    }
    best
}

/// Largest r such that some monochromatic N_r(z) contains (r0, c0).
pub fn brute_containing_radius(spins: &[i8], n: usize, r0: usize, c0: usize) -> usize {
    let field: Vec<usize> = (0..n * n).map(|i| brute_mono_radius(spins, n, i / n, i % n)).collect();
    let mut best = 0;
    for z in 0..n * n {
        let (zr, zc) = (z / n, z % n);
        let dr = (zr as isize - r0 as isize).rem_euclid(n as isize) as usize;
        let dc = (zc as isize - c0 as isize).rem_euclid(n as isize) as usize;
        let d = dr.min(n - dr).max(dc.min(n - dc));
        if field[z] >= d {
            best = best.max(field[z]);
        }
    }
    best
}

/// Threshold rule written from the definition: |b| > eps m and spin
/// disagrees with the sign of b.
pub fn naive_unhappy(spin: i8, b: i64, eps: f64, m: usize) -> bool {
    (b.abs() as f64) > eps * m as f64 + 1e-9 && (spin as i64) * b < 0
}

pub struct NaiveRun {
    pub spins: Vec<i8>,
    pub time: f64,
    /// (time, index, new spin)
    pub flips: Vec<(f64, usize, i8)>,
    /// Ring times per node, when requested.
    pub rings: Vec<Vec<f64>>,
    pub absorbed: bool,
}

/// Full-clock simulator: every node rings at rate 1; a ring at an unhappy
/// node flips it. Stops at absorption or after `max_rings` rings, or once
/// the clock passes `t_stop`.
pub fn naive_full_clock(
    n: usize,
    w: usize,
    tau: f64,
    mut spins: Vec<i8>,
    seed: u64,
    max_rings: u64,
    t_stop: f64,
    keep_rings: bool,
) -> NaiveRun {
    let eps = 1.0 - 2.0 * tau;
    let m = (2 * w + 1) * (2 * w + 1);
    let mut r = rng(seed);
    let mut bias: Vec<i64> = (0..n * n).map(|i| naive_bias(&spins, n, w, i / n, i % n)).collect();
    let unhappy_count = |spins: &[i8], bias: &[i64]| {
        (0..n * n).filter(|&i| naive_unhappy(spins[i], bias[i], eps, m)).count()
    };
    let mut count = unhappy_count(&spins, &bias);
    let mut time = 0.0;
    let mut flips = Vec::new();
    let mut rings = vec![Vec::new(); if keep_rings { n * n } else { 0 }];
    let rate = (n * n) as f64;
    for _ in 0..max_rings {
        if count == 0 && !keep_rings {
            break;
        }
        let u: f64 = r.random();
        let dt = -(1.0 - u).ln() / rate;
        if time + dt > t_stop {
            time = t_stop;
            break;
        }
        time += dt;
        let i = r.random_range(0..n * n);
        if keep_rings {
            rings[i].push(time);
        }
        if !naive_unhappy(spins[i], bias[i], eps, m) {
            continue;
        }
        spins[i] = -spins[i];
        flips.push((time, i, spins[i]));
        let (ri, ci) = (i / n, i % n);
        let wi = w as isize;
        for dr in -wi..=wi {
            for dc in -wi..=wi {
                let j = wrap(ri as isize + dr, n) * n + wrap(ci as isize + dc, n);
                bias[j] += 2 * spins[i] as i64;
            }
        }
        count = unhappy_count(&spins, &bias);
    }
    let absorbed = count == 0;
    NaiveRun { spins, time, flips, rings, absorbed }
}

/// Replays a flip sequence against naive recomputation. Returns the final
/// spins, or the position of the first flip that was not legal.
pub fn replay_log_naive(n: usize, w: usize, tau: f64, mut spins: Vec<i8>, log: &[(usize, i8)]) -> Result<Vec<i8>, usize> {
    let eps = 1.0 - 2.0 * tau;
    let m = (2 * w + 1) * (2 * w + 1);
    for (k, &(i, new_spin)) in log.iter().enumerate() {
        let b = naive_bias(&spins, n, w, i / n, i % n);
        if !naive_unhappy(spins[i], b, eps, m) || new_spin != -spins[i] {
            return Err(k);
        }
        spins[i] = new_spin;
    }
    Ok(spins)
}

pub fn naive_absorbed(n: usize, w: usize, tau: f64, spins: &[i8]) -> bool {
    let eps = 1.0 - 2.0 * tau;
    let m = (2 * w + 1) * (2 * w + 1);
    (0..n * n).all(|i| !naive_unhappy(spins[i], naive_bias(spins, n, w, i / n, i % n), eps, m))
}

/// Label-correcting relaxation to a fixpoint with 8-adjacency; the origin's
/// weight is not paid.
pub fn bellman_ford(size: usize, weights: &[f64], origin: (usize, usize)) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; size * size];
    d[origin.0 * size + origin.1] = 0.0;
    loop {
        let mut changed = false;
        for r in 0..size {
            for c in 0..size {
                let here = d[r * size + c];
                if here.is_infinite() {
                    continue;
                }
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        let (rr, cc) = (r as isize + dr, c as isize + dc);
                        if (dr, dc) == (0, 0) || rr < 0 || cc < 0 || rr >= size as isize || cc >= size as isize {
                            continue;
                        }
                        let j = rr as usize * size + cc as usize;
                        let cand = here + weights[j];
                        if cand < d[j] {
                            d[j] = cand;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return d;
        }
    }
}

/// Binomial coefficients as f64, row n of Pascal's triangle.
pub fn pascal_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

/// Total-variation distance between two empirical samples of integers.
pub fn total_variation(a: &[i64], b: &[i64]) -> f64 {
    use std::collections::BTreeMap;
    let mut h: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for &x in a {
        h.entry(x).or_default().0 += 1.0 / a.len() as f64;
    }
    for &x in b {
        h.entry(x).or_default().1 += 1.0 / b.len() as f64;
    }
    0.5 * h.values().map(|(p, q)| (p - q).abs()).sum::<f64>()
}
