//! Toroidal spin lattice with neighborhood bias queries, incremental flip
//! maintenance and monochromatic-radius measurement.

mod fenwick;
mod pgm;

pub use fenwick::Fenwick2d;
pub use pgm::{parse_pgm, read_pgm, spins_to_pgm, to_pgm, write_pgm};

use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// Lattice coordinate `(row, col)`, always reduced modulo the side length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub const fn new(row: usize, col: usize) -> Self {
        Coord { row, col }
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        Coord::new(index / n, index % n)
    }

    pub fn index(self, n: usize) -> usize {
        self.row * n + self.col
    }

    /// Wrapped translation by a signed offset.
    pub fn offset(self, dr: isize, dc: isize, n: usize) -> Coord {
        let wrap = |v: usize, d: isize| (v as isize + d).rem_euclid(n as isize) as usize;
        Coord::new(wrap(self.row, dr), wrap(self.col, dc))
    }

    /// Signed per-axis displacement from `self` to `other` on the torus,
    /// each component in `(-n/2, n/2]`.
    pub fn torus_delta(self, other: Coord, n: usize) -> (isize, isize) {
        let d = |a: usize, b: usize| {
            let mut v = (b as isize - a as isize).rem_euclid(n as isize);
            if v > n as isize / 2 {
                v -= n as isize;
            }
            v
        };
        (d(self.row, other.row), d(self.col, other.col))
    }

    /// L-infinity distance on the torus.
    pub fn torus_linf(self, other: Coord, n: usize) -> usize {
        let (dr, dc) = self.torus_delta(other, n);
        dr.unsigned_abs().max(dc.unsigned_abs())
    }
}

/// Wrapped rectangle given by its top-left corner and extents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusRect {
    pub corner: Coord,
    pub height: usize,
    pub width: usize,
}

impl TorusRect {
    pub fn new(corner: Coord, height: usize, width: usize) -> Self {
        TorusRect {
            corner,
            height,
            width,
        }
    }

    /// The square `N_r(center)`.
    pub fn centered(center: Coord, r: usize, n: usize) -> Self {
        let corner = center.offset(-(r as isize), -(r as isize), n);
        TorusRect::new(corner, 2 * r + 1, 2 * r + 1)
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }
}

/// Validated model parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchellingParams {
    pub n: usize,
    pub w: usize,
    pub tau: f64,
    pub seed: u64,
}

impl SchellingParams {
    pub fn new(n: usize, w: usize, tau: f64, seed: u64) -> Result<Self> {
        check_shape(n, w)?;
        if !(0.0..=0.5).contains(&tau) {
            return Err(Error::param(format!("tau must lie in [0, 1/2], got {tau}")));
        }
        Ok(SchellingParams { n, w, tau, seed })
    }

    pub fn eps(&self) -> f64 {
        1.0 - 2.0 * self.tau
    }

    pub fn area(&self) -> usize {
        window_area(self.w)
    }

    pub fn threshold(&self) -> BiasThreshold {
        BiasThreshold::new(self.eps(), self.area())
    }
}

fn check_shape(n: usize, w: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::param(format!("side length must be at least 3, got {n}")));
    }
    if w < 1 || 2 * w + 1 >= n {
        return Err(Error::param(format!(
            "neighborhood radius must satisfy 1 <= w and 2w+1 < n, got w={w}, n={n}"
        )));
    }
    Ok(())
}

pub fn window_area(w: usize) -> usize {
    (2 * w + 1) * (2 * w + 1)
}

/// Rounds values within `1e-9` of an integer onto it, so that thresholds
/// such as `(1 - 2*0.4) * 25` land on 5 rather than 4.999...
pub(crate) fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// Integer form of the strict test `|b| > delta * area`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BiasThreshold {
    limit: i64,
}

impl BiasThreshold {
    /// `delta` is clamped below at zero.
    pub fn new(delta: f64, area: usize) -> Self {
        let limit = snap(delta.max(0.0) * area as f64).floor() as i64;
        BiasThreshold { limit }
    }

    pub fn limit(&self) -> i64 {
        self.limit
    }

    pub fn positive(&self, b: i64) -> bool {
        b > self.limit
    }

    pub fn negative(&self, b: i64) -> bool {
        b < -self.limit
    }

    pub fn biased(&self, b: i64) -> bool {
        b.abs() > self.limit
    }

    /// Biased against the node's own spin.
    pub fn unhappy(&self, spin: i8, b: i64) -> bool {
        (spin as i64) * b < -self.limit
    }
}

/// Initial configuration for [`create_torus`].
#[derive(Clone, Debug)]
pub enum Init {
    UniformRandom,
    Explicit(Vec<i8>),
}

/// Builds a grid from validated parameters; uniform spins come from the seed's
/// initial-spin stream for run 0.
pub fn create_torus(params: &SchellingParams, init: Init) -> Result<TorusGrid> {
    create_torus_run(params, init, 0)
}

pub fn create_torus_run(params: &SchellingParams, init: Init, run_index: u64) -> Result<TorusGrid> {
    match init {
        Init::Explicit(spins) => TorusGrid::from_spins(params.n, params.w, spins),
        Init::UniformRandom => {
            let mut spins = vec![0i8; params.n * params.n];
            let mut r = rng::stream(params.seed, run_index, Purpose::InitialSpins);
            rng::fill_spins(&mut r, &mut spins);
            TorusGrid::from_spins(params.n, params.w, spins)
        }
    }
}

/// Result of [`TorusGrid::apply_flip`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlipDelta {
    pub at: Coord,
    pub old_spin: i8,
    pub new_spin: i8,
    /// Change applied to the bias of every node in `N_w(at)`.
    pub bias_delta: i64,
}

/// `n x n` torus of `+1/-1` spins.
#[derive(Clone, Debug)]
pub struct TorusGrid {
    n: usize,
    w: usize,
    spins: Vec<i8>,
    prefix: Vec<i64>,
    prefix_fresh: bool,
    plus_index: Option<Fenwick2d>,
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.w == other.w && self.spins == other.spins
    }
}

impl TorusGrid {
    pub fn from_spins(n: usize, w: usize, spins: Vec<i8>) -> Result<Self> {
        if n < 3 {
            return Err(Error::param(format!("side length must be at least 3, got {n}")));
        }
        if w > (n - 1) / 2 {
            return Err(Error::param(format!("radius {w} does not fit on a torus of side {n}")));
        }
        if spins.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: spins.len(),
            });
        }
        if let Some((index, &value)) = spins.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
            return Err(Error::InvalidSpin {
                index,
                value: value as i64,
            });
        }
        let mut grid = TorusGrid {
            n,
            w,
            spins,
            prefix: vec![0; (n + 1) * (n + 1)],
            prefix_fresh: false,
            plus_index: None,
        };
        grid.rebuild_prefix();
        Ok(grid)
    }

    pub fn uniform(n: usize, w: usize, spin: i8) -> Result<Self> {
        Self::from_spins(n, w, vec![spin; n * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn area(&self) -> usize {
        window_area(self.w)
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn spin(&self, c: Coord) -> i8 {
        self.spins[c.index(self.n)]
    }

    pub fn prefix_fresh(&self) -> bool {
        self.prefix_fresh
    }

    pub fn rebuild_prefix(&mut self) {
        let n = self.n;
        let stride = n + 1;
        for r in 0..n {
            let mut row_acc = 0i64;
            for c in 0..n {
                row_acc += self.spins[r * n + c] as i64;
                self.prefix[(r + 1) * stride + c + 1] = self.prefix[r * stride + c + 1] + row_acc;
            }
        }
        self.prefix_fresh = true;
    }

    /// Enables the dynamic index over the `+1` indicator, kept current by flips.
    pub fn enable_dynamic_index(&mut self) {
        let n = self.n;
        let spins = &self.spins;
        self.plus_index = Some(Fenwick2d::from_values(n, n, |r, c| (spins[r * n + c] > 0) as i64));
    }

    pub fn has_dynamic_index(&self) -> bool {
        self.plus_index.is_some()
    }

    fn plain_sum(&self, r0: usize, c0: usize, r1: usize, c1: usize) -> i64 {
        let s = self.n + 1;
        self.prefix[r1 * s + c1] - self.prefix[r0 * s + c1] - self.prefix[r1 * s + c0]
            + self.prefix[r0 * s + c0]
    }

    fn check_rect(&self, rect: &TorusRect) -> Result<()> {
        if rect.height > self.n || rect.width > self.n {
            return Err(Error::param(format!(
                "rectangle {}x{} exceeds torus side {}",
                rect.height, rect.width, self.n
            )));
        }
        Ok(())
    }

    /// Splits a wrapped rectangle into at most four plain pieces.
    fn pieces(&self, rect: &TorusRect, mut f: impl FnMut(usize, usize, usize, usize)) {
        let n = self.n;
        let (r, c) = (rect.corner.row % n, rect.corner.col % n);
        let rows: [(usize, usize); 2] = if r + rect.height <= n {
            [(r, r + rect.height), (0, 0)]
        } else {
            [(r, n), (0, r + rect.height - n)]
        };
        let cols: [(usize, usize); 2] = if c + rect.width <= n {
            [(c, c + rect.width), (0, 0)]
        } else {
            [(c, n), (0, c + rect.width - n)]
        };
        for &(r0, r1) in &rows {
            for &(c0, c1) in &cols {
                if r0 < r1 && c0 < c1 {
                    f(r0, c0, r1, c1);
                }
            }
        }
    }

    /// Spin sum over a wrapped rectangle via the prefix table.
    pub fn rect_sum(&self, rect: &TorusRect) -> Result<i64> {
        self.check_rect(rect)?;
        if !self.prefix_fresh {
            return Err(Error::StalePrefix);
        }
        let mut acc = 0;
        self.pieces(rect, |r0, c0, r1, c1| acc += self.plain_sum(r0, c0, r1, c1));
        Ok(acc)
    }

    /// Spin sum over a wrapped rectangle via the dynamic index; valid at any
    /// time once the index is enabled.
    pub fn dynamic_rect_sum(&self, rect: &TorusRect) -> Result<i64> {
        self.check_rect(rect)?;
        let index = self
            .plus_index
            .as_ref()
            .ok_or_else(|| Error::param("dynamic index is not enabled"))?;
        let mut plus = 0;
        self.pieces(rect, |r0, c0, r1, c1| plus += index.rect(r0, c0, r1, c1));
        Ok(2 * plus - rect.area() as i64)
    }

    /// Naive spin sum, independent of any cache.
    pub fn naive_rect_sum(&self, rect: &TorusRect) -> i64 {
        let n = self.n;
        let mut acc = 0i64;
        for i in 0..rect.height {
            let row = (rect.corner.row + i) % n;
            for j in 0..rect.width {
                acc += self.spins[row * n + (rect.corner.col + j) % n] as i64;
            }
        }
        acc
    }

    /// Sum of spins over `N_w(x)`, including `x`.
    pub fn bias_at(&self, x: Coord) -> i64 {
        let rect = TorusRect::centered(x, self.w, self.n);
        if self.prefix_fresh {
            let mut acc = 0;
            self.pieces(&rect, |r0, c0, r1, c1| acc += self.plain_sum(r0, c0, r1, c1));
            acc
        } else {
            self.naive_rect_sum(&rect)
        }
    }

    /// Bias of every node, row-major.
    pub fn bias_field(&self) -> Vec<i64> {
        if self.prefix_fresh {
            return (0..self.n * self.n)
                .map(|i| self.bias_at(Coord::from_index(i, self.n)))
                .collect();
        }
        let mut fresh = self.clone();
        fresh.rebuild_prefix();
        fresh.bias_field()
    }

    /// Negates `x`, applying the bias change to `bias_field` over `N_w(x)`.
    /// The prefix table becomes stale; the dynamic index, if any, is updated.
    pub fn apply_flip(&mut self, x: Coord, bias_field: &mut [i64]) -> FlipDelta {
        let delta = self.flip(x);
        let n = self.n;
        let w = self.w as isize;
        for dr in -w..=w {
            let row = (x.row as isize + dr).rem_euclid(n as isize) as usize;
            for dc in -w..=w {
                let col = (x.col as isize + dc).rem_euclid(n as isize) as usize;
                bias_field[row * n + col] += delta.bias_delta;
            }
        }
        delta
    }

    /// Negates `x` without touching any bias field.
    pub fn flip(&mut self, x: Coord) -> FlipDelta {
        let i = x.index(self.n);
        let old = self.spins[i];
        self.spins[i] = -old;
        self.prefix_fresh = false;
        if let Some(index) = self.plus_index.as_mut() {
            index.add(x.row, x.col, if old > 0 { -1 } else { 1 });
        }
        FlipDelta {
            at: x,
            old_spin: old,
            new_spin: -old,
            bias_delta: -2 * old as i64,
        }
    }

    pub fn max_radius(&self) -> usize {
        (self.n - 1) / 2
    }

    fn square_is_mono(&self, x: Coord, r: usize) -> bool {
        let rect = TorusRect::centered(x, r, self.n);
        let mut acc = 0;
        self.pieces(&rect, |r0, c0, r1, c1| acc += self.plain_sum(r0, c0, r1, c1));
        acc.unsigned_abs() as usize == rect.area()
    }

    /// Largest `r <= (n-1)/2` such that `N_r(x)` is monochromatic.
    pub fn mono_radius_centered(&self, x: Coord) -> usize {
        let max_r = self.max_radius();
        if self.prefix_fresh {
            // Monochromaticity is downward closed in r.
            let (mut lo, mut hi) = (0, max_r);
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                if self.square_is_mono(x, mid) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            return lo;
        }
        let s = self.spin(x);
        for r in 1..=max_r {
            let ri = r as isize;
            for d in -ri..=ri {
                let ring = [
                    x.offset(-ri, d, self.n),
                    x.offset(ri, d, self.n),
                    x.offset(d, -ri, self.n),
                    x.offset(d, ri, self.n),
                ];
                if ring.iter().any(|&c| self.spin(c) != s) {
                    return r - 1;
                }
            }
        }
        max_r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(n: usize, w: usize, seed: u64) -> TorusGrid {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let spins = (0..n * n).map(|_| if r.random::<bool>() { 1 } else { -1 }).collect();
        TorusGrid::from_spins(n, w, spins).unwrap()
    }

    #[test]
    fn threshold_snaps_near_integers() {
        let p = SchellingParams::new(11, 2, 0.4, 0).unwrap();
        assert_eq!(p.threshold().limit(), 5);
        assert_eq!(BiasThreshold::new(0.1, 9).limit(), 0);
        assert_eq!(BiasThreshold::new(0.0, 9).limit(), 0);
    }

    #[test]
    fn unhappiness_needs_opposing_bias() {
        let t = BiasThreshold::new(0.2, 9);
        assert!(t.unhappy(1, -3));
        assert!(!t.unhappy(1, -1));
        assert!(!t.unhappy(-1, -3));
    }

    #[test]
    fn params_reject_bad_shapes() {
        assert!(SchellingParams::new(2, 1, 0.4, 0).is_err());
        assert!(SchellingParams::new(5, 2, 0.4, 0).is_err());
        assert!(SchellingParams::new(6, 2, 0.4, 0).is_ok());
        assert!(SchellingParams::new(9, 1, 0.6, 0).is_err());
    }

    #[test]
    fn explicit_init_is_validated() {
        let p = SchellingParams::new(4, 1, 0.4, 0).unwrap();
        assert!(matches!(
            create_torus(&p, Init::Explicit(vec![1; 15])),
            Err(Error::DimensionMismatch { expected: 16, got: 15 })
        ));
        let mut bad = vec![1; 16];
        bad[7] = 0;
        assert!(matches!(
            create_torus(&p, Init::Explicit(bad)),
            Err(Error::InvalidSpin { index: 7, value: 0 })
        ));
    }

    #[test]
    fn rect_sum_matches_naive_and_reports_staleness() {
        let mut g = random_grid(13, 2, 5);
        let mut r = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let rect = TorusRect::new(
                Coord::new(r.random_range(0..13), r.random_range(0..13)),
                r.random_range(0..=13),
                r.random_range(0..=13),
            );
            assert_eq!(g.rect_sum(&rect).unwrap(), g.naive_rect_sum(&rect));
        }
        g.flip(Coord::new(0, 0));
        assert!(matches!(
            g.rect_sum(&TorusRect::new(Coord::new(0, 0), 2, 2)),
            Err(Error::StalePrefix)
        ));
    }

    #[test]
    fn dynamic_index_tracks_flips() {
        let mut g = random_grid(10, 1, 3);
        g.enable_dynamic_index();
        let mut r = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            g.flip(Coord::new(r.random_range(0..10), r.random_range(0..10)));
            let rect = TorusRect::new(
                Coord::new(r.random_range(0..10), r.random_range(0..10)),
                r.random_range(0..=10),
                r.random_range(0..=10),
            );
            assert_eq!(g.dynamic_rect_sum(&rect).unwrap(), g.naive_rect_sum(&rect));
        }
    }

    #[test]
    fn mono_radius_ring_scan_agrees_with_binary_search() {
        let mut g = random_grid(15, 1, 11);
        for i in 0..225 {
            if i % 7 != 0 {
                let c = Coord::from_index(i, 15);
                if g.spin(c) < 0 {
                    g.flip(c);
                }
            }
        }
        let stale: Vec<_> = (0..225).map(|i| g.mono_radius_centered(Coord::from_index(i, 15))).collect();
        g.rebuild_prefix();
        let fresh: Vec<_> = (0..225).map(|i| g.mono_radius_centered(Coord::from_index(i, 15))).collect();
        assert_eq!(stale, fresh);
    }

    #[test]
    fn torus_delta_wraps() {
        let n = 10;
        assert_eq!(Coord::new(0, 0).torus_delta(Coord::new(9, 5), n), (-1, 5));
        assert_eq!(Coord::new(0, 0).torus_linf(Coord::new(9, 8), n), 2);
    }
}
