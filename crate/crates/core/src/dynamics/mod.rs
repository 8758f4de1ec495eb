//! Continuous-time Schelling dynamics.
//!
//! Every node carries a rate-1 Poisson clock, but rings at happy nodes do
//! nothing. By thinning, the process is simulated exactly by drawing the next
//! effective ring after an `Exp(|U|)` wait at a node chosen uniformly from
//! the unhappy set `U`.

mod unhappy;

pub use unhappy::IndexedSet;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::lattice::{write_pgm, BiasThreshold, Coord, SchellingParams, TorusGrid};
use crate::rng::{self, Purpose, StreamRng};
use crate::{Error, Result};

pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000_000;

/// Debug builds rescan the full state this often.
#[cfg(debug_assertions)]
const DEBUG_CHECK_EVERY: u64 = 1_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlipRecord {
    pub time: f64,
    pub at: Coord,
    pub new_spin: i8,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Event {
    Flip(FlipRecord),
    Absorbed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbsorptionReport {
    pub absorption_time: f64,
    pub total_flips: u64,
    pub final_grid: TorusGrid,
    /// The event budget ran out before the unhappy set emptied.
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct DynamicsState {
    params: SchellingParams,
    grid: TorusGrid,
    bias: Vec<i64>,
    unhappy: IndexedSet,
    threshold: BiasThreshold,
    time: f64,
    /// Absolute time of the next effective ring, once drawn. Kept across
    /// `run_until_time` calls so that splitting a run changes nothing.
    pending: Option<f64>,
    flips: u64,
    log: Option<Vec<FlipRecord>>,
    rng: StreamRng,
}

impl DynamicsState {
    /// State for run 0 of `params.seed`.
    pub fn new(params: SchellingParams, grid: TorusGrid) -> Result<Self> {
        Self::for_run(params, grid, 0)
    }

    pub fn for_run(params: SchellingParams, grid: TorusGrid, run_index: u64) -> Result<Self> {
        let rng = rng::stream(params.seed, run_index, Purpose::Clocks);
        Self::with_rng(params, grid, rng)
    }

    pub fn with_rng(params: SchellingParams, mut grid: TorusGrid, rng: StreamRng) -> Result<Self> {
        if grid.n() != params.n || grid.w() != params.w {
            return Err(Error::param(format!(
                "grid is n={}, w={} but parameters say n={}, w={}",
                grid.n(),
                grid.w(),
                params.n,
                params.w
            )));
        }
        if !grid.prefix_fresh() {
            grid.rebuild_prefix();
        }
        let bias = grid.bias_field();
        let threshold = params.threshold();
        let mut unhappy = IndexedSet::new(params.n * params.n);
        for (i, (&s, &b)) in grid.spins().iter().zip(&bias).enumerate() {
            if threshold.unhappy(s, b) {
                unhappy.insert(i);
            }
        }
        Ok(DynamicsState {
            params,
            grid,
            bias,
            unhappy,
            threshold,
            time: 0.0,
            pending: None,
            flips: 0,
            log: Some(Vec::new()),
            rng,
        })
    }

    /// Turns flip logging on or off; turning it off drops the log.
    pub fn set_logging(&mut self, on: bool) {
        match (on, self.log.is_some()) {
            (true, false) => self.log = Some(Vec::new()),
            (false, true) => self.log = None,
            _ => {}
        }
    }

    pub fn params(&self) -> &SchellingParams {
        &self.params
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Grid with a freshly rebuilt prefix table, for radius queries.
    pub fn grid_snapshot(&self) -> TorusGrid {
        let mut g = self.grid.clone();
        g.rebuild_prefix();
        g
    }

    pub fn bias_field(&self) -> &[i64] {
        &self.bias
    }

    pub fn bias(&self, c: Coord) -> i64 {
        self.bias[c.index(self.params.n)]
    }

    pub fn threshold(&self) -> BiasThreshold {
        self.threshold
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn flips(&self) -> u64 {
        self.flips
    }

    pub fn unhappy_count(&self) -> usize {
        self.unhappy.len()
    }

    pub fn is_unhappy(&self, c: Coord) -> bool {
        self.unhappy.contains(c.index(self.params.n))
    }

    pub fn unhappy_nodes(&self) -> impl Iterator<Item = Coord> + '_ {
        let n = self.params.n;
        self.unhappy.iter().map(move |i| Coord::from_index(i, n))
    }

    pub fn is_absorbed(&self) -> bool {
        self.unhappy.is_empty()
    }

    pub fn flip_log(&self) -> &[FlipRecord] {
        self.log.as_deref().unwrap_or(&[])
    }

    fn next_event_time(&mut self) -> f64 {
        match self.pending {
            Some(t) => t,
            None => {
                let t = self.time + rng::exponential(&mut self.rng, self.unhappy.len() as f64);
                self.pending = Some(t);
                t
            }
        }
    }

    fn fire(&mut self, t: f64) -> FlipRecord {
        let k = self.rng.random_range(0..self.unhappy.len());
        let idx = self.unhappy.get(k);
        let n = self.params.n;
        let x = Coord::from_index(idx, n);
        self.pending = None;
        self.time = t;
        let delta = self.grid.apply_flip(x, &mut self.bias);
        let w = self.params.w as isize;
        for dr in -w..=w {
            for dc in -w..=w {
                let y = x.offset(dr, dc, n).index(n);
                let member = self.threshold.unhappy(self.grid.spins()[y], self.bias[y]);
                self.unhappy.set(y, member);
            }
        }
        self.flips += 1;
        let rec = FlipRecord {
            time: t,
            at: x,
            new_spin: delta.new_spin,
        };
        if let Some(log) = self.log.as_mut() {
            log.push(rec);
        }
        #[cfg(debug_assertions)]
        if self.flips % DEBUG_CHECK_EVERY == 0 {
            if let Err(e) = self.verify() {
                panic!("{e}");
            }
        }
        rec
    }

    /// Performs the next effective ring, or reports absorption.
    pub fn step(&mut self) -> Event {
        if self.unhappy.is_empty() {
            return Event::Absorbed;
        }
        let t = self.next_event_time();
        Event::Flip(self.fire(t))
    }

    pub fn run_until_absorbed(&mut self, max_events: u64) -> AbsorptionReport {
        let mut used = 0;
        while !self.unhappy.is_empty() && used < max_events {
            self.step();
            used += 1;
        }
        self.report()
    }

    /// Advances to `min(t_stop, absorption)`, observing every flip.
    pub fn run_until_time_with(&mut self, t_stop: f64, mut on_flip: impl FnMut(&Self, &FlipRecord)) {
        while !self.unhappy.is_empty() {
            let t = self.next_event_time();
            if t > t_stop {
                break;
            }
            let rec = self.fire(t);
            on_flip(self, &rec);
        }
        if !self.unhappy.is_empty() && t_stop > self.time {
            self.time = t_stop;
        }
    }

    pub fn run_until_time(&mut self, t_stop: f64) {
        self.run_until_time_with(t_stop, |_, _| {});
    }

    pub fn report(&self) -> AbsorptionReport {
        AbsorptionReport {
            absorption_time: self.time,
            total_flips: self.flips,
            final_grid: self.grid_snapshot(),
            truncated: !self.unhappy.is_empty(),
        }
    }

    /// Full rescan of bias field and unhappy set.
    pub fn verify(&self) -> Result<()> {
        let fresh = self.grid.bias_field();
        if let Some(i) = (0..fresh.len()).find(|&i| fresh[i] != self.bias[i]) {
            return Err(Error::Invariant(format!(
                "bias at index {i} is {} but recomputes to {}",
                self.bias[i], fresh[i]
            )));
        }
        for (i, (&s, &b)) in self.grid.spins().iter().zip(&fresh).enumerate() {
            if self.threshold.unhappy(s, b) != self.unhappy.contains(i) {
                return Err(Error::Invariant(format!(
                    "unhappy-set membership of index {i} is stale"
                )));
            }
        }
        Ok(())
    }

    pub fn snapshot(&self, path: impl AsRef<Path>) -> Result<()> {
        write_pgm(&self.grid, path)
    }

    pub fn write_flip_log(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, flip_log_csv(self.flip_log())).map_err(|e| Error::io(path, e))
    }
}

pub const FLIP_LOG_HEADER: &str = "time,row,col,new_spin";

/// Times use the shortest representation that round-trips exactly.
pub fn flip_log_csv(records: &[FlipRecord]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(FLIP_LOG_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{:?},{},{},{}", r.time, r.at.row, r.at.col, r.new_spin);
    }
    out
}

pub fn parse_flip_log(text: &str) -> Result<Vec<FlipRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>().join(",") != FLIP_LOG_HEADER {
        return Err(Error::Parse(format!("flip log header must be {FLIP_LOG_HEADER:?}")));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |i: usize| Error::Parse(format!("bad flip log field {:?}", field(i)));
        out.push(FlipRecord {
            time: field(0).parse().map_err(|_| bad(0))?,
            at: Coord::new(
                field(1).parse().map_err(|_| bad(1))?,
                field(2).parse().map_err(|_| bad(2))?,
            ),
            new_spin: field(3).parse().map_err(|_| bad(3))?,
        });
    }
    Ok(out)
}

pub fn read_flip_log(path: impl AsRef<Path>) -> Result<Vec<FlipRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_flip_log(&text)
}
