//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::dynamics::DEFAULT_MAX_EVENTS;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    Simulate,
    Scaling,
    ViralGrowth,
    FppShape,
    BoundsSweep,
    ViralReplay,
    PersistenceGeometry,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Simulate,
        ExperimentKind::Scaling,
        ExperimentKind::ViralGrowth,
        ExperimentKind::FppShape,
        ExperimentKind::BoundsSweep,
        ExperimentKind::ViralReplay,
        ExperimentKind::PersistenceGeometry,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::ViralGrowth => "viral-growth",
            ExperimentKind::FppShape => "fpp-shape",
            ExperimentKind::BoundsSweep => "bounds-sweep",
            ExperimentKind::ViralReplay => "viral-replay",
            ExperimentKind::PersistenceGeometry => "persistence-geometry",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown experiment kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: Vec<usize>,
    pub w: Vec<usize>,
    pub tau: Vec<f64>,
    /// Replicates per cell.
    pub seeds: u64,
    /// Base seed mixed into every derived seed.
    pub seed: u64,
    pub t_stops: Vec<f64>,
    pub reps: u64,
    pub max_events: u64,
    /// Not part of the hash.
    pub out: Option<PathBuf>,
    /// Not part of the hash.
    pub jobs: usize,
    /// Kind-specific settings.
    pub extra: BTreeMap<String, String>,
}

const CORE_KEYS: [&str; 11] = [
    "kind", "n", "w", "tau", "seeds", "seed", "t_stops", "reps", "max_events", "out", "jobs",
];

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            n: Vec::new(),
            w: Vec::new(),
            tau: Vec::new(),
            seeds: 1,
            seed: 0,
            t_stops: Vec::new(),
            reps: 1,
            max_events: DEFAULT_MAX_EVENTS,
            out: None,
            jobs: 1,
            extra: BTreeMap::new(),
        }
    }

    pub fn with_extra(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.insert(key.to_string(), value.to_string());
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
            let k = k.trim().to_string();
            if map.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key {k:?}", lineno + 1)));
            }
        }
        let kind: ExperimentKind = map
            .remove("kind")
            .ok_or_else(|| Error::Parse("missing `kind`".into()))?
            .parse()?;
        let mut cfg = ExperimentConfig::new(kind);
        if let Some(v) = map.remove("n") {
            cfg.n = parse_int_list(&v)?;
        }
        if let Some(v) = map.remove("w") {
            cfg.w = parse_int_list(&v)?;
        }
        if let Some(v) = map.remove("tau") {
            cfg.tau = parse_f64_list(&v)?;
        }
        if let Some(v) = map.remove("t_stops") {
            cfg.t_stops = parse_f64_list(&v)?;
        }
        if let Some(v) = map.remove("seeds") {
            cfg.seeds = parse_scalar(&v, "seeds")?;
        }
        if let Some(v) = map.remove("seed") {
            cfg.seed = parse_scalar(&v, "seed")?;
        }
        if let Some(v) = map.remove("reps") {
            cfg.reps = parse_scalar(&v, "reps")?;
        }
        if let Some(v) = map.remove("max_events") {
            cfg.max_events = parse_scalar(&v, "max_events")?;
        }
        if let Some(v) = map.remove("jobs") {
            cfg.jobs = parse_scalar(&v, "jobs")?;
        }
        if let Some(v) = map.remove("out") {
            cfg.out = Some(PathBuf::from(v));
        }
        cfg.extra = map;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    fn hashed_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("kind", self.kind.name().to_string());
        line("n", fmt_int_list(&self.n));
        line("w", fmt_int_list(&self.w));
        line("tau", fmt_f64_list(&self.tau));
        line("seeds", self.seeds.to_string());
        line("seed", self.seed.to_string());
        line("t_stops", fmt_f64_list(&self.t_stops));
        line("reps", self.reps.to_string());
        line("max_events", self.max_events.to_string());
        for (k, v) in &self.extra {
            line(k, v.clone());
        }
        out
    }

    /// Canonical file form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let mut out = self.hashed_text();
        if let Some(o) = &self.out {
            out.push_str(&format!("out = {}\n", o.display()));
        }
        out.push_str(&format!("jobs = {}\n", self.jobs));
        out
    }

    /// Hex SHA-256 of the canonical text without `out` and `jobs`.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.hashed_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn extra_str(&self, key: &str) -> Option<&str> {
        self.extra.get(key).map(String::as_str)
    }

    pub fn extra_f64(&self, key: &str) -> Result<Option<f64>> {
        self.extra.get(key).map(|v| parse_scalar(v, key)).transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.extra_f64(key)?
            .ok_or_else(|| Error::param(format!("{} requires `{key}`", self.kind)))
    }

    pub fn extra_u64(&self, key: &str) -> Result<Option<u64>> {
        self.extra.get(key).map(|v| parse_scalar(v, key)).transpose()
    }

    pub fn extra_bool(&self, key: &str) -> Result<Option<bool>> {
        self.extra.get(key).map(|v| parse_scalar(v, key)).transpose()
    }

    pub fn extra_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.extra.get(key).map(|v| parse_f64_list(v)).transpose()
    }

    pub fn extra_int_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        self.extra.get(key).map(|v| parse_int_list(v)).transpose()
    }

    pub fn is_core_key(key: &str) -> bool {
        CORE_KEYS.contains(&key)
    }
}

fn parse_scalar<T: FromStr>(v: &str, key: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad value for `{key}`: {v:?}")))
}

/// Comma-separated integers; `a..=b` and `a..=b:step` expand to ranges.
pub fn parse_int_list(v: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, rest)) = part.split_once("..=") {
            let (b, step) = match rest.split_once(':') {
                Some((b, s)) => (b, parse_scalar::<usize>(s, "step")?),
                None => (rest, 1),
            };
            let (a, b): (usize, usize) = (parse_scalar(a, "range")?, parse_scalar(b, "range")?);
            if step == 0 || a > b {
                return Err(Error::Parse(format!("bad range {part:?}")));
            }
            out.extend((a..=b).step_by(step));
        } else {
            out.push(parse_scalar(part, "list")?);
        }
    }
    Ok(out)
}

pub fn parse_f64_list(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| parse_scalar(p, "list"))
        .collect()
}

fn fmt_int_list(v: &[usize]) -> String {
    if v.len() >= 3 {
        let step = v[1].wrapping_sub(v[0]);
        if v[1] > v[0] && v.windows(2).all(|p| p[1] > p[0] && p[1] - p[0] == step) {
            let last = *v.last().expect("nonempty");
            return if step == 1 {
                format!("{}..={last}", v[0])
            } else {
                format!("{}..={last}:{step}", v[0])
            };
        }
    }
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn fmt_f64_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_hash_stability() {
        let text = "# scaling run\nkind = scaling\nn = 256\nw = 2, 3, 4\ntau = 0.45\nseeds = 20\nnote = hello\nout = /tmp/x\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.w, vec![2, 3, 4]);
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
        let mut moved = cfg.clone();
        moved.out = Some("/elsewhere".into());
        moved.jobs = 8;
        assert_eq!(moved.hash(), cfg.hash());
        moved.seeds = 21;
        assert_ne!(moved.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn ranges_expand_and_compress() {
        let v = parse_int_list("50..=2000").unwrap();
        assert_eq!(v.len(), 1951);
        assert_eq!(fmt_int_list(&v), "50..=2000");
        assert_eq!(parse_int_list("5..=30:5").unwrap(), vec![5, 10, 15, 20, 25, 30]);
        assert_eq!(fmt_int_list(&[1, 2, 4]), "1,2,4");
    }

    #[test]
    fn errors_are_reported() {
        assert!(ExperimentConfig::parse("n = 3").is_err());
        assert!(ExperimentConfig::parse("kind = nope").is_err());
        assert!(ExperimentConfig::parse("kind = simulate\nn = x").is_err());
        assert!(ExperimentConfig::parse("kind = simulate\nn = 3\nn = 4").is_err());
    }
}
