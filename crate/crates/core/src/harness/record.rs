//! Run records, per-kind schemas, and CSV / JSON-lines persistence.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldType {
    Int,
    Float,
    Bool,
    Text,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Field {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Field::Int(v) => Some(*v as f64),
            Field::Float(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Field::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Field::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Field::Text(v) => Some(v),
            _ => None,
        }
    }

    fn type_of(&self) -> FieldType {
        match self {
            Field::Int(_) => FieldType::Int,
            Field::Float(_) => FieldType::Float,
            Field::Bool(_) => FieldType::Bool,
            Field::Text(_) => FieldType::Text,
        }
    }

    fn to_cell(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Float(v) => format!("{v:?}"),
            Field::Bool(v) => v.to_string(),
            Field::Text(v) => v.clone(),
        }
    }

    fn from_cell(ty: FieldType, s: &str) -> Result<Field> {
        let bad = || Error::Parse(format!("cannot read {s:?} as {ty:?}"));
        Ok(match ty {
            FieldType::Int => Field::Int(s.parse().map_err(|_| bad())?),
            FieldType::Float => Field::Float(s.parse().map_err(|_| bad())?),
            FieldType::Bool => Field::Bool(s.parse().map_err(|_| bad())?),
            FieldType::Text => Field::Text(s.to_string()),
        })
    }

    fn to_json(&self) -> Value {
        match self {
            Field::Int(v) => Value::from(*v),
            Field::Float(v) if v.is_finite() => Value::from(*v),
            // JSON has no non-finite numbers.
            Field::Float(v) => Value::from(format!("{v:?}")),
            Field::Bool(v) => Value::from(*v),
            Field::Text(v) => Value::from(v.clone()),
        }
    }

    fn from_json(ty: FieldType, v: &Value) -> Result<Field> {
        let bad = || Error::Parse(format!("cannot read {v} as {ty:?}"));
        Ok(match (ty, v) {
            (FieldType::Int, _) => Field::Int(v.as_i64().ok_or_else(bad)?),
            (FieldType::Float, Value::String(s)) => Field::Float(s.parse().map_err(|_| bad())?),
            (FieldType::Float, _) => Field::Float(v.as_f64().ok_or_else(bad)?),
            (FieldType::Bool, _) => Field::Bool(v.as_bool().ok_or_else(bad)?),
            (FieldType::Text, _) => Field::Text(v.as_str().ok_or_else(bad)?.to_string()),
        })
    }
}

use FieldType::{Bool, Float, Int, Text};

/// Column layout of each record kind, excluding the leading hash and seed.
pub fn schema(kind: &str) -> Option<&'static [(&'static str, FieldType)]> {
    Some(match kind {
        "simulate" => &[
            ("n", Int),
            ("w", Int),
            ("tau", Float),
            ("T", Float),
            ("flips", Int),
            ("absorbed", Bool),
            ("truncated", Bool),
            ("mean_radius", Float),
            ("max_radius", Int),
        ],
        "scaling" => &[
            ("n", Int),
            ("w", Int),
            ("tau", Float),
            ("T", Float),
            ("flips", Int),
            ("mean_radius", Float),
            ("max_radius", Int),
        ],
        "viral-growth" => &[
            ("n", Int),
            ("w", Int),
            ("tau", Float),
            ("mu1_hat", Float),
            ("big_r", Int),
            ("r", Int),
            ("t2", Float),
            ("t3", Float),
            ("quarter_mono_t2", Bool),
            ("radius_t2", Int),
            ("mono_r_t3", Bool),
            ("radius_t3", Int),
            ("flips", Int),
            ("absorbed", Bool),
        ],
        "fpp-shape" => &[
            ("dist", Text),
            ("t", Float),
            ("rep", Int),
            ("inradius", Int),
            ("outradius", Int),
            ("inner_ratio", Float),
            ("outer_ratio", Float),
        ],
        "fpp-summary" => &[
            ("dist", Text),
            ("reps", Int),
            ("size", Int),
            ("mu1_hat", Float),
            ("mu2_hat", Float),
            ("containment", Float),
        ],
        "bounds-sweep" => &[
            ("family", Text),
            ("n", Int),
            ("param1", Float),
            ("param2", Float),
            ("lhs", Float),
            ("rhs", Float),
            ("holds", Bool),
        ],
        "viral-replay" => &[
            ("w", Int),
            ("eps", Float),
            ("inside_draws", Int),
            ("outside_draws", Int),
            ("all_hold", Bool),
            ("e1_min_slack", Float),
            ("succeeded", Bool),
            ("flips", Int),
            ("quarter_mono", Bool),
            ("literal_hold", Bool),
        ],
        "persistence-geometry" => &[
            ("w", Int),
            ("big_r", Int),
            ("eps", Float),
            ("min_inside_count", Int),
            ("required", Float),
            ("pass", Bool),
        ],
        _ => return None,
    })
}

pub fn csv_header(kind: &str) -> Option<String> {
    let cols = schema(kind)?;
    let mut h = String::from("config_hash,seed");
    for (name, _) in cols {
        h.push(',');
        h.push_str(name);
    }
    Some(h)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    /// Record kind; selects the schema. Failed cells use `error`.
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub cell: u64,
    pub replicate: u64,
    /// Position within the cell when one cell emits several records.
    pub index: u64,
    pub fields: Vec<(String, Field)>,
    pub wall_ms: f64,
    pub artifacts: Vec<PathBuf>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn get(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    pub fn f64(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(Field::as_f64)
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    /// True when both records carry the same data, ignoring wall-clock time.
    pub fn same_outputs(&self, other: &RunRecord) -> bool {
        let mut a = self.clone();
        a.wall_ms = other.wall_ms;
        a == *other
    }

    fn check_schema(&self) -> Result<()> {
        if self.is_error() {
            return Ok(());
        }
        let cols = schema(&self.kind)
            .ok_or_else(|| Error::Parse(format!("unknown record kind {:?}", self.kind)))?;
        let ok = cols.len() == self.fields.len()
            && cols
                .iter()
                .zip(&self.fields)
                .all(|((n, t), (k, v))| n == k && *t == v.type_of());
        if ok {
            Ok(())
        } else {
            Err(Error::Invariant(format!("record does not match the {} schema", self.kind)))
        }
    }

    pub fn to_json_line(&self) -> String {
        let fields: serde_json::Map<String, Value> =
            self.fields.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
        let raw = RawRecord {
            kind: self.kind.clone(),
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            cell: self.cell,
            replicate: self.replicate,
            index: self.index,
            fields,
            wall_ms: self.wall_ms,
            artifacts: self.artifacts.clone(),
            error: self.error.clone(),
        };
        serde_json::to_string(&raw).expect("records serialize")
    }

    pub fn from_json_line(line: &str) -> Result<RunRecord> {
        let raw: RawRecord =
            serde_json::from_str(line).map_err(|e| Error::Parse(format!("record: {e}")))?;
        let fields = if raw.error.is_some() {
            Vec::new()
        } else {
            let cols = schema(&raw.kind)
                .ok_or_else(|| Error::Parse(format!("unknown record kind {:?}", raw.kind)))?;
            cols.iter()
                .map(|(name, ty)| {
                    let v = raw
                        .fields
                        .get(*name)
                        .ok_or_else(|| Error::Parse(format!("record lacks field {name}")))?;
                    Ok((name.to_string(), Field::from_json(*ty, v)?))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok(RunRecord {
            kind: raw.kind,
            config_hash: raw.config_hash,
            seed: raw.seed,
            cell: raw.cell,
            replicate: raw.replicate,
            index: raw.index,
            fields,
            wall_ms: raw.wall_ms,
            artifacts: raw.artifacts,
            error: raw.error,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    kind: String,
    config_hash: String,
    seed: u64,
    cell: u64,
    replicate: u64,
    index: u64,
    fields: serde_json::Map<String, Value>,
    wall_ms: f64,
    #[serde(default)]
    artifacts: Vec<PathBuf>,
    #[serde(default)]
    error: Option<String>,
}

/// Record builder used by the experiment runners.
pub(crate) struct Row(Vec<(String, Field)>);

impl Row {
    pub fn new() -> Self {
        Row(Vec::new())
    }
    pub fn int(mut self, k: &str, v: impl TryInto<i64>) -> Self {
        let v = v.try_into().unwrap_or(i64::MAX);
        self.0.push((k.into(), Field::Int(v)));
        self
    }
    pub fn float(mut self, k: &str, v: f64) -> Self {
        self.0.push((k.into(), Field::Float(v)));
        self
    }
    pub fn bool(mut self, k: &str, v: bool) -> Self {
        self.0.push((k.into(), Field::Bool(v)));
        self
    }
    pub fn text(mut self, k: &str, v: impl Into<String>) -> Self {
        self.0.push((k.into(), Field::Text(v.into())));
        self
    }
    pub fn finish(self) -> Vec<(String, Field)> {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    JsonLines,
}

/// Writes one file per record kind into `dir` and returns the paths.
/// Error records go to `errors.csv` / `errors.jsonl`.
pub fn export(records: &[RunRecord], format: ExportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::param("nothing to export: record stream is empty"));
    }
    for r in records {
        r.check_schema()?;
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut groups: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let key = if r.is_error() { "errors" } else { r.kind.as_str() };
        groups.entry(key).or_default().push(r);
    }
    let mut paths = Vec::new();
    for (kind, recs) in groups {
        let path = match format {
            ExportFormat::Csv => dir.join(format!("{kind}.csv")),
            ExportFormat::JsonLines => dir.join(format!("{kind}.jsonl")),
        };
        let text = match format {
            ExportFormat::JsonLines => {
                recs.iter().map(|r| r.to_json_line() + "\n").collect::<String>()
            }
            ExportFormat::Csv => csv_text(kind, &recs)?,
        };
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

fn csv_text(kind: &str, recs: &[&RunRecord]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(format!("csv: {e}"));
    if kind == "errors" {
        wtr.write_record(["config_hash", "seed", "kind", "cell", "replicate", "error"])
            .map_err(csv_err)?;
        for r in recs {
            wtr.write_record([
                r.config_hash.clone(),
                r.seed.to_string(),
                r.kind.clone(),
                r.cell.to_string(),
                r.replicate.to_string(),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
    } else {
        let header = csv_header(kind).expect("schema checked");
        wtr.write_record(header.split(',')).map_err(csv_err)?;
        for r in recs {
            let mut row = vec![r.config_hash.clone(), r.seed.to_string()];
            row.extend(r.fields.iter().map(|(_, v)| v.to_cell()));
            wtr.write_record(&row).map_err(csv_err)?;
        }
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Parse(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads a JSON-lines record file. The exact inverse of the JSON-lines export.
pub fn import_json_lines(path: &Path) -> Result<Vec<RunRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(RunRecord::from_json_line(&line)?);
        }
    }
    Ok(out)
}

/// Reads a per-kind CSV export. CSV carries the hash, seed and schema
/// columns only, so bookkeeping fields come back zeroed.
pub fn import_csv(path: &Path, kind: &str) -> Result<Vec<RunRecord>> {
    let cols = schema(kind).ok_or_else(|| Error::Parse(format!("unknown record kind {kind:?}")))?;
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(format!("csv: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != csv_header(kind).expect("known kind") {
        return Err(Error::Parse(format!("{}: header does not match {kind}", path.display())));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse(format!("csv: {e}")))?;
        let seed = row[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad seed {:?}", &row[1])))?;
        let fields = cols
            .iter()
            .enumerate()
            .map(|(i, (name, ty))| Ok((name.to_string(), Field::from_cell(*ty, &row[i + 2])?)))
            .collect::<Result<Vec<_>>>()?;
        out.push(RunRecord {
            kind: kind.to_string(),
            config_hash: row[0].to_string(),
            seed,
            cell: 0,
            replicate: 0,
            index: 0,
            fields,
            wall_ms: 0.0,
            artifacts: Vec::new(),
            error: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_header_is_fixed() {
        assert_eq!(
            csv_header("scaling").unwrap(),
            "config_hash,seed,n,w,tau,T,flips,mean_radius,max_radius"
        );
    }

    #[test]
    fn json_round_trip_handles_non_finite() {
        let r = RunRecord {
            kind: "bounds-sweep".into(),
            config_hash: "ab".into(),
            seed: 7,
            cell: 1,
            replicate: 2,
            index: 3,
            fields: Row::new()
                .text("family", "x")
                .int("n", 5)
                .float("param1", 0.1)
                .float("param2", f64::NEG_INFINITY)
                .float("lhs", 1e-300)
                .float("rhs", f64::NAN)
                .bool("holds", true)
                .finish(),
            wall_ms: 1.5,
            artifacts: vec!["a.pgm".into()],
            error: None,
        };
        let back = RunRecord::from_json_line(&r.to_json_line()).unwrap();
        assert_eq!(back.fields[3].1, Field::Float(f64::NEG_INFINITY));
        assert!(back.f64("rhs").unwrap().is_nan());
        assert_eq!(back.to_json_line(), r.to_json_line());
    }
}
