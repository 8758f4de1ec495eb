//! Plain (ASCII) PGM snapshots: `-1` is stored as 0 and `+1` as 255.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::TorusGrid;
use crate::{Error, Result};

pub fn to_pgm(grid: &TorusGrid) -> String {
    spins_to_pgm(grid.n(), grid.spins())
}

/// Encodes any `n x n` row-major spin array; also covers sides too small
/// for a torus.
pub fn spins_to_pgm(n: usize, spins: &[i8]) -> String {
    assert_eq!(spins.len(), n * n, "spin array must be n x n");
    let mut out = String::with_capacity(16 + n * n * 4);
    let _ = write!(out, "P2\n{n} {n}\n255\n");
    for row in spins.chunks(n.max(1)) {
        for (i, &s) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(if s > 0 { "255" } else { "0" });
        }
        out.push('\n');
    }
    out
}

pub fn write_pgm(grid: &TorusGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_pgm(grid)).map_err(|e| Error::io(path, e))
}

/// Parses a square plain PGM into a torus with neighborhood radius `w`.
pub fn parse_pgm(text: &str, w: usize) -> Result<TorusGrid> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let mut next = |what: &str| {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("PGM ended before {what}")))
    };
    if next("magic")? != "P2" {
        return Err(Error::Parse("expected plain PGM magic \"P2\"".into()));
    }
    let number = |tok: &str, what: &str| -> Result<usize> {
        tok.parse()
            .map_err(|_| Error::Parse(format!("bad PGM {what}: {tok:?}")))
    };
    let width = number(next("width")?, "width")?;
    let height = number(next("height")?, "height")?;
    let maxval = number(next("maxval")?, "maxval")?;
    if maxval != 255 {
        return Err(Error::Parse(format!("PGM maxval must be 255, got {maxval}")));
    }
    if width != height {
        return Err(Error::Parse(format!(
            "torus snapshots are square, got {width}x{height}"
        )));
    }
    let mut spins = Vec::with_capacity(width * height);
    for index in 0..width * height {
        let tok = next("pixel data")?;
        let v = number(tok, "pixel")?;
        spins.push(match v {
            0 => -1,
            255 => 1,
            other => {
                return Err(Error::InvalidSpin {
                    index,
                    value: other as i64,
                })
            }
        });
    }
    TorusGrid::from_spins(width, w, spins)
}

pub fn read_pgm(path: impl AsRef<Path>, w: usize) -> Result<TorusGrid> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&text, w)
}
