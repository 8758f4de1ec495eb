use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::sample::ViralPatch;
use super::DiamondSequence;
use crate::lattice::{window_area, BiasThreshold, TorusRect};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayOutcome {
    /// Per sequence position.
    pub initial_spin: Vec<i8>,
    pub was_unhappy: Vec<bool>,
    pub flipped: Vec<bool>,
    pub flips: usize,
    /// Every node of the diamond ends with spin `+1`.
    pub succeeded: bool,
    /// `N_{floor(w/4)}(x)` is all `+1` afterwards.
    pub quarter_neighborhood_mono: bool,
    /// First sequence position that was proposed but not flipped while `-1`.
    pub first_stuck: Option<usize>,
}

pub const REPLAY_TRACE_HEADER: &str = "order,row,col,initial_spin,was_unhappy,flipped";

impl ReplayOutcome {
    /// Rows and columns are patch coordinates.
    pub fn trace_csv(&self, patch: &ViralPatch, seq: &DiamondSequence) -> String {
        let mut out = String::from(REPLAY_TRACE_HEADER);
        out.push('\n');
        for (i, &(a, b)) in seq.nodes.iter().enumerate() {
            let y = patch.at(a, b);
            let _ = writeln!(
                out,
                "{i},{},{},{},{},{}",
                y.row,
                y.col,
                self.initial_spin[i], self.was_unhappy[i], self.flipped[i]
            );
        }
        out
    }

    pub fn write_trace(&self, patch: &ViralPatch, seq: &DiamondSequence, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.trace_csv(patch, seq)).map_err(|e| Error::io(path, e))
    }
}

/// Proposes the sequence's nodes in order; a `-1` node flips to `+1` exactly
/// when it is unhappy in the current configuration, and `+1` nodes are left
/// alone. The current bias comes from the grid's dynamic rectangle-sum index.
pub fn replay_sequence(patch: &ViralPatch, seq: &DiamondSequence) -> Result<ReplayOutcome> {
    if seq.w != patch.w {
        return Err(Error::param(format!(
            "sequence built for w={} but the patch has w={}",
            seq.w, patch.w
        )));
    }
    let w = patch.w;
    let n = patch.grid.n();
    let th = BiasThreshold::new(patch.eps, window_area(w));
    let mut grid = patch.grid.clone();
    grid.enable_dynamic_index();
    let len = seq.len();
    let mut out = ReplayOutcome {
        initial_spin: Vec::with_capacity(len),
        was_unhappy: Vec::with_capacity(len),
        flipped: Vec::with_capacity(len),
        flips: 0,
        succeeded: false,
        quarter_neighborhood_mono: false,
        first_stuck: None,
    };
    for (i, &(a, b)) in seq.nodes.iter().enumerate() {
        let y = patch.at(a, b);
        let spin = grid.spin(y);
        let bias = grid.dynamic_rect_sum(&TorusRect::centered(y, w, n))?;
        let unhappy = th.unhappy(spin, bias);
        out.initial_spin.push(patch.grid.spin(y));
        out.was_unhappy.push(unhappy);
        let flip = spin < 0 && unhappy;
        if flip {
            grid.flip(y);
            out.flips += 1;
        } else if spin < 0 && out.first_stuck.is_none() {
            out.first_stuck = Some(i);
        }
        out.flipped.push(flip);
    }
    out.succeeded = seq.nodes.iter().all(|&(a, b)| grid.spin(patch.at(a, b)) > 0);
    let q = (w / 4) as i64;
    out.quarter_neighborhood_mono =
        (-q..=q).all(|a| (-q..=q).all(|b| grid.spin(patch.at(a, b)) > 0));
    Ok(out)
}
