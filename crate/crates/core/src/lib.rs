//! Simulation and verification toolkit for the two-dimensional Schelling
//! segregation process on an `n x n` torus.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`] holds the spin field, neighborhood bias queries and
//!   monochromatic-radius measurement.
//! * [`dynamics`] runs the continuous-time process with thinned Poisson clocks.
//! * [`analysis`] classifies nodes, summarizes monochromatic regions, traces
//!   block infections and checks the geometry behind ball persistence.
//! * [`fpp`] is a node-weighted first-passage percolation engine.
//! * [`bounds`] computes exact binomial and hypergeometric tails and the
//!   inequality checks built on them.
//! * [`viral`] builds the diamond flip sequence around a viral node and replays it.
//! * [`harness`] wires everything into configurable, reproducible experiments.

pub mod analysis;
pub mod bounds;
pub mod dynamics;
mod error;
pub mod fpp;
pub mod harness;
pub mod lattice;
pub mod rng;
pub mod viral;

pub use error::{Error, Result};
pub use lattice::{Coord, SchellingParams, TorusGrid, TorusRect};
