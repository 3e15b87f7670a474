//! State-vector simulation of a two-photon polarization-entangled eraser
//! interferometer.
//!
//! The library models the apparatus as explicit linear optics on small labeled
//! registers: a source emits a polarization-entangled photon pair, the system
//! photon traverses a modified Mach-Zehnder interferometer whose front
//! element is a polarizing beam splitter, and the environment photon is
//! analyzed in either a linear or a circular polarization basis depending on
//! a per-trial choice bit. On top of the state algebra sit a projective
//! measurement engine with collapse, a measurement-order-independence
//! checker, a reproducible Monte Carlo trial generator, coincidence
//! statistics, and a CLI that emits deterministic CSV/JSON reports.
//!
//! Modules, bottom up:
//!
//! - [`hilbert`]: labeled registers, kets, isometries, basis changes.
//! - [`measurement`]: Born-rule probabilities, collapse, order independence.
//! - [`optics`]: the element catalog, pipelines, and analyzer choices.
//! - [`montecarlo`]: seeded per-trial sampling with logical timestamps.
//! - [`analysis`]: analytic coincidence tables, tallies, visibility, z-tests.
//! - [`verify`]: the named invariant suite behind `qeraser verify`.
//! - [`cli`]: argument parsing, subcommands, and file emission.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod hilbert;
pub mod measurement;
pub mod montecarlo;
pub mod optics;
pub mod verify;

pub use error::{Error, Result};

/// Absolute tolerance for analytic identities (unitarity, normalization,
/// route equivalence, probability tables). Doubles carry ~16 significant
/// digits; the composite spaces here have dimension at most 16, so exact
/// identities hold to well under 1e-12.
pub const ANALYTIC_TOL: f64 = 1e-12;

/// Probabilities at or below this threshold are treated as impossible
/// branches: conditioning on them is an error and conditional probabilities
/// given them are defined as zero. Squaring amplitudes built from ~1e-16
/// rounding noise yields ~1e-32, safely below this line, while no physical
/// branch in scope comes anywhere near it.
pub const ZERO_PROB_TOL: f64 = 1e-24;

/// Default z-score threshold for Monte Carlo versus analytic comparisons.
pub const DEFAULT_SIGMA: f64 = 4.0;
