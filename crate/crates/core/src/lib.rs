//! Paired-agent deference experiment harness.
//!
//! Two agents independently rate the sentiment of a movie review, are
//! introduced to each other with configurable status credentials, see each
//! other's rating, and then get one opportunity to revise. The harness runs
//! that four-phase protocol across six pairing/status conditions, journals
//! every trial, and computes the deference statistics (rates with Wilson
//! intervals, bootstrapped asymmetries, planned contrasts with effect sizes
//! and multiplicity correction).
//!
//! Backends are either remote chat-completion endpoints or deterministic
//! simulated agents; all randomness derives from a single run seed, so
//! all-simulated runs reproduce bit-for-bit.
//!
//! The statistics kernel in [`stats`] is generic over the scalar type via
//! `num-traits`; the aliases below fix `f64` for the experiment pipeline.

pub mod agents;
pub mod config;
pub mod corpus;
pub mod prompts;
pub mod protocol;
pub mod report;
pub mod seeds;
pub mod stats;

/// A sentiment rating. The protocol accepts only values in `[0, 1]`.
pub type Rating = f64;

/// Concrete scalar instantiations of the generic stats kernel.
pub type ProportionEstimate = stats::ProportionEstimate<f64>;
pub type AsymmetryEstimate = stats::AsymmetryEstimate<f64>;
pub type ContrastResult = stats::ContrastResult<f64>;

/// Change threshold below which a rating revision counts as "unchanged",
/// and an initial gap counts as "no disagreement".
pub const DEFAULT_THRESHOLD: f64 = 0.01;
/// Confidence level shared by Wilson and bootstrap intervals.
pub const DEFAULT_CONFIDENCE: f64 = 0.95;
/// Bootstrap resampling iterations.
pub const DEFAULT_BOOTSTRAP_ITERATIONS: usize = 10_000;
