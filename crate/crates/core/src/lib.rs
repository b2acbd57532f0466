//! Relay protocols, error bounds and Monte Carlo simulation for chains of
//! binary symmetric channels.
//!
//! A source at node 0 wants to deliver a `k`-bit message to a sink at node
//! `m`, with each adjacent pair of nodes connected by an independent binary
//! symmetric channel of crossover probability `p`. Every node may transmit
//! one bit per time step, and relays only see the noisy output of their
//! predecessor. This crate provides:
//!
//! * [`channel`] — the noisy-link model and reproducible per-(trial, link)
//!   noise tapes;
//! * [`onebit`] — a recursive level-based relay protocol for a single bit,
//!   plus simple repetition chaining for lower error;
//! * [`hamming`] — the bit-position-wise shortened Hamming block code that
//!   corrects one corrupted block among many;
//! * [`multibit`] — the recursive multi-level block protocol for `k` bits,
//!   including an append-only streaming encoder;
//! * [`analysis`] — closed-form error recursions, delay budgets, achievable
//!   and converse bounds on the delay-per-hop trade-off;
//! * [`baseline`] — store-and-forward reference protocols used for
//!   comparison;
//! * [`sim`] — the Monte Carlo harness (trial orchestration, parallelism,
//!   confidence intervals);
//! * [`stepwise`] — a literal synchronous time-stepped execution engine used
//!   to audit the fast path;
//! * [`report`] — deterministic CSV/JSON result serialization.
//!
//! Numeric analysis routines are generic over the scalar type through
//! [`scalar::Real`]; the crate-root aliases fix `f64` for the common case.

pub mod analysis;
pub mod baseline;
pub mod channel;
pub mod hamming;
pub mod multibit;
pub mod onebit;
pub mod report;
pub mod scalar;
pub mod sim;
pub mod stepwise;

/// A single logical or raw channel bit. Always 0 or 1.
pub type Bit = u8;

/// Error-bound table over `f64` (the common instantiation of
/// [`analysis::BoundTable`]).
pub type BoundTable = analysis::BoundTable<f64>;

/// Converse-bound table over `f64`.
pub type ConverseTable = analysis::ConverseTable<f64>;

/// Converse-bound parameters over `f64`.
pub type ConverseParams = analysis::ConverseParams<f64>;

/// Outcome of one simulated protocol execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialResult {
    /// The sink's estimate of the message bits.
    pub estimate: Vec<Bit>,
    /// Whether the estimate equals the transmitted message exactly.
    pub correct: bool,
    /// Channel uses attributable to pushing the whole stream through one
    /// link: the number of raw bits each node transmits.
    pub transmission_delay: u64,
    /// Extra channel uses before the last stream bit clears the chain:
    /// activation lag of node `m` relative to a noiseless wire.
    pub propagation_delay: u64,
    /// Total time steps until the sink has read its final raw bit.
    /// Always equals `transmission_delay + propagation_delay`.
    pub n_total: u64,
}

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A crossover probability outside `[0, 1/2)`.
    #[error("crossover probability must satisfy 0 <= p < 1/2, got {0}")]
    InvalidProbability(f64),
    /// A structurally invalid parameter (wrong parity, out of range, …).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// An input slice whose length disagrees with the configuration.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    /// A vote over an even number of ballots with no tie-break rule.
    #[error("majority vote over even count {0} requires a tie-break")]
    EvenVote(usize),
    /// Results produced under a configuration differing from the one given.
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    /// No parameter value satisfies the requested constraint.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// An internal invariant was violated (reported, never panicked).
    #[error("internal error: {0}")]
    Internal(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
