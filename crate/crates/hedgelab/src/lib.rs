//! Exact-arithmetic machinery for markets on finite filtered probability spaces.
//!
//! A model is an event tree: a finite outcome set, a refining sequence of
//! partitions (the filtration), strictly positive rational probabilities and a
//! nonnegative rational price process adapted to the tree. Everything downstream
//! is computed exactly over `BigRational`:
//!
//! * [`conditional`] — conditional essential supremum / infimum, conditional
//!   supports and exact convex-hull membership with certificates,
//! * [`arbitrage`] — detectors for instantaneous profits, classical arbitrage
//!   (equivalent martingale measures) and unbounded-profit cone directions,
//! * [`pricing`] — super-hedging prices by dynamic programming and infimum
//!   prices over finite portfolio menus and their measurable recombinations,
//! * [`topology`] — the pseudo-distances `d+` and `d^+_t` on payoffs, with
//!   decidable convergence, limit-membership and Cauchy checks for symbolically
//!   described payoff sequences,
//! * [`maxingale`] — conditional-esssup analogues of martingale tools: stopped
//!   sigma-algebras, (strong) sub-maxingale checks, dyadic refinement of
//!   stopping times.
//!
//! The `hedgelab` binary wraps the library behind a document-driven CLI; see
//! [`document`] for the input format and [`cli`] for the commands.

pub mod arbitrage;
pub mod cli;
pub mod conditional;
pub mod corpus;
pub mod document;
pub mod lp;
pub mod market;
pub mod maxingale;
pub mod pricing;
pub mod rational;
pub mod report;
pub mod space;
pub mod topology;

pub use rational::{Ext, Rat};
pub use space::{Atom, FilteredSpace, Rv, VecRv};

/// Errors surfaced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The caller handed in data that violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A certificate or witness failed its exact re-verification. Always a bug.
    #[error("internal verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
    pub(crate) fn verify(msg: impl Into<String>) -> Self {
        Error::Verification(msg.into())
    }
}
