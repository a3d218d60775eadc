//! Exact and Monte Carlo analysis of riffle-shuffle randomness for decks
//! with repeated cards and for decks dealt into hands.
//!
//! The library works in the Gilbert-Shannon-Reeds model generalized to
//! a-shuffles: cut a deck into `a` packets and interleave, with every
//! cut/riffle combination equally likely. It computes, with exact
//! big-rational arithmetic throughout:
//!
//! - [`exact`]: a-shuffle permutation probabilities, Eulerian numbers,
//!   descent polynomials of deck-to-deck transitions, transition
//!   probabilities, and total variation distances from uniform (fixed
//!   source and fixed target), plus the error bound on the first-order
//!   estimate.
//! - [`asymptotics`]: the first-order coefficient c1 of a transition
//!   probability in 1/a, and the constants kappa1 (fixed source) and
//!   kappabar1 (fixed target, i.e. a dealing method), the latter via a
//!   generating-function recursion over theta-value distributions that
//!   handles bridge- and poker-sized patterns.
//! - [`deck`]: decks and dealing patterns over an ordered alphabet, the
//!   cut operation, digraph/pair statistics W and Z, lattice-path views,
//!   and multiset-permutation orbit enumeration.
//! - [`simulate`]: a seeded GSR sampler, empirical TV estimation on small
//!   orbits, and chi-square goodness-of-fit checks against the exact
//!   engine.

pub mod asymptotics;
pub mod deck;
mod error;
pub mod exact;
pub mod numfmt;
pub mod simulate;

pub use error::Error;

/// Arbitrary-precision signed integer; holds Eulerian numbers, orbit
/// sizes, and descent-polynomial coefficients.
pub type Int = num::BigInt;

/// Exact rational. Every probability, variation distance, and kappa
/// constant is one of these; floats appear only in display formatting.
pub type Rat = num::BigRational;

pub type Result<T> = std::result::Result<T, Error>;

/// Enumeration budgets for the operations whose cost is exponential in
/// deck size. Exceeding a budget is a reported error, never a silent
/// truncation.
#[derive(Debug, Clone)]
pub struct Budget {
    /// Largest orbit (multiset-permutation count N) that will be
    /// enumerated, e.g. by [`deck::Composition::enumerate`] or the
    /// fixed-source/fixed-target TV sums.
    pub max_orbit: u128,
    /// Largest deck size n for which the transition set T(D, D') is
    /// enumerated (its size is a product of factorials).
    pub max_transition_deck: usize,
    /// Largest state count (product of n_v + 1 over values) for the
    /// theta-distribution recursion behind `kappabar1`.
    pub max_theta_states: u128,
    /// Largest orbit for which Monte Carlo TV estimation will tally
    /// outcomes.
    pub max_tally_orbit: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_orbit: 10_000_000,
            max_transition_deck: 12,
            max_theta_states: 1_000_000,
            max_tally_orbit: 100_000,
        }
    }
}

impl Budget {
    /// Budget with all orbit-sized knobs set to `n` (the transition deck
    /// size cap is unchanged; it counts cards, not orbits).
    pub fn with_orbit_limit(n: u128) -> Self {
        Budget {
            max_orbit: n,
            max_theta_states: n,
            max_tally_orbit: n,
            ..Budget::default()
        }
    }
}
