//! Information-theoretic key security quantities on finite key spaces.
//!
//! The crate is organised around [`KeyDistribution`], an explicit probability
//! profile over `n`-bit keys. Everything else consumes it:
//!
//! * [`dist`] holds the distribution types and the information measures
//!   (statistical distance, entropy, ordered profile, per-bit error rate).
//! * [`constructions`] builds the extremal and counter-example distributions.
//! * [`bounds`] evaluates the closed-form attacker-success bounds.
//! * [`primitives`] has toy one-time pad, Toeplitz hashing, LFSR and
//!   polynomial MAC implementations.
//! * [`oracle`] computes the same quantities by exhaustive enumeration.
//! * [`report`] turns a block-level `d` into leak projections per unit time.
//!
//! Bit order is fixed crate-wide: bit `i` of a key is `(key >> i) & 1`, and bit
//! 0 is the first transmitted bit.

// `!(x >= lo)` range checks are written that way so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod constructions;
pub mod dist;
mod error;
pub mod oracle;
pub mod primitives;
pub mod report;

pub use dist::{ExactDistribution, JointKY, KeyDistribution, OrderedProfile, Rational};
pub use error::{Error, Result};
