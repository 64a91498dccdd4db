//! Jump times of Markov processes and their Cox construction.
//!
//! The crate simulates random times `τ` together with their compensators
//! `A`, and checks numerically that `A(τ)` is a standard exponential
//! variable. Building blocks:
//!
//! - [`time`], [`path`] and [`rng`]: model time with an explicit infinity,
//!   right-continuous piecewise paths, and seedable per-replication streams.
//! - [`compensator`]: continuous nondecreasing compensators, their
//!   generalized inverse and the time-change identities.
//! - [`processes`]: the jump-time model catalog and the indicator process
//!   `X_t = 1{t >= τ}` with its Feller semigroup.
//! - [`cox`]: `τ = inf{t : A(t) >= Z}` for an independent `Z ~ Exp(1)`.
//! - [`predictable`]: announcing sequences and the continuous decreasing
//!   process whose first zero is the announced time.
//! - [`verify`]: Monte Carlo verification reports.
//! - [`cli`]: the `jumptime` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod compensator;
pub mod cox;
pub mod error;
pub mod path;
pub mod predictable;
pub mod processes;
pub mod rng;
pub mod time;
pub mod verify;

pub use compensator::Compensator;
pub use error::{Error, Result};
pub use path::{CadlagPath, SegmentKind};
pub use rng::RngStream;
pub use time::TimePoint;
