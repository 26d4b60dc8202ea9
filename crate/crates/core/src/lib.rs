//! Chase-escape with conversion on complete graphs.
//!
//! White vertices turn red along red-white edges at rate `lambda`, red
//! vertices turn blue along red-blue edges at rate 1 and spontaneously at
//! rate `alpha`. The crate offers three simulators with the same law on
//! complete graphs (the population chain in [`chain`], the per-edge
//! Gillespie simulation in [`graph`] and the birth/death coupling in
//! [`birth_death`]), an exact dynamic program and closed-form limits in
//! [`analytics`], and the Monte Carlo harness and acceptance checks in
//! [`harness`] and [`verify`].
//!
//! Numerical code is generic over the scalar: [`scalar::Field`] for the
//! exact jump-chain algebra (usable with rationals) and [`scalar::Real`] for
//! sampling and quadrature. The aliases below fix `f64`.

// `!(x > 0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod birth_death;
pub mod chain;
pub mod error;
pub mod graph;
pub mod harness;
pub mod indexed_set;
pub mod rng;
pub mod scalar;
pub mod verify;

pub use chain::{EventKind, InitMode, PopulationState};
pub use error::{Error, Result};
pub use rng::StreamRng;

pub type Params64 = chain::Params<f64>;
pub type FixationResult64 = chain::FixationResult<f64>;
pub type Trajectory64 = chain::Trajectory<f64>;
pub type ExactDistribution64 = analytics::ExactDistribution<f64>;
pub type DeathTimes64 = birth_death::DeathTimes<f64>;
pub type BirthTimes64 = birth_death::BirthTimes<f64>;
pub type TerminalSample64 = birth_death::TerminalSample<f64>;

pub type Params32 = chain::Params<f32>;
pub type FixationResult32 = chain::FixationResult<f32>;
