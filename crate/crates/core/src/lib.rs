//! Core algorithms for studying a multi-recombinative evolution strategy with
//! cumulative step-size adaptation on a conically constrained linear problem.
//!
//! The crate provides four layers that cross-validate each other:
//!
//! * [`cone`] — the feasible region: a second-order cone with opening
//!   parameter `xi`, its closed-form Euclidean projection, and the `(x, r)`
//!   axis/distance reduction.
//! * [`es`] — the stochastic `(mu/mu_I, lambda)`-CSA-ES with repair by
//!   projection, fully instrumented, plus one-generation Monte Carlo
//!   estimators of the local progress measures.
//! * [`theory`] — closed-form approximations of those local measures:
//!   progress coefficient, offspring feasibility probability, and the
//!   normalized progress rates.
//! * [`mean_value`] and [`steady`] — the deterministic six-component
//!   mean-value iteration built from the local measures, and its steady
//!   state (numeric fixed point and the closed-form regimes).
//!
//! The crate is `no_std` (with `alloc`); all I/O, parallelism and file
//! formats live in the companion `conelab` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cone;
pub mod es;
pub mod math;
pub mod mean_value;
pub mod steady;
pub mod theory;

pub use cone::{AxisCoords, ConeSpec};
pub use es::{DynamicsSeries, EsConfig, GenerationSample, LocalMeasures, StrategyState};
pub use mean_value::{MeanState, StepMode};
pub use steady::{SsRegime, SteadyState};
pub use theory::{TheoryParams, TheoryState};
