//! Simulation and diagnostics library for a two-dimensional vortex system:
//! background vorticity carried as regularized particles, coupled to point
//! vortices that are either massless (first-order dynamics) or massive
//! (second-order gyroscopic dynamics).
//!
//! Everything is generic over the scalar type through the [`Real`] trait
//! (any `num_traits::Float` with the usual extras; `f64` and `f32` qualify).
//! The crate-root aliases fix `R = f64`, which is also the default type
//! parameter on every public type, so downstream code can ignore the
//! generics entirely.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod kernels;
pub mod real;
pub mod scheme;
pub mod state;
pub mod vec2;
pub mod velocity;

pub use error::{Result, SimError};
pub use real::Real;

/// `f64` aliases for the common entry points.
pub type Vec2f = vec2::Vec2<f64>;
pub type ParticleCloudF = state::ParticleCloud<f64>;
pub type MassiveVortexF = state::MassiveVortex<f64>;
pub type SimStateF = state::SimState<f64>;
pub type SimConfigF = state::SimConfig<f64>;
pub type InitialDataF = state::InitialData<f64>;
pub type StepOutcomeF = integrator::StepOutcome<f64>;
pub type PicardIterateF = scheme::PicardIterate<f64>;
pub type DiagnosticsRecordF = diagnostics::DiagnosticsRecord<f64>;

pub use dynamics::{rhs_for_mode, rhs_full, rhs_vortex_wave, StateDerivative};
pub use integrator::{initial_state, run, run_from, step, NullRecorder, RunRecorder};
pub use scheme::{picard_distance, picard_hn, picard_hn_rate, picard_run, picard_step};
pub use state::{discretize, Mode};
pub use velocity::VelocityField;
