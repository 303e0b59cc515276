//! Energy-efficiency-maximizing precoder design for a multibeam satellite
//! downlink.
//!
//! The crate covers the full pipeline:
//!
//! * [`linkbudget`] builds the complex downlink channel from scenario
//!   geometry and a beam gain model.
//! * [`metrics`] evaluates SINR, rate, power, energy efficiency, and
//!   feasibility for a candidate precoder.
//! * [`qtransform`] holds the two fractional-programming surrogates
//!   (scalar ratio transform and per-user quadratic SINR transform) whose
//!   closed-form auxiliary updates drive the alternating optimizer.
//! * [`conic`] is a solver-agnostic standard-form conic program plus one
//!   interior-point backend.
//! * [`subproblem`] transcribes the convex inner step over the precoder
//!   into that standard form and recovers the solution.
//! * [`optimizer`] runs the alternating loop to a stationary precoder and
//!   records a per-iteration trace.
//! * [`baselines`] provides the zero-forcing reference design.

pub mod baselines;
pub mod conic;
pub mod error;
pub mod linkbudget;
pub mod metrics;
pub mod optimizer;
pub mod qtransform;
pub mod subproblem;

pub use error::{Error, Result};
