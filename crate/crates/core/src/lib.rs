//! Metrics engine and simulation harness for cloud benchmarking.
//!
//! Four metric families are computed from piecewise-constant traces:
//!
//! * [`elasticity`]: accuracy, provisioning timeshare and jitter of a supply curve
//!   against a demand curve, plus the weighted elastic-speedup ranking.
//! * [`isolation`]: QoS-impact and workload-ratio isolation metrics for
//!   multi-tenant systems.
//! * [`availability`]: sample-based and provider-SLA availability, SLA adherence and
//!   strictness, and the availability-zone failure model.
//! * [`risk`]: provision, contention and service risk from provisioned, demanded
//!   and used resource traces.
//!
//! [`simharness`] produces deterministic ground-truth inputs for all of them.

#![forbid(unsafe_code)]

mod csvio;
mod serde_ext;

pub mod elasticity;
pub mod availability;
pub mod isolation;
pub mod risk;
pub mod simharness;
pub mod traces;

pub use traces::{CurvePair, StepCurve, TraceError};
