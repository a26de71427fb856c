//! Elasticity metrics over demand/supply step curves.
//!
//! * accuracy: time-normalized under-/over-provisioned area, in resource units
//! * timeshare: fraction of the horizon spent under-/over-provisioned
//! * jitter: supply adaptations minus demand adaptations, per minute
//!
//! All three are zero for a perfectly elastic platform. [`speedup`] aggregates
//! accuracy and timeshare into a baseline-relative elastic speedup, and [`matching`]
//! derives the intensity-to-demand tables used to calibrate load profiles.

pub mod matching;
pub mod report;
pub mod speedup;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::traces::{self, CurvePair, Relation, TraceError};

pub use matching::{
    demand_from_workload, derive_matching, MatchingConfig, MatchingEntry, MatchingTable, MatchingTables,
    ProbeObservation, ScalingDirection, ScalingProbe,
};
pub use speedup::{aggregate_speedup, rank_platforms, PlatformMetrics, Ranking, SpeedupResult, WeightConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElasticityError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid baseline `{id}`: {reason}")]
    InvalidBaseline { id: String, reason: String },
    #[error("ranking needs at least two platforms, got {0}")]
    TooFewPlatforms(usize),
    #[error("invalid matching table: {0}")]
    InvalidTable(String),
    #[error("SLO unsatisfiable at intensity {intensity} within the upper scaling bound of {max_units} units")]
    BoundsExceeded { intensity: f64, max_units: u32 },
    #[error("platform did not settle within {limit} s at intensity {intensity} with {units} units")]
    NotSettled { intensity: f64, units: u32, limit: f64 },
    #[error("calibration failed at t={time}: {reason}")]
    Calibration { time: f64, reason: String },
}

pub type Result<T, E = ElasticityError> = std::result::Result<T, E>;

/// The five elasticity metrics of one measurement run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ElasticityMetrics {
    /// Average under-provisioned amount, in resource units.
    #[serde(rename = "acc_U")]
    pub accuracy_u: f64,
    /// Average over-provisioned amount, in resource units.
    #[serde(rename = "acc_O")]
    pub accuracy_o: f64,
    /// Fraction of time under-provisioned, in `[0, 1]`.
    #[serde(rename = "ts_U")]
    pub timeshare_u: f64,
    /// Fraction of time over-provisioned, in `[0, 1]`.
    #[serde(rename = "ts_O")]
    pub timeshare_o: f64,
    /// Adaptations per minute; negative when the supply adapts less often than the demand.
    pub jitter: f64,
}

impl ElasticityMetrics {
    pub fn is_zero(&self) -> bool {
        self.accuracy_u == 0.0
            && self.accuracy_o == 0.0
            && self.timeshare_u == 0.0
            && self.timeshare_o == 0.0
            && self.jitter == 0.0
    }
}

/// `(accuracy_U, accuracy_O)`.
pub fn accuracy(pair: &CurvePair) -> (f64, f64) {
    let t = pair.duration();
    let under = traces::positive_area_between(pair.demand(), pair.supply()).expect("pair is aligned");
    let over = traces::positive_area_between(pair.supply(), pair.demand()).expect("pair is aligned");
    (under / t, over / t)
}

/// `(timeshare_U, timeshare_O)`.
pub fn timeshare(pair: &CurvePair) -> (f64, f64) {
    let t = pair.duration();
    let under = traces::duration_where(pair.demand(), pair.supply(), Relation::Greater).expect("pair is aligned");
    let over = traces::duration_where(pair.supply(), pair.demand(), Relation::Greater).expect("pair is aligned");
    (under / t, over / t)
}

/// Unit adaptations of supply minus those of demand, per minute of horizon.
pub fn jitter(pair: &CurvePair, scaling_unit: f64) -> Result<f64> {
    let supply_changes = traces::count_unit_changes(pair.supply(), scaling_unit)?;
    let demand_changes = traces::count_unit_changes(pair.demand(), scaling_unit)?;
    let minutes = pair.duration() / 60.0;
    Ok((supply_changes as f64 - demand_changes as f64) / minutes)
}

/// All five metrics for one pair.
pub fn evaluate(pair: &CurvePair, scaling_unit: f64) -> Result<ElasticityMetrics> {
    let (accuracy_u, accuracy_o) = accuracy(pair);
    let (timeshare_u, timeshare_o) = timeshare(pair);
    Ok(ElasticityMetrics { accuracy_u, accuracy_o, timeshare_u, timeshare_o, jitter: jitter(pair, scaling_unit)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traces::StepCurve;

    fn pair(demand: StepCurve, supply: StepCurve) -> CurvePair {
        CurvePair::new(demand, supply).unwrap()
    }

    fn step_demand(horizon: f64) -> StepCurve {
        StepCurve::new(vec![(0.0, 2.0), (horizon / 2.0, 4.0)], horizon).unwrap()
    }

    #[test]
    fn perfect_pair_gives_positive_zeros() {
        let d = step_demand(100.0);
        let m = evaluate(&pair(d.clone(), d), 1.0).unwrap();
        for v in [m.accuracy_u, m.accuracy_o, m.timeshare_u, m.timeshare_o, m.jitter] {
            assert!(v == 0.0 && v.is_sign_positive());
        }
    }

    #[test]
    fn identical_curves_give_zero_metrics() {
        let d = step_demand(20.0);
        let m = evaluate(&pair(d.clone(), d), 1.0).unwrap();
        assert!(m.is_zero());
    }

    #[test]
    fn accuracy_examples() {
        let p = pair(step_demand(20.0), StepCurve::constant(3.0, 0.0, 20.0).unwrap());
        assert_eq!(accuracy(&p), (0.5, 0.5));
        let p = pair(StepCurve::constant(4.0, 0.0, 20.0).unwrap(), StepCurve::constant(3.0, 0.0, 20.0).unwrap());
        assert_eq!(accuracy(&p), (1.0, 0.0));
    }

    #[test]
    fn timeshare_examples() {
        let p = pair(step_demand(20.0), StepCurve::constant(3.0, 0.0, 20.0).unwrap());
        assert_eq!(timeshare(&p), (0.5, 0.5));
        let p = pair(step_demand(20.0), StepCurve::constant(5.0, 0.0, 20.0).unwrap());
        assert_eq!(timeshare(&p), (0.0, 1.0));
    }

    #[test]
    fn sluggish_platform_has_negative_jitter() {
        let horizon = 20.0 * 60.0;
        let p = pair(step_demand(horizon), StepCurve::constant(3.0, 0.0, horizon).unwrap());
        assert!((jitter(&p, 1.0).unwrap() - -0.1).abs() < 1e-15);
    }

    #[test]
    fn oscillating_platform_has_positive_jitter() {
        let horizon = 20.0 * 60.0;
        let demand = StepCurve::constant(3.0, 0.0, horizon).unwrap();
        let supply = StepCurve::new(
            vec![(0.0, 3.0), (240.0, 4.0), (480.0, 3.0), (720.0, 4.0), (960.0, 3.0)],
            horizon,
        )
        .unwrap();
        assert!((jitter(&pair(demand, supply), 1.0).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn jitter_rejects_fractional_units() {
        let demand = StepCurve::constant(2.5, 0.0, 60.0).unwrap();
        let supply = StepCurve::constant(3.0, 0.0, 60.0).unwrap();
        assert!(matches!(
            jitter(&pair(demand, supply), 1.0),
            Err(ElasticityError::Trace(TraceError::Unit { .. }))
        ));
    }

    #[test]
    fn metrics_serialize_with_short_names() {
        let m = ElasticityMetrics { accuracy_u: 0.18, accuracy_o: 1.053, timeshare_u: 0.081, timeshare_o: 0.519, jitter: -0.033 };
        let json = serde_json::to_value(m).unwrap();
        assert_eq!(json["acc_U"], 0.18);
        assert_eq!(json["ts_O"], 0.519);
        let back: ElasticityMetrics = serde_json::from_value(json).unwrap();
        assert_eq!(back, m);
    }
}
