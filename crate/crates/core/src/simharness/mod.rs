//! Seeded simulations of elastic platforms, multi-tenant systems and failing
//! deployments. They generate ground-truth traces for every metric module.

pub mod bungee;
pub mod platform;
pub mod profile;
pub mod sampler;
pub mod tenants;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::availability::{AvailabilityError, FailureModel, SampleLog};
use crate::elasticity::ElasticityError;
use crate::isolation::{
    self, derive_isolation_curve, find_reference_workload, CurveSearchConfig, IsolationCurve, IsolationError,
    IsolationReport, LevelConfig, QoSImpact, TenantSystem, WorkloadSet,
};
use crate::risk::{ResourceType, RiskError, RiskTrace};
use crate::traces::{zip_segments, CurvePair, StepCurve, TraceError};

pub use bungee::{bungee_run, BungeeConfig, BungeeReport};
pub use platform::{
    simulate_platform, AutoscalerPolicy, PlatformEvent, PlatformEventKind, PlatformSpec, SimulatedPlatform,
    SimulatedSupply, Slo,
};
pub use profile::{gaussian, generate_profile, LoadComponent, LoadProfileSpec};
pub use sampler::sample_availability;
pub use tenants::{simulate_tenants, IsolationMode, SimulatedTenantSystem, TenantRole, TenantSpec, TenantSystemSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Elasticity(#[from] ElasticityError),
    #[error(transparent)]
    Isolation(#[from] IsolationError),
    #[error(transparent)]
    Availability(#[from] AvailabilityError),
    #[error(transparent)]
    Risk(#[from] RiskError),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;

/// Relative precision of the reference-workload search.
const REFERENCE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenantScenario {
    pub system: TenantSystemSpec,
    /// Response-time target in seconds.
    pub qos_target: f64,
    /// Disruptive levels for the QoS-impact experiment.
    #[serde(default)]
    pub levels: LevelConfig,
    /// Number of isolation-curve points, including the reference.
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
    /// The curve spans `[W_d_ref, W_d_ref + curve_span · W_a_ref]`.
    #[serde(default = "default_curve_span")]
    pub curve_span: f64,
    #[serde(default)]
    pub search: CurveSearchConfig,
    #[serde(default)]
    pub p_end: Option<f64>,
}

fn default_curve_points() -> usize {
    21
}

fn default_curve_span() -> f64 {
    1.25
}

impl TenantScenario {
    pub fn new(system: TenantSystemSpec, qos_target: f64) -> Self {
        Self {
            system,
            qos_target,
            levels: LevelConfig::default(),
            curve_points: default_curve_points(),
            curve_span: default_curve_span(),
            search: CurveSearchConfig::default(),
            p_end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TenantOutcome {
    /// Largest quota-proportional workload at which every tenant meets the target.
    pub reference: WorkloadSet,
    /// Half the reference, the starting point of the QoS-impact experiment.
    pub qos_reference: WorkloadSet,
    pub qos_impact: std::result::Result<QoSImpact, String>,
    pub curve: IsolationCurve,
    pub report: IsolationReport,
}

/// QoS impact at each configured level, measured from half the maximal reference.
/// Saturation at the maximal reference would leave no headroom for disruptive load.
fn qos_impact<S: TenantSystem>(system: &mut S, reference: &WorkloadSet, levels: &LevelConfig) -> isolation::Result<QoSImpact> {
    let base = system.observe(reference)?;
    let mut measurements = Vec::new();
    for level in levels.levels(reference.disruptive_total())? {
        let disrupted = system.observe(&reference.with_totals(reference.abiding_total(), level)?)?;
        measurements.push((base.clone(), disrupted));
    }
    isolation::i_avg(&measurements)
}

pub fn run_tenant_experiment(scenario: &TenantScenario) -> Result<TenantOutcome> {
    if scenario.curve_points < 2 || !(scenario.curve_span > 0.0) {
        return Err(SimError::Spec("need at least two curve points and a positive span".into()));
    }
    let mut system = SimulatedTenantSystem::new(scenario.system.clone())?;
    let base = scenario.system.quota_workload()?;
    let reference = find_reference_workload(&mut system, &base, scenario.qos_target, REFERENCE_REL_TOL)?;

    let qos_reference = reference.scaled(0.5)?;
    let qos_impact = qos_impact(&mut system, &qos_reference, &scenario.levels).map_err(|e| e.to_string());
    if let Err(e) = &qos_impact {
        log::warn!("QoS impact not measurable: {e}");
    }

    let (w_d_ref, w_a_ref) = (reference.disruptive_total(), reference.abiding_total());
    let step = scenario.curve_span * w_a_ref / (scenario.curve_points - 1) as f64;
    let levels: Vec<f64> = (0..scenario.curve_points).map(|k| w_d_ref + step * k as f64).collect();
    let curve = derive_isolation_curve(&mut system, &reference, scenario.qos_target, &levels, &scenario.search)?;
    let report = IsolationReport::new(&curve, scenario.p_end, qos_impact.as_ref().ok())?;
    Ok(TenantOutcome { reference, qos_reference, qos_impact, curve, report })
}

/// Risk view of a simulated run: supply is provisioned, demand is demanded, and the
/// used amount is the smaller of the two.
pub fn risk_trace(pair: &CurvePair, resource: ResourceType) -> Result<RiskTrace> {
    let segments = zip_segments([pair.demand(), pair.supply()])?;
    let used = segments.iter().map(|s| (s.start, s.values[0].min(s.values[1]))).collect();
    let used = StepCurve::new(used, pair.demand().horizon_end())?.simplified();
    Ok(RiskTrace::new(resource, pair.supply().clone(), pair.demand().clone(), used)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    /// Seconds.
    pub duration: f64,
    /// Seconds.
    #[serde(default = "default_interval")]
    pub interval: f64,
    /// Unix seconds of the first sample.
    #[serde(default)]
    pub start: f64,
}

fn default_interval() -> f64 {
    60.0
}

/// Everything one simulation run needs; optional parts are skipped when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub profile: LoadProfileSpec,
    pub platform: PlatformSpec,
    #[serde(default)]
    pub bungee: BungeeConfig,
    #[serde(default)]
    pub tenants: Option<TenantScenario>,
    #[serde(default)]
    pub failure_model: Option<FailureModel>,
    #[serde(default)]
    pub sampling: Option<SamplingSpec>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub elasticity: BungeeReport,
    pub tenants: Option<TenantOutcome>,
    pub availability: Option<SampleLog>,
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioOutcome> {
    let elasticity = bungee_run(&scenario.platform, &scenario.profile, &scenario.bungee, scenario.seed)?;
    let tenants = scenario.tenants.as_ref().map(run_tenant_experiment).transpose()?;
    let availability = match (&scenario.failure_model, &scenario.sampling) {
        (Some(model), Some(s)) => Some(sample_availability(model, s.duration, s.interval, scenario.seed, s.start)?),
        (Some(_), None) | (None, Some(_)) => {
            return Err(SimError::Spec("failure_model and sampling must be given together".into()))
        }
        (None, None) => None,
    };
    Ok(ScenarioOutcome { elasticity, tenants, availability })
}
