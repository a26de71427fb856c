//! The four-step elasticity benchmark on a simulated platform: platform analysis,
//! calibration, measurement and evaluation.

use serde::{Deserialize, Serialize};

use super::platform::{simulate_platform, PlatformEvent, PlatformSpec, SimulatedPlatform};
use super::profile::{generate_profile, LoadProfileSpec};
use super::{Result, SimError};
use crate::elasticity::{
    self, aggregate_speedup, derive_matching, demand_from_workload, ElasticityMetrics, MatchingConfig, MatchingTables,
    ScalingDirection, ScalingProbe, SpeedupResult, WeightConfig,
};
use crate::traces::{CurvePair, StepCurve};

/// Relative precision of the unit-throughput search.
const THROUGHPUT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BungeeConfig {
    /// The profile is written for units of this throughput and rescaled to the measured
    /// unit throughput of each platform, so every platform sees the same resource demand.
    pub reference_unit_capacity: f64,
    /// Matching-table resolution: intensity levels per resource unit.
    pub levels_per_unit: u32,
    pub weights: WeightConfig,
    pub baseline: Option<ElasticityMetrics>,
    pub matching: MatchingConfig,
}

impl Default for BungeeConfig {
    fn default() -> Self {
        Self {
            reference_unit_capacity: 100.0,
            levels_per_unit: 4,
            weights: WeightConfig::default(),
            baseline: None,
            matching: MatchingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BungeeReport {
    /// Highest intensity a single unit sustains within the SLO.
    pub unit_throughput: f64,
    pub tables: MatchingTables,
    /// Calibrated intensity profile fed to the platform.
    pub intensity: StepCurve,
    pub trace: CurvePair,
    pub events: Vec<PlatformEvent>,
    pub metrics: ElasticityMetrics,
    pub speedup: Option<SpeedupResult>,
}

fn unit_throughput(probe: &mut SimulatedPlatform) -> Result<f64> {
    let units = probe.scaling_bounds().0;
    probe.set_allocation(units);
    let mut meets = |w: f64| {
        probe.set_intensity(w);
        probe.advance(0.0).slo_met
    };
    let mut hi = 1.0;
    let mut lo = 0.0;
    while meets(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(SimError::Spec("SLO is met at every intensity".into()));
        }
    }
    while hi - lo > THROUGHPUT_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if meets(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        return Err(SimError::Spec("SLO cannot be met with the minimal allocation".into()));
    }
    Ok(lo / f64::from(units))
}

/// Runs the whole benchmark and returns every intermediate artifact.
pub fn bungee_run(platform: &PlatformSpec, profile: &LoadProfileSpec, config: &BungeeConfig, seed: u64) -> Result<BungeeReport> {
    if !(config.reference_unit_capacity > 0.0) || config.levels_per_unit == 0 {
        return Err(SimError::Spec("reference unit capacity and levels per unit must be positive".into()));
    }
    let mut probe = SimulatedPlatform::new(platform.clone())?;

    let c = unit_throughput(&mut probe)?;
    let levels = platform.max_units * config.levels_per_unit;
    let step = c / f64::from(config.levels_per_unit);
    let grid: Vec<f64> = (1..=levels).map(|k| step * f64::from(k)).collect();
    let upward = derive_matching(&mut probe, &grid, ScalingDirection::Upward, &config.matching)?;
    let downward = derive_matching(&mut probe, &grid, ScalingDirection::Downward, &config.matching)?;
    let tables = MatchingTables::new(upward, downward)?;
    log::debug!("unit throughput {c}, {} matching levels", grid.len());

    let raw = generate_profile(profile, seed)?;
    let intensity = raw.map_values(|w| w * c / config.reference_unit_capacity)?;
    let demand = demand_from_workload(&intensity, &tables)?;

    let supply = simulate_platform(platform, &demand)?;
    let trace = CurvePair::new(demand, supply.supply)?;

    let metrics = elasticity::evaluate(&trace, 1.0)?;
    let speedup = match &config.baseline {
        Some(base) => Some(aggregate_speedup("platform", &metrics, base, &config.weights)?),
        None => None,
    };
    Ok(BungeeReport { unit_throughput: c, tables, intensity, trace, events: supply.events, metrics, speedup })
}
