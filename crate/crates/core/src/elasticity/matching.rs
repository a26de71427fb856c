//! Matching tables: workload intensity to the minimal resource amount that keeps the
//! SLO, measured separately for upward and downward scaling.

use serde::{Deserialize, Serialize};

use super::{ElasticityError, Result};
use crate::traces::StepCurve;

/// Relative slack when comparing a profile intensity against a table level.
const LOOKUP_REL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingDirection {
    Upward,
    Downward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingEntry {
    /// Work units per second.
    pub intensity: f64,
    /// Resource units.
    pub demand: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatchingTableRepr")]
pub struct MatchingTable {
    direction: ScalingDirection,
    entries: Vec<MatchingEntry>,
}

#[derive(Deserialize)]
struct MatchingTableRepr {
    direction: ScalingDirection,
    entries: Vec<MatchingEntry>,
}

impl TryFrom<MatchingTableRepr> for MatchingTable {
    type Error = ElasticityError;

    fn try_from(r: MatchingTableRepr) -> Result<Self> {
        MatchingTable::new(r.direction, r.entries)
    }
}

impl MatchingTable {
    pub fn new(direction: ScalingDirection, entries: Vec<MatchingEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(ElasticityError::InvalidTable("no entries".into()));
        }
        for e in &entries {
            if !(e.intensity >= 0.0) || !e.intensity.is_finite() {
                return Err(ElasticityError::InvalidTable(format!("invalid intensity {}", e.intensity)));
            }
        }
        for w in entries.windows(2) {
            if w[1].intensity <= w[0].intensity {
                return Err(ElasticityError::InvalidTable(format!(
                    "intensities not strictly increasing at {}",
                    w[1].intensity
                )));
            }
            if w[1].demand < w[0].demand {
                return Err(ElasticityError::InvalidTable(format!(
                    "demand decreases from {} to {} at intensity {}",
                    w[0].demand, w[1].demand, w[1].intensity
                )));
            }
        }
        Ok(Self { direction, entries })
    }

    pub fn direction(&self) -> ScalingDirection {
        self.direction
    }

    pub fn entries(&self) -> &[MatchingEntry] {
        &self.entries
    }

    pub fn max_intensity(&self) -> f64 {
        self.entries[self.entries.len() - 1].intensity
    }

    /// Demand of the lowest measured level at or above `intensity`, i.e. the smallest
    /// allocation known to hold the SLO. `None` above the measured range.
    pub fn lookup(&self, intensity: f64) -> Option<u32> {
        let slack = LOOKUP_REL_EPS * intensity.abs().max(1.0);
        let idx = self.entries.partition_point(|e| e.intensity < intensity - slack);
        self.entries.get(idx).map(|e| e.demand)
    }
}

/// The upward and downward tables of one platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingTables {
    pub upward: MatchingTable,
    pub downward: MatchingTable,
}

impl MatchingTables {
    pub fn new(upward: MatchingTable, downward: MatchingTable) -> Result<Self> {
        if upward.direction != ScalingDirection::Upward || downward.direction != ScalingDirection::Downward {
            return Err(ElasticityError::InvalidTable("tables passed in the wrong direction slots".into()));
        }
        Ok(Self { upward, downward })
    }

    pub fn get(&self, direction: ScalingDirection) -> &MatchingTable {
        match direction {
            ScalingDirection::Upward => &self.upward,
            ScalingDirection::Downward => &self.downward,
        }
    }
}

/// What a probed platform reports after a simulated time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeObservation {
    pub active_units: u32,
    pub slo_met: bool,
}

/// A platform whose allocation can be pinned while its steady-state SLO compliance is
/// observed. Implementations are stateful; derivation needs exclusive access.
pub trait ScalingProbe {
    /// `(min units, max units)`.
    fn scaling_bounds(&self) -> (u32, u32);
    fn set_intensity(&mut self, intensity: f64);
    fn set_allocation(&mut self, units: u32);
    /// Advances simulated time by `dt` seconds.
    fn advance(&mut self, dt: f64) -> ProbeObservation;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchingConfig {
    /// Seconds of unchanged allocation and SLO verdict required to call a state settled.
    pub settle_window: f64,
    /// Observation step in seconds.
    pub step: f64,
    /// Give up if no settled state is reached within this many seconds.
    pub max_settle_time: f64,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self { settle_window: 30.0, step: 1.0, max_settle_time: 3600.0 }
    }
}

fn settled_verdict<P: ScalingProbe + ?Sized>(
    sut: &mut P,
    intensity: f64,
    units: u32,
    config: &MatchingConfig,
) -> Result<bool> {
    sut.set_allocation(units);
    let mut elapsed = 0.0;
    let mut stable_for = 0.0;
    let mut last: Option<ProbeObservation> = None;
    while elapsed < config.max_settle_time {
        let obs = sut.advance(config.step);
        elapsed += config.step;
        if last == Some(obs) {
            stable_for += config.step;
        } else {
            stable_for = 0.0;
            last = Some(obs);
        }
        if stable_for >= config.settle_window && obs.active_units == units {
            return Ok(obs.slo_met);
        }
    }
    Err(ElasticityError::NotSettled { intensity, units, limit: config.max_settle_time })
}

/// Measures a matching table by stepping through `intensities` (ascending for upward,
/// descending for downward) and searching, at each level, for the smallest settled
/// allocation that meets the SLO. The search continues from the previous level's
/// allocation, which makes the resulting table monotone.
pub fn derive_matching<P: ScalingProbe + ?Sized>(
    sut: &mut P,
    intensities: &[f64],
    direction: ScalingDirection,
    config: &MatchingConfig,
) -> Result<MatchingTable> {
    if intensities.is_empty() {
        return Err(ElasticityError::InvalidTable("no intensities to measure".into()));
    }
    if intensities.windows(2).any(|w| w[1] <= w[0]) || intensities.iter().any(|w| !(*w >= 0.0)) {
        return Err(ElasticityError::InvalidTable("intensities must be non-negative and strictly increasing".into()));
    }
    if !(config.step > 0.0) || config.settle_window < 0.0 {
        return Err(ElasticityError::InvalidTable("settle step must be positive".into()));
    }
    let (min_units, max_units) = sut.scaling_bounds();
    let mut entries = Vec::with_capacity(intensities.len());
    match direction {
        ScalingDirection::Upward => {
            let mut units = min_units;
            for &w in intensities {
                sut.set_intensity(w);
                while !settled_verdict(sut, w, units, config)? {
                    if units >= max_units {
                        return Err(ElasticityError::BoundsExceeded { intensity: w, max_units });
                    }
                    units += 1;
                }
                entries.push(MatchingEntry { intensity: w, demand: units });
            }
        }
        ScalingDirection::Downward => {
            let mut units = max_units;
            for &w in intensities.iter().rev() {
                sut.set_intensity(w);
                if entries.is_empty() && !settled_verdict(sut, w, units, config)? {
                    return Err(ElasticityError::BoundsExceeded { intensity: w, max_units });
                }
                while units > min_units && settled_verdict(sut, w, units - 1, config)? {
                    units -= 1;
                }
                entries.push(MatchingEntry { intensity: w, demand: units });
            }
            entries.reverse();
        }
    }
    MatchingTable::new(direction, entries)
}

/// Maps an intensity profile to a resource-demand curve. Rising segments use the
/// upward table and falling segments the downward one; the first segment and flat
/// continuations keep the previous direction (upward initially).
pub fn demand_from_workload(profile: &StepCurve, tables: &MatchingTables) -> Result<StepCurve> {
    let mut direction = ScalingDirection::Upward;
    let mut prev: Option<f64> = None;
    let mut points = Vec::with_capacity(profile.breakpoints().len());
    for b in profile.breakpoints() {
        if let Some(p) = prev {
            if b.value > p {
                direction = ScalingDirection::Upward;
            } else if b.value < p {
                direction = ScalingDirection::Downward;
            }
        }
        prev = Some(b.value);
        let table = tables.get(direction);
        let demand = table.lookup(b.value).ok_or_else(|| ElasticityError::Calibration {
            time: b.time,
            reason: format!(
                "intensity {} above the {:?} table range (max {})",
                b.value,
                direction,
                table.max_intensity()
            ),
        })?;
        points.push((b.time, f64::from(demand)));
    }
    Ok(StepCurve::new(points, profile.horizon_end())?.simplified())
}
