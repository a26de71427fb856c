//! Provider SLA definitions, quantum-filtered availability, adherence and strictness.

use serde::{Deserialize, Serialize};

use super::{AvailabilityError, DowntimePeriod, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountTier {
    /// Availability floor in percent below which the discount applies.
    pub floor_pct: f64,
    pub discount_pct: f64,
}

/// Facts about a deployment that SLA preconditions are checked against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeploymentFacts {
    pub vm_count: u32,
    pub az_count: u32,
    /// Instances sharing one deployment template.
    pub instances_per_template: u32,
    pub restarted_before_claim: bool,
}

/// Conditions a deployment must satisfy before the SLA applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Precondition {
    MultiVm { min: u32 },
    MultiAz { min: u32 },
    SameTemplateInstances { min: u32 },
    RestartBeforeClaim,
}

impl Precondition {
    pub fn holds(&self, facts: &DeploymentFacts) -> bool {
        match *self {
            Precondition::MultiVm { min } => facts.vm_count >= min,
            Precondition::MultiAz { min } => facts.az_count >= min,
            Precondition::SameTemplateInstances { min } => facts.instances_per_template >= min,
            Precondition::RestartBeforeClaim => facts.restarted_before_claim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SlaRepr")]
pub struct SlaDefinition {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Minimum downtime period that counts, in minutes.
    pub quantum_min: f64,
    /// Availability is computed over running time rather than the whole month.
    pub running_time: bool,
    pub guarantee_pct: f64,
    /// The SLA also constrains performance (e.g. response times).
    pub perf_constraints: bool,
    /// Sorted by floor, descending.
    pub tiers: Vec<DiscountTier>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub preconditions: Vec<Precondition>,
}

#[derive(Deserialize)]
struct SlaRepr {
    #[serde(default)]
    name: Option<String>,
    quantum_min: f64,
    running_time: bool,
    guarantee_pct: f64,
    perf_constraints: bool,
    #[serde(default)]
    tiers: Vec<DiscountTier>,
    #[serde(default)]
    preconditions: Vec<Precondition>,
}

impl TryFrom<SlaRepr> for SlaDefinition {
    type Error = AvailabilityError;

    fn try_from(r: SlaRepr) -> Result<Self> {
        let mut sla = SlaDefinition::new(r.quantum_min, r.running_time, r.guarantee_pct, r.perf_constraints, r.tiers)?;
        sla.name = r.name;
        sla.preconditions = r.preconditions;
        Ok(sla)
    }
}

impl SlaDefinition {
    pub fn new(
        quantum_min: f64,
        running_time: bool,
        guarantee_pct: f64,
        perf_constraints: bool,
        tiers: Vec<DiscountTier>,
    ) -> Result<Self> {
        if !(quantum_min >= 0.0) || !quantum_min.is_finite() {
            return Err(AvailabilityError::InvalidSla(format!("quantum must be non-negative, got {quantum_min}")));
        }
        if !(99.0..=100.0).contains(&guarantee_pct) {
            return Err(AvailabilityError::InvalidSla(format!(
                "guarantee must lie in [99, 100] percent, got {guarantee_pct}"
            )));
        }
        if tiers.windows(2).any(|w| w[1].floor_pct >= w[0].floor_pct) {
            return Err(AvailabilityError::InvalidSla("discount tiers must be sorted by floor, descending".into()));
        }
        Ok(Self { name: None, quantum_min, running_time, guarantee_pct, perf_constraints, tiers, preconditions: vec![] })
    }

    /// Downtime a period of `length_min` minutes contributes after quantum filtering.
    pub fn counted_downtime(&self, length_min: f64) -> f64 {
        if length_min < self.quantum_min {
            0.0
        } else {
            length_min
        }
    }

    pub fn is_violated(&self, availability: f64) -> bool {
        availability * 100.0 < self.guarantee_pct
    }

    pub fn preconditions_met(&self, facts: &DeploymentFacts) -> bool {
        self.preconditions.iter().all(|p| p.holds(facts))
    }

    /// Discount of the lowest tier whose floor lies above `availability`, if any.
    pub fn discount_for(&self, availability: f64) -> Option<f64> {
        let pct = availability * 100.0;
        self.tiers.iter().rev().find(|t| pct < t.floor_pct).map(|t| t.discount_pct)
    }
}

/// `(month − Σ counted downtime) / month`, where periods shorter than the SLA quantum
/// are dropped.
pub fn provider_availability(periods: &[DowntimePeriod], sla: &SlaDefinition, month_minutes: f64) -> Result<f64> {
    if !(month_minutes > 0.0) || !month_minutes.is_finite() {
        return Err(AvailabilityError::Parameter(format!("month length must be positive, got {month_minutes}")));
    }
    let mut sorted: Vec<&DowntimePeriod> = periods.iter().collect();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
    for w in sorted.windows(2) {
        if w[1].start < w[0].end() - 1e-9 * w[0].end().abs().max(1.0) {
            return Err(AvailabilityError::OverlappingPeriods(w[1].start));
        }
    }
    if let Some(p) = periods.iter().find(|p| !(p.length_min >= 0.0)) {
        return Err(AvailabilityError::Parameter(format!("invalid downtime length {}", p.length_min)));
    }
    let downtime = periods.iter().map(|p| sla.counted_downtime(p.length_min)).fold(0.0, |a, x| a + x);
    Ok((month_minutes - downtime) / month_minutes)
}

/// How much of a billing month was actually monitored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coverage {
    Full,
    Partial,
    Unobserved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdherenceInput {
    pub availability: f64,
    pub guarantee_pct: f64,
    pub coverage: Coverage,
    /// Result of the SLA precondition hooks; months failing them are excluded.
    pub preconditions_met: bool,
}

impl AdherenceInput {
    pub fn violated(&self) -> bool {
        self.availability * 100.0 < self.guarantee_pct
    }

    /// Fully observed months always count; partially observed ones only on a violation.
    pub fn included(&self) -> bool {
        self.preconditions_met && (self.coverage == Coverage::Full || (self.coverage != Coverage::Unobserved && self.violated()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdherenceSummary {
    pub violated: usize,
    pub observed: usize,
    /// `violated / observed`.
    pub adherence: f64,
}

/// Share of observed SLA months that were violated.
pub fn sla_adherence(months: &[AdherenceInput]) -> Result<AdherenceSummary> {
    let included: Vec<&AdherenceInput> = months.iter().filter(|m| m.included()).collect();
    if included.is_empty() {
        return Err(AvailabilityError::NoData);
    }
    let violated = included.iter().filter(|m| m.violated()).count();
    Ok(AdherenceSummary { violated, observed: included.len(), adherence: violated as f64 / included.len() as f64 })
}

/// Normalization edges for the continuous strictness factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StrictnessRepr")]
pub struct StrictnessConfig {
    /// Quantum edges, minutes.
    pub q_edges: (f64, f64),
    /// Guarantee edges, percent.
    pub p_edges: (f64, f64),
}

#[derive(Deserialize)]
struct StrictnessRepr {
    q_edges: (f64, f64),
    p_edges: (f64, f64),
}

impl TryFrom<StrictnessRepr> for StrictnessConfig {
    type Error = AvailabilityError;

    fn try_from(r: StrictnessRepr) -> Result<Self> {
        StrictnessConfig::new(r.q_edges, r.p_edges)
    }
}

/// Quantum edges 0 to 10 minutes; guarantee edges 99.9 % to 100 %, the range under
/// which the published compute SLAs (all at 99.95 %) normalize to 0.5.
impl Default for StrictnessConfig {
    fn default() -> Self {
        Self { q_edges: (0.0, 10.0), p_edges: (99.9, 100.0) }
    }
}

impl StrictnessConfig {
    pub fn new(q_edges: (f64, f64), p_edges: (f64, f64)) -> Result<Self> {
        for (factor, (low, high)) in [("q", q_edges), ("p", p_edges)] {
            if !(low < high) || !low.is_finite() || !high.is_finite() {
                return Err(AvailabilityError::InvalidEdges { factor, low, high });
            }
        }
        Ok(Self { q_edges, p_edges })
    }
}

fn normalize(factor: &'static str, value: f64, (low, high): (f64, f64)) -> Result<f64> {
    let slack = 1e-12 * (high - low);
    if !(value >= low - slack && value <= high + slack) {
        return Err(AvailabilityError::Normalization { factor, value, low, high });
    }
    Ok(((value - low) / (high - low)).clamp(0.0, 1.0))
}

/// Strictness score `t + (1 − q̂) + p̂ + 5x`, with `q̂`, `p̂` the linearly normalized
/// quantum and guarantee.
pub fn strictness(sla: &SlaDefinition, config: &StrictnessConfig) -> Result<f64> {
    let q = normalize("q", sla.quantum_min, config.q_edges)?;
    let p = normalize("p", sla.guarantee_pct, config.p_edges)?;
    let t = if sla.running_time { 1.0 } else { 0.0 };
    let x = if sla.perf_constraints { 5.0 } else { 0.0 };
    Ok(t + (1.0 - q) + p + x)
}
