//! Performance-isolation metrics for multi-tenant systems.
//!
//! QoS-impact metrics ([`i_qos`], [`i_avg`]) compare abiding tenants' QoS at a
//! reference and a disrupted workload. Workload-ratio metrics work on an
//! [`IsolationCurve`]: the maximal abiding load that keeps the QoS target as a
//! function of the disruptive load.

pub mod curve;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::traces::TraceError;

pub use curve::{
    derive_isolation_curve, find_reference_workload, i_base, i_end, i_int_base, i_int_free, CurvePoint,
    CurveSearchConfig, IsolationCurve, IsolationReport, ReferenceMarks, TenantSystem,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IsolationError {
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
    #[error("observation has no QoS value for abiding tenant `{0}`")]
    MissingTenant(String),
    #[error("tenant sets of the reference and disrupted observation differ")]
    TenantMismatch,
    #[error("invalid experiment: relative load increase is {delta_w}, must be positive")]
    InvalidExperiment { delta_w: f64 },
    #[error("degenerate reference: {0}")]
    Degenerate(String),
    #[error("abiding tenant `{0}` is saturated")]
    Saturated(String),
    #[error("level {index}: {source}")]
    Level { index: usize, source: Box<IsolationError> },
    #[error("setup error: {0}")]
    Setup(String),
    #[error("invalid isolation curve: {0}")]
    InvalidCurve(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("invalid reference marks: {0}")]
    Json(String),
}

pub type Result<T, E = IsolationError> = std::result::Result<T, E>;

/// A metric value, or the reason it cannot be obtained from the available data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Measured {
    Value(f64),
    NotMeasurable { not_measurable: String },
}

impl Measured {
    pub fn not_measurable(reason: impl Into<String>) -> Self {
        Measured::NotMeasurable { not_measurable: reason.into() }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Measured::Value(v) => Some(*v),
            Measured::NotMeasurable { .. } => None,
        }
    }
}

/// Per-tenant loads, in work units per second, split into abiding and disruptive tenants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WorkloadSetRepr")]
pub struct WorkloadSet {
    abiding: BTreeMap<String, f64>,
    disruptive: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct WorkloadSetRepr {
    abiding: BTreeMap<String, f64>,
    disruptive: BTreeMap<String, f64>,
}

impl TryFrom<WorkloadSetRepr> for WorkloadSet {
    type Error = IsolationError;

    fn try_from(r: WorkloadSetRepr) -> Result<Self> {
        WorkloadSet::new(r.abiding, r.disruptive)
    }
}

impl WorkloadSet {
    pub fn new(abiding: BTreeMap<String, f64>, disruptive: BTreeMap<String, f64>) -> Result<Self> {
        if abiding.is_empty() || disruptive.is_empty() {
            return Err(IsolationError::InvalidWorkload(
                "needs at least one abiding and one disruptive tenant".into(),
            ));
        }
        if let Some(id) = abiding.keys().find(|id| disruptive.contains_key(*id)) {
            return Err(IsolationError::InvalidWorkload(format!("tenant `{id}` is both abiding and disruptive")));
        }
        for (id, w) in abiding.iter().chain(&disruptive) {
            if !(*w >= 0.0) || !w.is_finite() {
                return Err(IsolationError::InvalidWorkload(format!("tenant `{id}` has invalid load {w}")));
            }
        }
        Ok(Self { abiding, disruptive })
    }

    pub fn abiding(&self) -> &BTreeMap<String, f64> {
        &self.abiding
    }

    pub fn disruptive(&self) -> &BTreeMap<String, f64> {
        &self.disruptive
    }

    /// `W_a`.
    pub fn abiding_total(&self) -> f64 {
        self.abiding.values().sum()
    }

    /// `W_d`.
    pub fn disruptive_total(&self) -> f64 {
        self.disruptive.values().sum()
    }

    pub fn total(&self) -> f64 {
        self.abiding_total() + self.disruptive_total()
    }

    pub fn load(&self, tenant: &str) -> Option<f64> {
        self.abiding.get(tenant).or_else(|| self.disruptive.get(tenant)).copied()
    }

    /// Rescales each group so its total becomes the given value, keeping the tenants'
    /// relative shares. A group with zero total is split evenly.
    pub fn with_totals(&self, abiding_total: f64, disruptive_total: f64) -> Result<Self> {
        fn rescale(group: &BTreeMap<String, f64>, total: f64) -> BTreeMap<String, f64> {
            let current: f64 = group.values().sum();
            group
                .iter()
                .map(|(id, w)| {
                    let v = if current > 0.0 { w / current * total } else { total / group.len() as f64 };
                    (id.clone(), v)
                })
                .collect()
        }
        Self::new(rescale(&self.abiding, abiding_total), rescale(&self.disruptive, disruptive_total))
    }

    /// Multiplies every load by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let scale = |g: &BTreeMap<String, f64>| g.iter().map(|(id, w)| (id.clone(), w * factor)).collect();
        Self::new(scale(&self.abiding), scale(&self.disruptive))
    }
}

/// Per-tenant QoS (lower is better) under a workload; `None` marks a saturated tenant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoSObservation {
    pub workloads: WorkloadSet,
    pub qos: BTreeMap<String, Option<f64>>,
}

impl QoSObservation {
    pub fn new(workloads: WorkloadSet, qos: BTreeMap<String, Option<f64>>) -> Result<Self> {
        let obs = Self { workloads, qos };
        obs.validate()?;
        Ok(obs)
    }

    pub fn validate(&self) -> Result<()> {
        for id in self.workloads.abiding.keys() {
            match self.qos.get(id) {
                None => return Err(IsolationError::MissingTenant(id.clone())),
                Some(Some(z)) if !(*z > 0.0) || !z.is_finite() => {
                    return Err(IsolationError::InvalidWorkload(format!("tenant `{id}` has invalid QoS {z}")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// True when every abiding tenant has a QoS value no worse than `target`.
    pub fn abiding_meet(&self, target: f64) -> bool {
        self.workloads.abiding.keys().all(|id| matches!(self.qos.get(id), Some(Some(z)) if *z <= target))
    }

    fn abiding_qos_sum(&self) -> Result<f64> {
        let mut sum = 0.0;
        for id in self.workloads.abiding.keys() {
            match self.qos.get(id) {
                None => return Err(IsolationError::MissingTenant(id.clone())),
                Some(None) => return Err(IsolationError::Saturated(id.clone())),
                Some(Some(z)) => sum += z,
            }
        }
        Ok(sum)
    }
}

/// `Δz_A / Δw`: relative QoS degradation of the abiding tenants per relative load increase.
pub fn i_qos(reference: &QoSObservation, disrupted: &QoSObservation) -> Result<f64> {
    let same_keys = |a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>| a.keys().eq(b.keys());
    if !same_keys(&reference.workloads.abiding, &disrupted.workloads.abiding)
        || !same_keys(&reference.workloads.disruptive, &disrupted.workloads.disruptive)
    {
        return Err(IsolationError::TenantMismatch);
    }
    let w_ref = reference.workloads.total();
    if !(w_ref > 0.0) {
        return Err(IsolationError::Degenerate("reference total load is zero".into()));
    }
    let delta_w = (disrupted.workloads.total() - w_ref) / w_ref;
    if !(delta_w > 0.0) {
        return Err(IsolationError::InvalidExperiment { delta_w });
    }
    let z_ref = reference.abiding_qos_sum()?;
    if !(z_ref > 0.0) {
        return Err(IsolationError::Degenerate("reference QoS sum is zero".into()));
    }
    let z_disr = disrupted.abiding_qos_sum()?;
    let delta_z = (z_disr - z_ref) / z_ref;
    Ok(delta_z / delta_w)
}

/// `m` disruptive-load levels equidistant in `(lower, upper]`.
pub fn equidistant_levels(lower: f64, upper: f64, m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(IsolationError::Parameter("need at least one level".into()));
    }
    if !(upper > lower) || !lower.is_finite() || !upper.is_finite() {
        return Err(IsolationError::Parameter(format!("upper bound {upper} must exceed lower bound {lower}")));
    }
    let step = (upper - lower) / m as f64;
    Ok((1..=m).map(|k| lower + step * k as f64).collect())
}

/// Default level layout: 5 levels up to twice the reference disruptive load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelConfig {
    pub m: usize,
    /// Upper bound as a multiple of the reference disruptive load.
    pub upper_factor: f64,
}

impl Default for LevelConfig {
    fn default() -> Self {
        Self { m: 5, upper_factor: 2.0 }
    }
}

impl LevelConfig {
    pub fn levels(&self, reference_disruptive: f64) -> Result<Vec<f64>> {
        equidistant_levels(reference_disruptive, reference_disruptive * self.upper_factor, self.m)
    }
}

/// Per-level I_QoS values together with their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoSImpact {
    pub i_qos: Vec<f64>,
    pub i_avg: f64,
}

/// Arithmetic mean of I_QoS over `(reference, disrupted)` measurements taken at
/// equidistant disruptive levels.
pub fn i_avg(measurements: &[(QoSObservation, QoSObservation)]) -> Result<QoSImpact> {
    if measurements.is_empty() {
        return Err(IsolationError::Parameter("need at least one measurement".into()));
    }
    let levels: Vec<f64> = measurements.iter().map(|(_, d)| d.workloads.disruptive_total()).collect();
    if levels.len() >= 3 {
        let step = levels[1] - levels[0];
        let scale = levels.iter().fold(0.0_f64, |m, l| m.max(l.abs())).max(1e-12);
        for (index, w) in levels.windows(2).enumerate() {
            if ((w[1] - w[0]) - step).abs() > 1e-6 * scale {
                return Err(IsolationError::Level {
                    index: index + 1,
                    source: Box::new(IsolationError::Parameter("disruptive levels are not equidistant".into())),
                });
            }
        }
    }
    let mut values = Vec::with_capacity(measurements.len());
    for (index, (r, d)) in measurements.iter().enumerate() {
        let v = i_qos(r, d).map_err(|e| IsolationError::Level { index, source: Box::new(e) })?;
        values.push(v);
    }
    let i_avg = values.iter().sum::<f64>() / values.len() as f64;
    Ok(QoSImpact { i_qos: values, i_avg })
}
