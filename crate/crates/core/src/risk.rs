//! Operational risk from provisioned (P), demanded (D) and used (U) resource traces.
//!
//! * provision risk `r_p`: time average of `(P − D) / P`, negative when under-provisioned
//! * contention risk `r_c`: time average of `(D − U) / D`
//! * service risk `r_e`: weighted combination of the provisioning gap magnitude and `r_c`
//!
//! [`system_risk`] aggregates service risks. Its quantiles interpolate linearly
//! between closest ranks: with sorted values `x_1..x_n`, the `q` quantile sits at
//! rank `h = n·q + 1/2`, clamped to `[1, n]`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvio;
use crate::traces::{self, StepCurve, TraceError};

/// Relative slack for the `U ≤ D` and `U ≤ P` checks.
const BOUND_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("{constraint} violated on segments {}", format_segments(.segments))]
    Violation { constraint: &'static str, segments: Vec<(f64, f64)> },
    #[error("provisioned amount is zero on [{start}, {end})")]
    DegenerateProvision { start: f64, end: f64 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("no service risks to aggregate")]
    NoData,
    #[error("quantile {0} outside [0, 1]")]
    InvalidQuantile(f64),
    #[error("unknown resource type `{0}`")]
    UnknownResource(String),
}

fn format_segments(segments: &[(f64, f64)]) -> String {
    let shown: Vec<String> = segments.iter().take(5).map(|(s, e)| format!("[{s}, {e})")).collect();
    let more = segments.len().saturating_sub(5);
    if more > 0 {
        format!("{} and {more} more", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

pub type Result<T, E = RiskError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceType {
    Cpu,
    Memory,
    Network,
    Storage,
}

impl fmt::Display for ResourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResourceType::Cpu => "cpu",
            ResourceType::Memory => "memory",
            ResourceType::Network => "network",
            ResourceType::Storage => "storage",
        })
    }
}

impl FromStr for ResourceType {
    type Err = RiskError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cpu" => Ok(ResourceType::Cpu),
            "memory" | "mem" => Ok(ResourceType::Memory),
            "network" | "net" => Ok(ResourceType::Network),
            "storage" | "disk" => Ok(ResourceType::Storage),
            _ => Err(RiskError::UnknownResource(s.to_string())),
        }
    }
}

/// Aligned P, D and U curves of one resource, with `U ≤ D` and `U ≤ P` throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTrace {
    resource: ResourceType,
    provisioned: StepCurve,
    demanded: StepCurve,
    used: StepCurve,
    /// `(start, end, [P, D, U])` over the union of breakpoints.
    segments: Vec<traces::Segment<3>>,
}

fn exceeds(a: f64, b: f64) -> bool {
    a > b + BOUND_EPS * b.abs().max(1.0)
}

impl RiskTrace {
    pub fn new(resource: ResourceType, provisioned: StepCurve, demanded: StepCurve, used: StepCurve) -> Result<Self> {
        let segments = traces::zip_segments([&provisioned, &demanded, &used])?;
        for (constraint, bound) in [("U <= D", 1), ("U <= P", 0)] {
            let bad: Vec<(f64, f64)> = segments
                .iter()
                .filter(|s| exceeds(s.values[2], s.values[bound]))
                .map(|s| (s.start, s.end))
                .collect();
            if !bad.is_empty() {
                return Err(RiskError::Violation { constraint, segments: bad });
            }
        }
        Ok(Self { resource, provisioned, demanded, used, segments })
    }

    pub fn resource(&self) -> ResourceType {
        self.resource
    }

    pub fn provisioned(&self) -> &StepCurve {
        &self.provisioned
    }

    pub fn demanded(&self) -> &StepCurve {
        &self.demanded
    }

    pub fn used(&self) -> &StepCurve {
        &self.used
    }

    /// Wall-clock horizon length.
    pub fn duration(&self) -> f64 {
        self.provisioned.duration()
    }

    fn provision_integrands(&self) -> Result<Vec<(f64, f64)>> {
        self.segments
            .iter()
            .map(|s| {
                let (p, d) = (s.values[0], s.values[1]);
                if p <= 0.0 {
                    return Err(RiskError::DegenerateProvision { start: s.start, end: s.end });
                }
                Ok((s.length(), (p - d) / p))
            })
            .collect()
    }
}

/// Provision risk `(r_p, unclamped)`: the per-instant gap `(P − D) / P` is clamped to
/// `[−1, 1]` before averaging; the unclamped average is returned alongside.
pub fn provision_risk(trace: &RiskTrace) -> Result<(f64, f64)> {
    let t = trace.duration();
    let parts = trace.provision_integrands()?;
    let clamped = time_average(parts.iter().map(|(len, v)| len * v.clamp(-1.0, 1.0)), t, (-1.0, 1.0));
    let raw = time_average(parts.iter().map(|(len, v)| len * v), t, (f64::NEG_INFINITY, f64::INFINITY));
    Ok((clamped, raw))
}

/// Rounding in the segment lengths can push an average an ulp past its range.
fn time_average(weighted: impl Iterator<Item = f64>, t: f64, (lo, hi): (f64, f64)) -> f64 {
    (weighted.fold(0.0, |acc, x| acc + x) / t).clamp(lo, hi)
}

/// Time average of the clamped gap magnitude `|P − D| / P`.
pub fn provision_severity(trace: &RiskTrace) -> Result<f64> {
    let t = trace.duration();
    Ok(time_average(trace.provision_integrands()?.iter().map(|(len, v)| len * v.abs().min(1.0)), t, (0.0, 1.0)))
}

/// Contention risk; idle stretches (`D = 0`) contribute nothing.
pub fn contention_risk(trace: &RiskTrace) -> f64 {
    let weighted = trace.segments.iter().map(|s| {
        let (d, u) = (s.values[1], s.values[2]);
        if d <= 0.0 {
            0.0
        } else {
            s.length() * ((d - u) / d).max(0.0)
        }
    });
    time_average(weighted, trace.duration(), (0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RiskWeightsRepr")]
pub struct RiskWeights {
    pub w_p: f64,
    pub w_c: f64,
}

#[derive(Deserialize)]
struct RiskWeightsRepr {
    w_p: f64,
    w_c: f64,
}

impl TryFrom<RiskWeightsRepr> for RiskWeights {
    type Error = RiskError;

    fn try_from(r: RiskWeightsRepr) -> Result<Self> {
        RiskWeights::new(r.w_p, r.w_c)
    }
}

impl Default for RiskWeights {
    fn default() -> Self {
        Self { w_p: 0.5, w_c: 0.5 }
    }
}

impl RiskWeights {
    pub fn new(w_p: f64, w_c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w_p) || !(0.0..=1.0).contains(&w_c) {
            return Err(RiskError::InvalidWeights(format!("weights must lie in [0, 1], got {w_p} and {w_c}")));
        }
        if (w_p + w_c - 1.0).abs() > 1e-9 {
            return Err(RiskError::InvalidWeights(format!("w_p + w_c must be 1, got {}", w_p + w_c)));
        }
        Ok(Self { w_p, w_c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceRisk {
    pub resource: ResourceType,
    /// Clamped provision risk, in `[−1, 1]`.
    pub r_p: f64,
    pub r_p_unclamped: f64,
    /// Time average of the clamped gap magnitude; equals `|r_p|` unless the trace
    /// switches between under- and over-provisioning.
    pub r_p_abs: f64,
    pub r_c: f64,
    /// `w_p · r_p_abs + w_c · r_c`.
    pub r_e: f64,
    pub weights: RiskWeights,
}

pub fn service_risk(trace: &RiskTrace, weights: RiskWeights) -> Result<ServiceRisk> {
    let (r_p, r_p_unclamped) = provision_risk(trace)?;
    let r_p_abs = provision_severity(trace)?;
    let r_c = contention_risk(trace);
    Ok(ServiceRisk {
        resource: trace.resource,
        r_p,
        r_p_unclamped,
        r_p_abs,
        r_c,
        r_e: (weights.w_p * r_p_abs + weights.w_c * r_c).clamp(0.0, 1.0),
        weights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMethod {
    Iqr,
    Quantile(f64),
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemRisk {
    pub method: AggregationMethod,
    pub value: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Quantile of ascending `sorted` values, interpolating between closest ranks.
pub fn quantile(sorted: &[f64], q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(RiskError::InvalidQuantile(q));
    }
    let n = sorted.len();
    if n == 0 {
        return Err(RiskError::NoData);
    }
    let h = n as f64 * q + 0.5;
    if h <= 1.0 {
        return Ok(sorted[0]);
    }
    if h >= n as f64 {
        return Ok(sorted[n - 1]);
    }
    let k = h.floor() as usize;
    let frac = h - k as f64;
    Ok(sorted[k - 1] + frac * (sorted[k] - sorted[k - 1]))
}

pub fn system_risk(risks: &[f64], method: AggregationMethod) -> Result<SystemRisk> {
    if risks.is_empty() {
        return Err(RiskError::NoData);
    }
    let mut sorted = risks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let value = match method {
        AggregationMethod::Iqr => quantile(&sorted, 0.75)? - quantile(&sorted, 0.25)?,
        AggregationMethod::Quantile(q) => quantile(&sorted, q)?,
        AggregationMethod::Mean => sorted.iter().sum::<f64>() / sorted.len() as f64,
    };
    Ok(SystemRisk { method, value, min: sorted[0], max: sorted[sorted.len() - 1], count: sorted.len() })
}

/// Aggregates service risks separately per resource type.
pub fn system_risk_by_resource(
    risks: &[ServiceRisk],
    method: AggregationMethod,
) -> Result<BTreeMap<ResourceType, SystemRisk>> {
    let mut groups: BTreeMap<ResourceType, Vec<f64>> = BTreeMap::new();
    for r in risks {
        groups.entry(r.resource).or_default().push(r.r_e);
    }
    if groups.is_empty() {
        return Err(RiskError::NoData);
    }
    groups.into_iter().map(|(k, v)| Ok((k, system_risk(&v, method)?))).collect()
}

/// Reads `time,provisioned,demanded,used[,resource]` rows, one trace per resource in
/// order of first appearance. Each resource's last row marks its horizon end.
pub fn read_risk_traces<R: Read>(reader: R, default_resource: ResourceType) -> Result<Vec<RiskTrace>> {
    let table = csvio::read_table(reader)?;
    let time = table.column("time")?;
    let cols = [table.column("provisioned")?, table.column("demanded")?, table.column("used")?];
    let resource_col = table.optional_column("resource");
    let mut order: Vec<ResourceType> = Vec::new();
    let mut groups: BTreeMap<ResourceType, Vec<&csvio::Row>> = BTreeMap::new();
    for row in &table.rows {
        let resource = match resource_col {
            Some(idx) => row.text(idx).parse().map_err(|_| TraceError::Parse {
                line: row.line,
                message: format!("unknown resource type `{}`", row.text(idx)),
            })?,
            None => default_resource,
        };
        if !groups.contains_key(&resource) {
            order.push(resource);
        }
        groups.entry(resource).or_default().push(row);
    }
    let mut out = Vec::with_capacity(order.len());
    for resource in order {
        let rows = &groups[&resource];
        let (mut c, horizon) = csvio::sampled_columns(
            rows,
            time,
            &[(cols[0], "provisioned"), (cols[1], "demanded"), (cols[2], "used")],
        )?;
        let used = StepCurve::from_samples(&c.pop().unwrap(), horizon)?;
        let demanded = StepCurve::from_samples(&c.pop().unwrap(), horizon)?;
        let provisioned = StepCurve::from_samples(&c.pop().unwrap(), horizon)?;
        out.push(RiskTrace::new(resource, provisioned, demanded, used)?);
    }
    if out.is_empty() {
        return Err(TraceError::Parse { line: table.header_line, message: "no rows".into() }.into());
    }
    Ok(out)
}

/// Writes traces in the format read by [`read_risk_traces`], one block per trace,
/// each ending with a horizon row.
pub fn write_risk_traces<W: std::io::Write>(mut out: W, traces: &[RiskTrace]) -> std::io::Result<()> {
    writeln!(out, "time,provisioned,demanded,used,resource")?;
    for t in traces {
        for s in &t.segments {
            writeln!(out, "{},{},{},{},{}", s.start, s.values[0], s.values[1], s.values[2], t.resource)?;
        }
        if let Some(last) = t.segments.last() {
            writeln!(out, "{},{},{},{},{}", last.end, last.values[0], last.values[1], last.values[2], t.resource)?;
        }
    }
    Ok(())
}
