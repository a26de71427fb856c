//! Isolation curves and the workload-ratio metrics derived from them.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{IsolationError, Measured, QoSImpact, QoSObservation, Result, WorkloadSet};
use crate::csvio;
use crate::traces::TraceError;

/// Fraction of `W_a_ref` below which the abiding load counts as driven to zero.
pub const END_FRACTION: f64 = 0.005;

/// Slack within which a ratio metric is snapped onto `[0, 1]`.
const CLAMP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    #[serde(rename = "W_d")]
    pub w_d: f64,
    #[serde(rename = "W_a")]
    pub w_a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMarks {
    #[serde(rename = "W_d_ref")]
    pub w_d_ref: f64,
    #[serde(rename = "W_d_base")]
    pub w_d_base: f64,
    #[serde(rename = "W_a_ref")]
    pub w_a_ref: f64,
    #[serde(rename = "W_d_end", default, skip_serializing_if = "Option::is_none")]
    pub w_d_end: Option<f64>,
    #[serde(rename = "W_a_base", default, skip_serializing_if = "Option::is_none")]
    pub w_a_base: Option<f64>,
}

impl ReferenceMarks {
    /// Marks for a reference point; `W_d_base` follows as `W_d_ref + W_a_ref`.
    pub fn from_reference(w_d_ref: f64, w_a_ref: f64) -> Self {
        Self { w_d_ref, w_d_base: w_d_ref + w_a_ref, w_a_ref, w_d_end: None, w_a_base: None }
    }
}

/// Measured `(W_d, W_a)` points at constant QoS plus their reference marks. Between
/// points the curve is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IsolationCurveRepr")]
pub struct IsolationCurve {
    points: Vec<CurvePoint>,
    marks: ReferenceMarks,
}

#[derive(Deserialize)]
struct IsolationCurveRepr {
    points: Vec<CurvePoint>,
    marks: ReferenceMarks,
}

impl TryFrom<IsolationCurveRepr> for IsolationCurve {
    type Error = IsolationError;

    fn try_from(r: IsolationCurveRepr) -> Result<Self> {
        IsolationCurve::new(r.points, r.marks)
    }
}

fn invalid(msg: impl Into<String>) -> IsolationError {
    IsolationError::InvalidCurve(msg.into())
}

impl IsolationCurve {
    /// Validates the points and marks. Missing `W_d_end` is taken from the first point
    /// whose abiding load is below [`END_FRACTION`] of `W_a_ref`; missing `W_a_base`
    /// is interpolated when `W_d_base` lies within the measured range.
    pub fn new(points: Vec<CurvePoint>, mut marks: ReferenceMarks) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("no points"));
        }
        for p in &points {
            if !p.w_d.is_finite() || !p.w_a.is_finite() || p.w_a < 0.0 || p.w_d < 0.0 {
                return Err(invalid(format!("invalid point ({}, {})", p.w_d, p.w_a)));
            }
        }
        for w in points.windows(2) {
            if w[1].w_d <= w[0].w_d {
                return Err(invalid(format!("W_d not strictly increasing at {}", w[1].w_d)));
            }
            if w[1].w_a > w[0].w_a {
                return Err(invalid(format!("W_a increases at W_d = {}", w[1].w_d)));
            }
        }
        let m = marks;
        if !(m.w_a_ref > 0.0) || !m.w_a_ref.is_finite() || !m.w_d_ref.is_finite() || m.w_d_ref < 0.0 {
            return Err(invalid(format!("W_a_ref must be positive and W_d_ref non-negative, got {} and {}", m.w_a_ref, m.w_d_ref)));
        }
        let gap = (m.w_d_base - m.w_d_ref) - m.w_a_ref;
        if gap.abs() > 1e-9 * m.w_d_base.abs().max(1.0) {
            return Err(invalid(format!(
                "W_a_ref ({}) must equal W_d_base - W_d_ref ({})",
                m.w_a_ref,
                m.w_d_base - m.w_d_ref
            )));
        }
        let mut curve = Self { points, marks };
        if marks.w_d_end.is_none() {
            let limit = END_FRACTION * m.w_a_ref;
            marks.w_d_end = curve.points.iter().find(|p| p.w_a <= limit).map(|p| p.w_d);
        }
        if marks.w_a_base.is_none() {
            marks.w_a_base = curve.f_m(m.w_d_base);
        }
        curve.marks = marks;
        Ok(curve)
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn marks(&self) -> &ReferenceMarks {
        &self.marks
    }

    fn first(&self) -> CurvePoint {
        self.points[0]
    }

    fn last(&self) -> CurvePoint {
        self.points[self.points.len() - 1]
    }

    fn reaches_zero(&self) -> bool {
        self.last().w_a <= END_FRACTION * self.marks.w_a_ref
    }

    fn span_eps(&self) -> f64 {
        1e-9 * self.last().w_d.abs().max(1.0)
    }

    /// Linear interpolant of the measured points; `None` outside their range.
    pub fn f_m(&self, w_d: f64) -> Option<f64> {
        let eps = self.span_eps();
        if w_d < self.first().w_d - eps || w_d > self.last().w_d + eps {
            return None;
        }
        let idx = self.points.partition_point(|p| p.w_d < w_d);
        if idx == 0 {
            return Some(self.first().w_a);
        }
        if idx == self.points.len() {
            return Some(self.last().w_a);
        }
        let (a, b) = (self.points[idx - 1], self.points[idx]);
        Some(a.w_a + (b.w_a - a.w_a) * (w_d - a.w_d) / (b.w_d - a.w_d))
    }

    /// Exact integral of the interpolant over `[lo, hi]`. Beyond its last point a curve
    /// that has reached zero is continued at zero; otherwise the range must be covered.
    pub fn integral(&self, lo: f64, hi: f64) -> Option<f64> {
        let eps = self.span_eps();
        if lo < self.first().w_d - eps || hi < lo {
            return None;
        }
        let mut end = hi;
        if hi > self.last().w_d + eps {
            if !self.reaches_zero() {
                return None;
            }
            end = self.last().w_d;
        }
        let lo = lo.max(self.first().w_d);
        let end = end.min(self.last().w_d);
        if end <= lo {
            return Some(0.0);
        }
        let mut area = 0.0;
        for w in self.points.windows(2) {
            let (a, b) = (w[0].w_d.max(lo), w[1].w_d.min(end));
            if b <= a {
                continue;
            }
            let fa = self.f_m(a).expect("inside range");
            let fb = self.f_m(b).expect("inside range");
            area += 0.5 * (fa + fb) * (b - a);
        }
        Some(area)
    }

    /// Writes the points as `W_d,W_a` rows.
    pub fn write_points<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| IsolationError::Trace(TraceError::Invalid(e.to_string()));
        w.write_record(["W_d", "W_a"]).map_err(io)?;
        for p in &self.points {
            w.write_record([p.w_d.to_string(), p.w_a.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| IsolationError::Trace(TraceError::Invalid(e.to_string())))?;
        Ok(())
    }

    /// Reads `W_d,W_a` rows and a JSON sidecar with the reference marks.
    pub fn read<R: Read, S: Read>(points: R, sidecar: S) -> Result<Self> {
        let marks: ReferenceMarks =
            serde_json::from_reader(sidecar).map_err(|e| IsolationError::Json(e.to_string()))?;
        let points = read_points(points)?;
        Self::new(points, marks)
    }
}

/// Parses `W_d,W_a` rows.
pub fn read_points<R: Read>(reader: R) -> Result<Vec<CurvePoint>> {
    let table = csvio::read_table(reader)?;
    let cols = table.expect_columns(&["w_d", "w_a"])?;
    let mut points = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let w_d = row.number(cols[0], "W_d")?;
        let w_a = row.number(cols[1], "W_a")?;
        if let Some(prev) = points.last().map(|p: &CurvePoint| p.w_d) {
            if w_d <= prev {
                return Err(TraceError::Parse { line: row.line, message: format!("W_d not increasing at {w_d}") }.into());
            }
        }
        points.push(CurvePoint { w_d, w_a });
    }
    Ok(points)
}

fn snap_unit_interval(metric: &str, v: f64) -> f64 {
    if (-CLAMP_EPS..0.0).contains(&v) {
        0.0
    } else if v > 1.0 && v <= 1.0 + CLAMP_EPS {
        1.0
    } else {
        if v < -END_FRACTION || v > 1.0 + END_FRACTION {
            log::warn!("{metric} = {v} lies outside [0, 1]; the curve leaves the isolation bounds");
        } else if !(0.0..=1.0).contains(&v) {
            log::debug!("{metric} = {v} lies outside [0, 1] by less than the search tolerance");
        }
        v
    }
}

/// `(W_d_end - W_d_base) / W_a_ref`.
pub fn i_end(curve: &IsolationCurve) -> Measured {
    let m = curve.marks();
    match m.w_d_end {
        Some(end) => Measured::Value((end - m.w_d_base) / m.w_a_ref),
        None => Measured::not_measurable("abiding load never reaches zero within the measured levels"),
    }
}

/// `W_a_base / W_a_ref`.
pub fn i_base(curve: &IsolationCurve) -> Measured {
    let m = curve.marks();
    match m.w_a_base {
        Some(base) => Measured::Value(snap_unit_interval("I_base", base / m.w_a_ref)),
        None => Measured::not_measurable(format!("W_d_base = {} lies outside the measured range", m.w_d_base)),
    }
}

/// Area under the curve over `[W_d_ref, W_d_base]`, scaled so the non-isolated
/// diagonal gives 0 and a flat curve gives 1.
pub fn i_int_base(curve: &IsolationCurve) -> Measured {
    let m = curve.marks();
    let half = m.w_a_ref * m.w_a_ref / 2.0;
    match curve.integral(m.w_d_ref, m.w_d_base) {
        Some(area) => Measured::Value(snap_unit_interval("I_intBase", (area - half) / half)),
        None => Measured::not_measurable(format!("curve does not span [{}, {}]", m.w_d_ref, m.w_d_base)),
    }
}

/// Like [`i_int_base`] over `[W_d_ref, p_end]`, normalized against a flat curve on
/// that interval.
pub fn i_int_free(curve: &IsolationCurve, p_end: f64) -> Result<Measured> {
    let m = curve.marks();
    if !(p_end > m.w_d_ref) || !p_end.is_finite() {
        return Err(IsolationError::Parameter(format!("p_end ({p_end}) must exceed W_d_ref ({})", m.w_d_ref)));
    }
    let half = m.w_a_ref * m.w_a_ref / 2.0;
    let denom = m.w_a_ref * (p_end - m.w_d_ref) - half;
    if denom.abs() <= 1e-12 * half {
        return Err(IsolationError::Parameter(format!("p_end = {p_end} makes the normalization zero")));
    }
    Ok(match curve.integral(m.w_d_ref, p_end) {
        Some(area) => Measured::Value(snap_unit_interval("I_intFree", (area - half) / denom)),
        None => Measured::not_measurable(format!("curve does not span [{}, {p_end}]", m.w_d_ref)),
    })
}

/// All isolation metrics of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationReport {
    pub i_qos: Vec<f64>,
    pub i_avg: Measured,
    pub i_end: Measured,
    pub i_base: Measured,
    pub i_int_base: Measured,
    pub i_int_free: Measured,
}

impl IsolationReport {
    /// `p_end` defaults to the highest measured disruptive load; a default that gives a
    /// degenerate normalization yields a marker, an explicit one an error.
    pub fn new(curve: &IsolationCurve, p_end: Option<f64>, qos: Option<&QoSImpact>) -> Result<Self> {
        let i_int_free = match p_end {
            Some(p) => i_int_free(curve, p)?,
            None => i_int_free(curve, curve.last().w_d)
                .unwrap_or_else(|e| Measured::not_measurable(format!("default p_end unusable: {e}"))),
        };
        Ok(Self {
            i_qos: qos.map(|q| q.i_qos.clone()).unwrap_or_default(),
            i_avg: qos.map_or_else(|| Measured::not_measurable("no QoS observations"), |q| Measured::Value(q.i_avg)),
            i_end: i_end(curve),
            i_base: i_base(curve),
            i_int_base: i_int_base(curve),
            i_int_free,
        })
    }
}

/// A multi-tenant system that can be observed under arbitrary workloads.
pub trait TenantSystem {
    fn observe(&mut self, workloads: &WorkloadSet) -> Result<QoSObservation>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveSearchConfig {
    /// Binary-search tolerance as a fraction of `W_a_ref`.
    pub tolerance_fraction: f64,
}

impl Default for CurveSearchConfig {
    fn default() -> Self {
        Self { tolerance_fraction: END_FRACTION }
    }
}

fn all_tenants_meet(obs: &QoSObservation, target: f64) -> bool {
    obs.qos.values().all(|z| matches!(z, Some(z) if *z <= target))
}

/// Scales every tenant of `base` by a common factor and returns the largest scaling
/// (within relative `rel_tol`) at which all tenants still meet `qos_target`.
pub fn find_reference_workload<S: TenantSystem + ?Sized>(
    system: &mut S,
    base: &WorkloadSet,
    qos_target: f64,
    rel_tol: f64,
) -> Result<WorkloadSet> {
    if !(base.total() > 0.0) {
        return Err(IsolationError::Setup("base workload is zero".into()));
    }
    if !(rel_tol > 0.0) {
        return Err(IsolationError::Parameter("tolerance must be positive".into()));
    }
    let mut feasible = |f: f64| -> Result<bool> { Ok(all_tenants_meet(&system.observe(&base.scaled(f)?)?, qos_target)) };
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut doublings = 0;
    while feasible(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(IsolationError::Setup("system never saturates".into()));
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        return Err(IsolationError::Setup("no positive workload meets the QoS target".into()));
    }
    base.scaled(lo)
}

/// Measures the isolation curve: for each disruptive level, the maximal total abiding
/// load (capped by the previous level's value) at which all abiding tenants meet
/// `qos_target`. Tenant shares within each group follow `reference`.
pub fn derive_isolation_curve<S: TenantSystem + ?Sized>(
    system: &mut S,
    reference: &WorkloadSet,
    qos_target: f64,
    disruptive_levels: &[f64],
    config: &CurveSearchConfig,
) -> Result<IsolationCurve> {
    let w_d_ref = reference.disruptive_total();
    let w_a_ref = reference.abiding_total();
    if !(w_a_ref > 0.0) {
        return Err(IsolationError::Setup("reference abiding load is zero".into()));
    }
    if !(config.tolerance_fraction > 0.0) {
        return Err(IsolationError::Parameter("tolerance must be positive".into()));
    }
    if !system.observe(reference)?.abiding_meet(qos_target) {
        return Err(IsolationError::Setup(format!("reference workload misses the QoS target {qos_target}")));
    }
    match disruptive_levels.first() {
        Some(first) if (first - w_d_ref).abs() <= 1e-9 * w_d_ref.abs().max(1.0) => {}
        _ => {
            return Err(IsolationError::Setup(format!("disruptive levels must start at W_d_ref = {w_d_ref}")));
        }
    }
    if disruptive_levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(IsolationError::Setup("disruptive levels must be strictly increasing".into()));
    }

    let tol = config.tolerance_fraction * w_a_ref;
    let mut points = Vec::with_capacity(disruptive_levels.len());
    let mut cap = w_a_ref;
    let mut w_d_end = None;
    for &level in disruptive_levels {
        let mut feasible =
            |w_a: f64| -> Result<bool> { Ok(system.observe(&reference.with_totals(w_a, level)?)?.abiding_meet(qos_target)) };
        let w_a = if feasible(cap)? {
            cap
        } else {
            let (mut lo, mut hi) = (0.0, cap);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if feasible(mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        if w_d_end.is_none() && w_a <= tol {
            w_d_end = Some(level);
        }
        cap = w_a;
        points.push(CurvePoint { w_d: level, w_a });
    }
    let marks = ReferenceMarks { w_d_end, ..ReferenceMarks::from_reference(w_d_ref, w_a_ref) };
    IsolationCurve::new(points, marks)
}
