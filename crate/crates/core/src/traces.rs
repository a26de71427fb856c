//! Piecewise-constant time series.
//!
//! A [`StepCurve`] is right-continuous: its value at `t` is the value of the latest
//! breakpoint at or before `t`, held until the next breakpoint or the horizon end.
//! Every operation in this module walks the union of breakpoints of its inputs, so
//! results carry no discretization error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used when deciding whether two horizons coincide.
const ALIGN_REL_EPS: f64 = 1e-9;

/// Tolerance used when checking that a value is an integral number of scaling units.
const UNIT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("interval [{t0}, {t1}] outside horizon [{start}, {end}]")]
    Range { t0: f64, t1: f64, start: f64, end: f64 },
    #[error("curves not aligned: [{a_start}, {a_end}] vs [{b_start}, {b_end}]")]
    Alignment { a_start: f64, a_end: f64, b_start: f64, b_end: f64 },
    #[error("value {value} at t={time} is not an integral multiple of scaling unit {unit}")]
    Unit { time: f64, value: f64, unit: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid curve: {0}")]
    Invalid(String),
}

pub type Result<T, E = TraceError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub time: f64,
    pub value: f64,
}

/// Right-continuous piecewise-constant function on `[start_time, horizon_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepCurveRepr")]
pub struct StepCurve {
    breakpoints: Vec<Breakpoint>,
    horizon_end: f64,
}

#[derive(Deserialize)]
struct StepCurveRepr {
    breakpoints: Vec<Breakpoint>,
    horizon_end: f64,
}

impl TryFrom<StepCurveRepr> for StepCurve {
    type Error = TraceError;

    fn try_from(repr: StepCurveRepr) -> Result<Self> {
        let points = repr.breakpoints.iter().map(|b| (b.time, b.value)).collect();
        StepCurve::new(points, repr.horizon_end)
    }
}

impl StepCurve {
    /// Builds a curve from `(time, value)` breakpoints. The first breakpoint time is the
    /// start of the curve.
    pub fn new(breakpoints: Vec<(f64, f64)>, horizon_end: f64) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(TraceError::Invalid("no breakpoints".into()));
        }
        if !horizon_end.is_finite() {
            return Err(TraceError::Invalid(format!("horizon end {horizon_end} is not finite")));
        }
        for (i, &(time, value)) in breakpoints.iter().enumerate() {
            if !time.is_finite() || !value.is_finite() {
                return Err(TraceError::Invalid(format!("breakpoint {i} is not finite")));
            }
            if value < 0.0 {
                return Err(TraceError::Invalid(format!("negative value {value} at t={time}")));
            }
            if i > 0 && time <= breakpoints[i - 1].0 {
                return Err(TraceError::Invalid(format!(
                    "breakpoint times not strictly increasing at t={time}"
                )));
            }
        }
        let start = breakpoints[0].0;
        let last = breakpoints[breakpoints.len() - 1].0;
        if horizon_end <= start {
            return Err(TraceError::Invalid(format!(
                "horizon end {horizon_end} not after start {start}"
            )));
        }
        if last >= horizon_end {
            return Err(TraceError::Invalid(format!(
                "breakpoint at t={last} not before horizon end {horizon_end}"
            )));
        }
        Ok(Self {
            breakpoints: breakpoints.into_iter().map(|(time, value)| Breakpoint { time, value }).collect(),
            horizon_end,
        })
    }

    pub fn constant(value: f64, start: f64, horizon_end: f64) -> Result<Self> {
        Self::new(vec![(start, value)], horizon_end)
    }

    /// Sample-and-hold ingestion: each sample's value holds until the next sample.
    ///
    /// Unlike [`StepCurve::new`], ordering problems are reported as parse errors that
    /// name the offending sample (1-based).
    pub fn from_samples(samples: &[(f64, f64)], horizon_end: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(TraceError::Parse { line: 0, message: "no samples".into() });
        }
        for (i, pair) in samples.windows(2).enumerate() {
            if pair[1].0 <= pair[0].0 {
                let kind = if pair[1].0 == pair[0].0 { "duplicate" } else { "unsorted" };
                return Err(TraceError::Parse {
                    line: i + 2,
                    message: format!("{kind} timestamp {}", pair[1].0),
                });
            }
        }
        for (i, &(_, v)) in samples.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(TraceError::Parse { line: i + 1, message: format!("invalid value {v}") });
            }
        }
        Self::new(samples.to_vec(), horizon_end)
    }

    pub fn start_time(&self) -> f64 {
        self.breakpoints[0].time
    }

    pub fn horizon_end(&self) -> f64 {
        self.horizon_end
    }

    pub fn duration(&self) -> f64 {
        self.horizon_end - self.start_time()
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    /// Value at `t`, or `None` outside `[start, horizon_end]`.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if t < self.start_time() || t > self.horizon_end {
            return None;
        }
        let idx = self.breakpoints.partition_point(|b| b.time <= t);
        Some(self.breakpoints[idx - 1].value)
    }

    /// Iterates `(start, end, value)` for every constant piece.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints.iter().enumerate().map(move |(i, b)| {
            let end = self.breakpoints.get(i + 1).map_or(self.horizon_end, |n| n.time);
            (b.time, end, b.value)
        })
    }

    pub fn max_value(&self) -> f64 {
        self.breakpoints.iter().map(|b| b.value).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.breakpoints.iter().map(|b| b.value).fold(f64::INFINITY, f64::min)
    }

    /// Exact integral over `[t0, t1]`.
    pub fn integrate(&self, t0: f64, t1: f64) -> Result<f64> {
        if !(t0 >= self.start_time() && t0 <= t1 && t1 <= self.horizon_end) {
            return Err(TraceError::Range {
                t0,
                t1,
                start: self.start_time(),
                end: self.horizon_end,
            });
        }
        Ok(self
            .segments()
            .map(|(s, e, v)| {
                let lo = s.max(t0);
                let hi = e.min(t1);
                if hi > lo {
                    (hi - lo) * v
                } else {
                    0.0
                }
            })
            .sum())
    }

    /// Integral over the whole horizon.
    pub fn total(&self) -> f64 {
        self.segments().map(|(s, e, v)| (e - s) * v).sum()
    }

    /// Drops breakpoints that repeat the previous value.
    pub fn simplified(&self) -> StepCurve {
        let mut breakpoints: Vec<Breakpoint> = Vec::with_capacity(self.breakpoints.len());
        for b in &self.breakpoints {
            if breakpoints.last().map_or(true, |last| last.value != b.value) {
                breakpoints.push(*b);
            }
        }
        StepCurve { breakpoints, horizon_end: self.horizon_end }
    }

    /// Applies `f` to every value. The result must stay non-negative.
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Result<StepCurve> {
        let points = self.breakpoints.iter().map(|b| (b.time, f(b.value))).collect();
        StepCurve::new(points, self.horizon_end)
    }

    /// Same shape moved by `dt` seconds.
    pub fn shifted(&self, dt: f64) -> Result<StepCurve> {
        let points = self.breakpoints.iter().map(|b| (b.time + dt, b.value)).collect();
        StepCurve::new(points, self.horizon_end + dt)
    }

    /// Same shape with every time multiplied by `factor` (> 0).
    pub fn time_scaled(&self, factor: f64) -> Result<StepCurve> {
        if !(factor > 0.0) {
            return Err(TraceError::Invalid(format!("time scale factor {factor} must be positive")));
        }
        let points = self.breakpoints.iter().map(|b| (b.time * factor, b.value)).collect();
        StepCurve::new(points, self.horizon_end * factor)
    }
}

fn times_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= ALIGN_REL_EPS * a.abs().max(b.abs()).max(1.0)
}

/// Fails unless `a` and `b` cover the same `[start, horizon_end]`.
pub fn check_aligned(a: &StepCurve, b: &StepCurve) -> Result<()> {
    if times_match(a.start_time(), b.start_time()) && times_match(a.horizon_end(), b.horizon_end()) {
        Ok(())
    } else {
        Err(TraceError::Alignment {
            a_start: a.start_time(),
            a_end: a.horizon_end(),
            b_start: b.start_time(),
            b_end: b.horizon_end(),
        })
    }
}

/// A maximal interval on which every zipped curve is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<const N: usize> {
    pub start: f64,
    pub end: f64,
    pub values: [f64; N],
}

impl<const N: usize> Segment<N> {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// Splits the shared horizon at the union of all breakpoints. Segments of zero length
/// are skipped, so coincident breakpoints never contribute.
pub fn zip_segments<const N: usize>(curves: [&StepCurve; N]) -> Result<Vec<Segment<N>>> {
    assert!(N > 0, "zip_segments needs at least one curve");
    for c in &curves[1..] {
        check_aligned(curves[0], c)?;
    }
    let horizon = curves[0].horizon_end();
    let mut idx = [0usize; N];
    let mut t = curves[0].start_time();
    let capacity = curves.iter().map(|c| c.breakpoints.len()).sum();
    let mut out = Vec::with_capacity(capacity);
    loop {
        let next = curves
            .iter()
            .zip(idx.iter())
            .filter_map(|(c, &i)| c.breakpoints.get(i + 1).map(|b| b.time))
            .fold(horizon, f64::min);
        let values = std::array::from_fn(|k| curves[k].breakpoints[idx[k]].value);
        if next > t {
            out.push(Segment { start: t, end: next, values });
        }
        if next >= horizon {
            break;
        }
        for (c, i) in curves.iter().zip(idx.iter_mut()) {
            while c.breakpoints.get(*i + 1).is_some_and(|b| b.time <= next) {
                *i += 1;
            }
        }
        t = next;
    }
    Ok(out)
}

/// Exact `∫ max(a(t) - b(t), 0) dt` over the shared horizon.
pub fn positive_area_between(a: &StepCurve, b: &StepCurve) -> Result<f64> {
    Ok(zip_segments([a, b])?
        .iter()
        .map(|s| (s.values[0] - s.values[1]).max(0.0) * s.length())
        .fold(0.0, |acc, x| acc + x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Greater,
    Less,
    Equal,
}

/// Total time during which `a <relation> b` holds.
pub fn duration_where(a: &StepCurve, b: &StepCurve, relation: Relation) -> Result<f64> {
    Ok(zip_segments([a, b])?
        .iter()
        .filter(|s| {
            let (x, y) = (s.values[0], s.values[1]);
            match relation {
                Relation::Greater => x > y,
                Relation::Less => x < y,
                Relation::Equal => x == y,
            }
        })
        .map(Segment::length)
        .fold(0.0, |acc, x| acc + x))
}

/// Number of single-unit adaptations: `Σ |Δvalue| / unit` over all breakpoints after the
/// first. Every value must be an integral multiple of `unit`.
pub fn count_unit_changes(curve: &StepCurve, unit: f64) -> Result<u64> {
    if !(unit > 0.0) || !unit.is_finite() {
        return Err(TraceError::Invalid(format!("scaling unit {unit} must be positive")));
    }
    let mut prev: Option<i64> = None;
    let mut changes = 0u64;
    for b in curve.breakpoints() {
        let units = b.value / unit;
        let rounded = units.round();
        if (units - rounded).abs() > UNIT_EPS * rounded.abs().max(1.0) {
            return Err(TraceError::Unit { time: b.time, value: b.value, unit });
        }
        let rounded = rounded as i64;
        if let Some(p) = prev {
            changes += rounded.abs_diff(p);
        }
        prev = Some(rounded);
    }
    Ok(changes)
}

/// A demand curve and a supply curve over the same horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurvePairRepr")]
pub struct CurvePair {
    demand: StepCurve,
    supply: StepCurve,
}

#[derive(Deserialize)]
struct CurvePairRepr {
    demand: StepCurve,
    supply: StepCurve,
}

impl TryFrom<CurvePairRepr> for CurvePair {
    type Error = TraceError;

    fn try_from(repr: CurvePairRepr) -> Result<Self> {
        CurvePair::new(repr.demand, repr.supply)
    }
}

impl CurvePair {
    pub fn new(demand: StepCurve, supply: StepCurve) -> Result<Self> {
        check_aligned(&demand, &supply)?;
        Ok(Self { demand, supply })
    }

    pub fn demand(&self) -> &StepCurve {
        &self.demand
    }

    pub fn supply(&self) -> &StepCurve {
        &self.supply
    }

    /// Measurement period `T` in seconds.
    pub fn duration(&self) -> f64 {
        self.demand.duration()
    }
}

/// Reads a `time,demand,supply` trace file.
pub fn read_curve_pair<R: std::io::Read>(reader: R) -> Result<CurvePair> {
    let table = crate::csvio::read_table(reader)?;
    let idx = table.expect_columns(&["time", "demand", "supply"])?;
    let rows: Vec<_> = table.rows.iter().collect();
    let (mut cols, horizon) =
        crate::csvio::sampled_columns(&rows, idx[0], &[(idx[1], "demand"), (idx[2], "supply")])?;
    let supply = StepCurve::from_samples(&cols.pop().unwrap(), horizon)?;
    let demand = StepCurve::from_samples(&cols.pop().unwrap(), horizon)?;
    CurvePair::new(demand, supply)
}

/// Reads a single-curve `time,value` file.
pub fn read_curve<R: std::io::Read>(reader: R) -> Result<StepCurve> {
    let table = crate::csvio::read_table(reader)?;
    let idx = table.expect_columns(&["time", "value"])?;
    let rows: Vec<_> = table.rows.iter().collect();
    let (mut cols, horizon) = crate::csvio::sampled_columns(&rows, idx[0], &[(idx[1], "value")])?;
    StepCurve::from_samples(&cols.pop().unwrap(), horizon)
}

/// Writes a pair in the `time,demand,supply` format, ending with a horizon row.
pub fn write_curve_pair<W: std::io::Write>(mut out: W, pair: &CurvePair) -> std::io::Result<()> {
    writeln!(out, "time,demand,supply")?;
    let segments = zip_segments([pair.demand(), pair.supply()]).map_err(std::io::Error::other)?;
    for s in &segments {
        writeln!(out, "{},{},{}", s.start, s.values[0], s.values[1])?;
    }
    let last = segments.last().expect("non-empty horizon");
    writeln!(out, "{},{},{}", pair.demand().horizon_end(), last.values[0], last.values[1])
}

pub fn write_curve<W: std::io::Write>(mut out: W, curve: &StepCurve) -> std::io::Result<()> {
    writeln!(out, "time,value")?;
    for b in curve.breakpoints() {
        writeln!(out, "{},{}", b.time, b.value)?;
    }
    let last = curve.breakpoints().last().expect("non-empty curve");
    writeln!(out, "{},{}", curve.horizon_end(), last.value)
}
