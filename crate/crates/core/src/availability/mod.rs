//! Availability from sample logs, provider SLA availability, SLA adherence and
//! strictness, and the availability-zone failure model.

pub mod failure;
pub mod sla;

use std::io::Read;

use chrono::{DateTime, Datelike, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvio;
use crate::traces::TraceError;

pub use failure::FailureModel;
pub use sla::{
    provider_availability, sla_adherence, strictness, AdherenceInput, AdherenceSummary, Coverage, DeploymentFacts,
    DiscountTier, Precondition, SlaDefinition, StrictnessConfig,
};

/// Relative tolerance on the spacing between consecutive samples.
const SPACING_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AvailabilityError {
    #[error("no samples")]
    NoData,
    #[error("invalid sample log: {0}")]
    InvalidLog(String),
    #[error("invalid SLA definition: {0}")]
    InvalidSla(String),
    #[error("{factor} = {value} lies outside the normalization edges [{low}, {high}]")]
    Normalization { factor: &'static str, value: f64, low: f64, high: f64 },
    #[error("invalid strictness edges for {factor}: low {low} must be below high {high}")]
    InvalidEdges { factor: &'static str, low: f64, high: f64 },
    #[error("downtime periods overlap at t={0}")]
    OverlappingPeriods(f64),
    #[error("invalid failure model: {0}")]
    InvalidModel(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

pub type Result<T, E = AvailabilityError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Seconds since the Unix epoch.
    pub timestamp: f64,
    pub up: bool,
    /// Whether the monitored service was deployed and started.
    #[serde(default = "default_true")]
    pub deployed: bool,
}

fn default_true() -> bool {
    true
}

impl Sample {
    pub fn new(timestamp: f64, up: bool) -> Self {
        Self { timestamp, up, deployed: true }
    }
}

/// Equally spaced availability samples; each covers `interval` seconds from its timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLog {
    interval: f64,
    samples: Vec<Sample>,
}

impl SampleLog {
    pub fn new(samples: Vec<Sample>, interval: f64) -> Result<Self> {
        if !(interval > 0.0) || !interval.is_finite() {
            return Err(AvailabilityError::InvalidLog(format!("sampling interval must be positive, got {interval}")));
        }
        if samples.iter().any(|s| !s.timestamp.is_finite()) {
            return Err(AvailabilityError::InvalidLog("non-finite timestamp".into()));
        }
        for w in samples.windows(2) {
            let gap = w[1].timestamp - w[0].timestamp;
            if gap <= 0.0 {
                return Err(AvailabilityError::InvalidLog(format!(
                    "timestamps not strictly increasing at {}",
                    w[1].timestamp
                )));
            }
            if (gap - interval).abs() > SPACING_TOLERANCE * interval {
                return Err(AvailabilityError::InvalidLog(format!(
                    "sample at {} is {gap} s after its predecessor, expected {interval} s",
                    w[1].timestamp
                )));
            }
        }
        Ok(Self { interval, samples })
    }

    /// Takes the interval from the first gap; a single sample needs [`SampleLog::new`].
    pub fn with_inferred_interval(samples: Vec<Sample>) -> Result<Self> {
        match samples.as_slice() {
            [a, b, ..] => {
                let interval = b.timestamp - a.timestamp;
                Self::new(samples, interval)
            }
            _ => Err(AvailabilityError::InvalidLog("cannot infer the sampling interval from fewer than two samples".into())),
        }
    }

    /// Seconds.
    pub fn interval(&self) -> f64 {
        self.interval
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn start(&self) -> Option<f64> {
        self.samples.first().map(|s| s.timestamp)
    }

    /// End of the last sample's coverage.
    pub fn end(&self) -> Option<f64> {
        self.samples.last().map(|s| s.timestamp + self.interval)
    }
}

/// `(total − unavailable) / total`.
pub fn operational_availability(log: &SampleLog) -> Result<f64> {
    let total = log.samples.len();
    if total == 0 {
        return Err(AvailabilityError::NoData);
    }
    let down = log.samples.iter().filter(|s| !s.up).count();
    Ok((total - down) as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DowntimePeriod {
    /// Timestamp of the first down sample.
    pub start: f64,
    pub length_min: f64,
}

impl DowntimePeriod {
    pub fn end(&self) -> f64 {
        self.start + self.length_min * 60.0
    }
}

fn runs(samples: &[Sample], interval: f64, down: impl Fn(&Sample) -> bool) -> Vec<DowntimePeriod> {
    let mut periods = Vec::new();
    let mut current: Option<(f64, usize)> = None;
    for s in samples {
        match (down(s), current.as_mut()) {
            (true, Some((_, n))) => *n += 1,
            (true, None) => current = Some((s.timestamp, 1)),
            (false, Some(&mut (start, n))) => {
                periods.push(DowntimePeriod { start, length_min: n as f64 * interval / 60.0 });
                current = None;
            }
            (false, None) => {}
        }
    }
    if let Some((start, n)) = current {
        periods.push(DowntimePeriod { start, length_min: n as f64 * interval / 60.0 });
    }
    periods
}

/// Maximal runs of consecutive down samples.
pub fn extract_downtime_periods(log: &SampleLog) -> Vec<DowntimePeriod> {
    runs(&log.samples, log.interval, |s| !s.up)
}

/// How the log is cut into billing windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonthWindows {
    /// UTC calendar months.
    Calendar,
    /// Consecutive windows of fixed length, in minutes, starting at the first sample.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthResult {
    pub label: String,
    pub start: f64,
    pub end: f64,
    pub month_minutes: f64,
    /// Month length, or the deployed running time for running-time SLAs.
    pub denominator_minutes: f64,
    pub periods: Vec<DowntimePeriod>,
    /// Downtime left after quantum filtering.
    pub counted_downtime_min: f64,
    pub availability: f64,
    pub coverage: Coverage,
    pub violated: bool,
}

fn windows(start: f64, end: f64, mode: MonthWindows) -> Result<Vec<(String, f64, f64)>> {
    match mode {
        MonthWindows::Fixed(minutes) => {
            if !(minutes > 0.0) {
                return Err(AvailabilityError::Parameter(format!("window length must be positive, got {minutes}")));
            }
            let len = minutes * 60.0;
            let mut out = Vec::new();
            let mut s = start;
            let mut k = 0;
            while s < end {
                out.push((format!("window-{k}"), s, s + len));
                k += 1;
                s = start + len * f64::from(k);
            }
            Ok(out)
        }
        MonthWindows::Calendar => {
            let first = DateTime::<Utc>::from_timestamp(start.floor() as i64, 0)
                .ok_or_else(|| AvailabilityError::InvalidLog(format!("timestamp {start} out of range")))?;
            let (mut y, mut m) = (first.year(), first.month());
            let mut out = Vec::new();
            loop {
                let month_start = Utc.with_ymd_and_hms(y, m, 1, 0, 0, 0).single().expect("valid month start");
                let (ny, nm) = if m == 12 { (y + 1, 1) } else { (y, m + 1) };
                let next = Utc.with_ymd_and_hms(ny, nm, 1, 0, 0, 0).single().expect("valid month start");
                let (ms, me) = (month_start.timestamp() as f64, next.timestamp() as f64);
                if ms >= end {
                    break;
                }
                out.push((format!("{y:04}-{m:02}"), ms, me));
                (y, m) = (ny, nm);
            }
            Ok(out)
        }
    }
}

/// Provider availability per billing window. Downtime runs are cut at window
/// boundaries before quantum filtering, and only samples taken while the service was
/// deployed count as downtime.
pub fn monthly_results(log: &SampleLog, sla: &SlaDefinition, mode: MonthWindows) -> Result<Vec<MonthResult>> {
    let (Some(start), Some(end)) = (log.start(), log.end()) else {
        return Err(AvailabilityError::NoData);
    };
    let interval_min = log.interval / 60.0;
    let mut results = Vec::new();
    for (label, ws, we) in windows(start, end, mode)? {
        let lo = log.samples.partition_point(|s| s.timestamp < ws);
        let hi = log.samples.partition_point(|s| s.timestamp < we);
        let in_month = &log.samples[lo..hi];
        let month_minutes = (we - ws) / 60.0;
        let deployed_min = in_month.iter().filter(|s| s.deployed).count() as f64 * interval_min;
        let periods = runs(in_month, log.interval, |s| s.deployed && !s.up);
        let denominator_minutes = if sla.running_time { deployed_min } else { month_minutes };
        let coverage = if deployed_min <= 0.0 {
            Coverage::Unobserved
        } else if deployed_min >= month_minutes - interval_min * (1.0 + SPACING_TOLERANCE) {
            Coverage::Full
        } else {
            Coverage::Partial
        };
        let availability =
            if denominator_minutes > 0.0 { provider_availability(&periods, sla, denominator_minutes)? } else { 1.0 };
        let counted_downtime_min = periods.iter().map(|p| sla.counted_downtime(p.length_min)).fold(0.0, |a, x| a + x);
        results.push(MonthResult {
            label,
            start: ws,
            end: we,
            month_minutes,
            denominator_minutes,
            periods,
            counted_downtime_min,
            availability,
            coverage,
            violated: sla.is_violated(availability),
        });
    }
    Ok(results)
}

fn parse_timestamp(raw: &str, line: usize) -> Result<f64, TraceError> {
    if let Ok(v) = raw.parse::<f64>() {
        if v.is_finite() {
            return Ok(v);
        }
    }
    DateTime::parse_from_rfc3339(raw)
        .map(|t| t.timestamp() as f64 + f64::from(t.timestamp_subsec_nanos()) * 1e-9)
        .map_err(|_| TraceError::Parse {
            line,
            message: format!("`{raw}` is neither Unix seconds nor an RFC 3339 timestamp"),
        })
}

fn parse_flag(raw: &str, line: usize, column: &str, yes: &[&str], no: &[&str]) -> Result<bool, TraceError> {
    let lower = raw.to_ascii_lowercase();
    if yes.contains(&lower.as_str()) {
        Ok(true)
    } else if no.contains(&lower.as_str()) {
        Ok(false)
    } else {
        Err(TraceError::Parse { line, message: format!("column `{column}`: unrecognized value `{raw}`") })
    }
}

/// Reads `timestamp,status[,deployed]` rows. Timestamps are Unix seconds or RFC 3339;
/// status is `up`/`down` (or `1`/`0`); `deployed` defaults to true.
pub fn read_sample_log<R: Read>(reader: R, interval: Option<f64>) -> Result<SampleLog> {
    let table = csvio::read_table(reader)?;
    let ts = table.column("timestamp")?;
    let status = table.column("status")?;
    let deployed = table.optional_column("deployed");
    let mut samples = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let timestamp = parse_timestamp(row.text(ts), row.line)?;
        if let Some(prev) = samples.last().map(|s: &Sample| s.timestamp) {
            if timestamp <= prev {
                return Err(TraceError::Parse { line: row.line, message: format!("timestamp {timestamp} not increasing") }.into());
            }
        }
        let up = parse_flag(row.text(status), row.line, "status", &["up", "1", "true"], &["down", "0", "false"])?;
        let deployed = match deployed {
            Some(idx) if !row.text(idx).is_empty() => {
                parse_flag(row.text(idx), row.line, "deployed", &["true", "1", "yes"], &["false", "0", "no"])?
            }
            _ => true,
        };
        samples.push(Sample { timestamp, up, deployed });
    }
    match interval {
        Some(i) => SampleLog::new(samples, i),
        None => SampleLog::with_inferred_interval(samples),
    }
}

/// Writes `timestamp,status,deployed` rows readable by [`read_sample_log`].
pub fn write_sample_log<W: std::io::Write>(mut out: W, log: &SampleLog) -> std::io::Result<()> {
    writeln!(out, "timestamp,status,deployed")?;
    for s in &log.samples {
        writeln!(out, "{},{},{}", s.timestamp, if s.up { "up" } else { "down" }, s.deployed)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(states: &[bool], interval: f64) -> SampleLog {
        let samples = states.iter().enumerate().map(|(i, &up)| Sample::new(i as f64 * interval, up)).collect();
        SampleLog::new(samples, interval).unwrap()
    }

    #[test]
    fn operational_availability_examples() {
        let mut states = vec![true; 1000];
        states[..10].fill(false);
        assert_eq!(operational_availability(&log(&states, 60.0)).unwrap(), 0.99);
        assert_eq!(operational_availability(&log(&[true; 5], 60.0)).unwrap(), 1.0);
        assert_eq!(operational_availability(&log(&[false; 5], 60.0)).unwrap(), 0.0);
        assert_eq!(operational_availability(&log(&[], 60.0)), Err(AvailabilityError::NoData));
    }

    #[test]
    fn downtime_runs_coalesce() {
        let mut states = vec![true; 10];
        states[5..8].fill(false);
        let periods = extract_downtime_periods(&log(&states, 60.0));
        assert_eq!(periods, vec![DowntimePeriod { start: 300.0, length_min: 3.0 }]);
        let alternating: Vec<bool> = (0..6).map(|i| i % 2 == 0).collect();
        let periods = extract_downtime_periods(&log(&alternating, 60.0));
        assert_eq!(periods.len(), 3);
        assert!(periods.iter().all(|p| p.length_min == 1.0));
        assert!(extract_downtime_periods(&log(&[true; 4], 60.0)).is_empty());
    }

    #[test]
    fn trailing_run_is_closed() {
        let periods = extract_downtime_periods(&log(&[true, false, false], 30.0));
        assert_eq!(periods, vec![DowntimePeriod { start: 30.0, length_min: 1.0 }]);
    }

    #[test]
    fn spacing_is_enforced() {
        let s = vec![Sample::new(0.0, true), Sample::new(60.0, true), Sample::new(125.0, true)];
        assert!(SampleLog::new(s.clone(), 60.0).is_err());
        let ok = vec![Sample::new(0.0, true), Sample::new(60.3, true)];
        assert!(SampleLog::new(ok, 60.0).is_ok());
        assert!(SampleLog::new(vec![Sample::new(5.0, true), Sample::new(5.0, true)], 60.0).is_err());
    }

    #[test]
    fn parses_log_with_both_timestamp_forms() {
        let text = "timestamp,status,deployed\n\
                    2024-01-31T23:58:00Z,up,true\n\
                    1706745540,down,\n\
                    # comment\n\
                    2024-02-01T00:00:00Z,DOWN,0\n";
        let log = read_sample_log(text.as_bytes(), None).unwrap();
        assert_eq!(log.interval(), 60.0);
        assert_eq!(log.samples()[1], Sample { timestamp: 1_706_745_540.0, up: false, deployed: true });
        assert!(!log.samples()[2].deployed);
        let mut buf = Vec::new();
        write_sample_log(&mut buf, &log).unwrap();
        assert_eq!(read_sample_log(buf.as_slice(), None).unwrap(), log);
        let bad = "timestamp,status\n0,up\n60,maybe\n";
        match read_sample_log(bad.as_bytes(), None) {
            Err(AvailabilityError::Trace(TraceError::Parse { line, .. })) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    fn sla(q: f64, running_time: bool) -> SlaDefinition {
        SlaDefinition::new(q, running_time, 99.95, false, vec![]).unwrap()
    }

    #[test]
    fn calendar_months_split_runs() {
        // 2024-01-31 23:58 to 2024-02-01 00:03, down across midnight.
        let start = 1_706_745_480.0;
        let states = [true, false, false, false, false, true];
        let samples = states.iter().enumerate().map(|(i, &up)| Sample::new(start + 60.0 * i as f64, up)).collect();
        let log = SampleLog::new(samples, 60.0).unwrap();
        let months = monthly_results(&log, &sla(1.0, false), MonthWindows::Calendar).unwrap();
        assert_eq!(months.len(), 2);
        assert_eq!(months[0].label, "2024-01");
        assert_eq!(months[0].month_minutes, 31.0 * 1440.0);
        assert_eq!(months[0].periods, vec![DowntimePeriod { start: start + 60.0, length_min: 1.0 }]);
        assert_eq!(months[1].label, "2024-02");
        assert_eq!(months[1].month_minutes, 29.0 * 1440.0);
        assert_eq!(months[1].periods[0].length_min, 3.0);
        assert_eq!(months[0].coverage, Coverage::Partial);
        // With a 5-minute quantum neither half counts.
        let months = monthly_results(&log, &sla(5.0, false), MonthWindows::Calendar).unwrap();
        assert!(months.iter().all(|m| m.availability == 1.0));
    }

    #[test]
    fn running_time_uses_deployed_minutes() {
        let mut samples: Vec<Sample> = (0..100).map(|i| Sample::new(60.0 * f64::from(i), true)).collect();
        for s in &mut samples[50..] {
            s.deployed = false;
            s.up = false;
        }
        samples[10].up = false;
        samples[11].up = false;
        let log = SampleLog::new(samples, 60.0).unwrap();
        let r = monthly_results(&log, &sla(1.0, true), MonthWindows::Fixed(100.0)).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].denominator_minutes, 50.0);
        assert_eq!(r[0].availability, 48.0 / 50.0);
        let r = monthly_results(&log, &sla(1.0, false), MonthWindows::Fixed(100.0)).unwrap();
        assert_eq!(r[0].availability, 98.0 / 100.0);
        assert_eq!(r[0].coverage, Coverage::Partial);
    }

    #[test]
    fn fixed_windows_cover_the_log() {
        let log = log(&[true; 120], 60.0);
        let r = monthly_results(&log, &sla(1.0, false), MonthWindows::Fixed(50.0)).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].coverage, Coverage::Full);
        assert_eq!(r[2].coverage, Coverage::Partial);
    }
}
