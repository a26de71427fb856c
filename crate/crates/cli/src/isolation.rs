use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use cloudbench::isolation::{self, curve, IsolationCurve, IsolationReport, Measured, QoSImpact, QoSObservation, ReferenceMarks};
use serde::Deserialize;
use serde_json::json;

use crate::error::{reading, CliError, Result};
use crate::{input, Report};

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("inputs").required(true).multiple(true).args(["curve", "observations"]))]
pub struct IsolationArgs {
    /// `W_d,W_a` CSV of the isolation curve.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// JSON reference marks; without it the first curve point is the reference.
    #[arg(long, requires = "curve")]
    marks: Option<PathBuf>,
    /// JSON array of `{reference, disrupted}` QoS observation pairs.
    #[arg(long)]
    observations: Option<PathBuf>,
    /// Upper integration bound of the reference-free integral metric.
    #[arg(long)]
    p_end: Option<f64>,
    /// Expected number of disruptive levels in the observations.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Deserialize)]
struct ObservationPair {
    reference: QoSObservation,
    disrupted: QoSObservation,
}

fn load_curve(args: &IsolationArgs, path: &PathBuf) -> Result<IsolationCurve> {
    let points = curve::read_points(input::open(path)?).map_err(reading(path))?;
    let marks = match &args.marks {
        Some(m) => input::json::<ReferenceMarks>(m)?,
        None => {
            let first = points.first().ok_or_else(|| CliError::Parse {
                path: path.clone(),
                line: None,
                message: "no curve points".into(),
            })?;
            ReferenceMarks::from_reference(first.w_d, first.w_a)
        }
    };
    IsolationCurve::new(points, marks).map_err(|e| CliError::domain(path.display().to_string(), e))
}

fn load_impact(args: &IsolationArgs, path: &PathBuf) -> Result<QoSImpact> {
    let pairs: Vec<ObservationPair> = input::json(path)?;
    if let Some(m) = args.m {
        if pairs.len() != m {
            return Err(CliError::domain(path.display().to_string(), format!("expected {m} levels, found {}", pairs.len())));
        }
    }
    let mut measurements = Vec::with_capacity(pairs.len());
    for p in pairs {
        for obs in [&p.reference, &p.disrupted] {
            obs.validate().map_err(|e| CliError::domain(path.display().to_string(), e))?;
        }
        measurements.push((p.reference, p.disrupted));
    }
    isolation::i_avg(&measurements).map_err(|e| CliError::domain(path.display().to_string(), e))
}

fn cell(m: &Measured) -> String {
    match m {
        Measured::Value(v) => format!("{v:.4}"),
        Measured::NotMeasurable { not_measurable } => format!("not measurable ({not_measurable})"),
    }
}

pub fn run(args: &IsolationArgs) -> Result<Report> {
    let impact = args.observations.as_ref().map(|p| load_impact(args, p)).transpose()?;
    let report = match &args.curve {
        Some(path) => {
            let curve = load_curve(args, path)?;
            IsolationReport::new(&curve, args.p_end, impact.as_ref()).map_err(|e| CliError::domain("isolation", e))?
        }
        None => {
            let missing = || Measured::not_measurable("no isolation curve given");
            let q = impact.as_ref().expect("clap requires an input");
            IsolationReport {
                i_qos: q.i_qos.clone(),
                i_avg: Measured::Value(q.i_avg),
                i_end: missing(),
                i_base: missing(),
                i_int_base: missing(),
                i_int_free: missing(),
            }
        }
    };

    let mut table = String::new();
    for (name, m) in [
        ("I_avg", &report.i_avg),
        ("I_end", &report.i_end),
        ("I_base", &report.i_base),
        ("I_intBase", &report.i_int_base),
        ("I_intFree", &report.i_int_free),
    ] {
        let _ = writeln!(table, "{name:<10} {}", cell(m));
    }
    for (i, v) in report.i_qos.iter().enumerate() {
        let _ = writeln!(table, "I_QoS[{}]   {v:.4}", i + 1);
    }
    Ok(Report { json: json!(report), table })
}
