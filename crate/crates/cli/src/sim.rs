use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::Args;
use cloudbench::availability::{self, write_sample_log};
use cloudbench::elasticity::report::render_table;
use cloudbench::risk::{self, write_risk_traces, ResourceType, RiskWeights};
use cloudbench::simharness::{self, Scenario};
use cloudbench::traces::{write_curve, write_curve_pair};
use serde_json::json;

use crate::error::{CliError, Result};
use crate::{input, Report};

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Scenario JSON: profile, platform, and optional tenants, failure model and sampling.
    scenario: PathBuf,
}

struct Artifacts {
    dir: PathBuf,
    stem: String,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn write(&mut self, suffix: &str, f: impl FnOnce(BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
        let path = self.dir.join(format!("{}.{suffix}", self.stem));
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        f(BufWriter::new(file)).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

fn location(report: Option<&Path>, scenario: &Path) -> (PathBuf, String) {
    let anchor = report.unwrap_or(scenario);
    let dir = anchor.parent().filter(|p| !p.as_os_str().is_empty()).map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let stem = anchor.file_stem().map_or_else(|| "sim".to_owned(), |s| s.to_string_lossy().into_owned());
    (dir, stem)
}

pub fn run(args: &SimArgs, out: Option<&Path>, seed: Option<u64>) -> Result<Report> {
    let mut scenario: Scenario = input::json(&args.scenario)?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let ctx = args.scenario.display().to_string();
    let outcome = simharness::run_scenario(&scenario).map_err(|e| CliError::domain(&ctx, e))?;
    let (dir, stem) = location(out, &args.scenario);
    let mut files = Artifacts { dir, stem, written: Vec::new() };

    let e = &outcome.elasticity;
    files.write("intensity.csv", |w| write_curve(w, &e.intensity))?;
    files.write("elasticity.csv", |w| write_curve_pair(w, &e.trace))?;
    let risk_trace = simharness::risk_trace(&e.trace, ResourceType::Cpu).map_err(|err| CliError::domain(&ctx, err))?;
    files.write("risk.csv", |w| write_risk_traces(w, std::slice::from_ref(&risk_trace)))?;
    let service_risk = risk::service_risk(&risk_trace, RiskWeights::default()).map_err(|err| CliError::domain(&ctx, err))?;

    let mut table = render_table(&[("simulated", e.metrics)]);
    let _ = writeln!(table, "unit throughput {:.4}, {} platform events", e.unit_throughput, e.events.len());
    if let Some(s) = &e.speedup {
        let _ = writeln!(table, "elastic speedup vs baseline {:.4}", s.elastic_speedup);
    }
    let _ = writeln!(table, "risk r_p {:.4} r_c {:.4} r_e {:.4}", service_risk.r_p, service_risk.r_c, service_risk.r_e);
    let mut report = json!({
        "seed": scenario.seed,
        "elasticity": {
            "unit_throughput": e.unit_throughput,
            "metrics": e.metrics,
            "speedup": e.speedup,
            "matching_tables": e.tables,
            "events": e.events,
        },
        "risk": service_risk,
    });

    if let Some(t) = &outcome.tenants {
        files.write("isolation.csv", |w| t.curve.write_points(w).map_err(std::io::Error::other))?;
        files.write("isolation.marks.json", |w| serde_json::to_writer_pretty(w, t.curve.marks()).map_err(std::io::Error::other))?;
        report["isolation"] = json!({
            "reference": t.reference,
            "qos_reference": t.qos_reference,
            "report": t.report,
        });
        if let Err(reason) = &t.qos_impact {
            report["isolation"]["qos_impact"] = json!({"not_measurable": reason});
        }
        let show = |m: Option<f64>| m.map_or_else(|| "not measurable".to_owned(), |v| format!("{v:.4}"));
        let _ = writeln!(table, "isolation I_intBase {}, I_avg {}", show(t.report.i_int_base.value()), show(t.report.i_avg.value()));
    }
    if let Some(log) = &outcome.availability {
        files.write("availability.csv", |w| write_sample_log(w, log))?;
        let a = availability::operational_availability(log).map_err(|err| CliError::domain(&ctx, err))?;
        report["availability"] = json!({"samples": log.samples().len(), "operational_availability": a});
        let _ = writeln!(table, "sampled availability {a:.6} over {} samples", log.samples().len());
    }
    for f in &files.written {
        let _ = writeln!(table, "wrote {}", f.display());
    }
    report["files"] = json!(files.written);
    Ok(Report { json: report, table })
}
