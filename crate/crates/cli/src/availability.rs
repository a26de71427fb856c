use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use cloudbench::availability::{
    self, AdherenceInput, DeploymentFacts, MonthWindows, SlaDefinition, StrictnessConfig,
};
use serde_json::{json, Value};

use crate::error::{reading, CliError, Result};
use crate::{input, Report};

#[derive(Debug, Args)]
pub struct AvailabilityArgs {
    /// SLA definition JSON; repeat for several SLAs.
    #[arg(long = "sla", required = true)]
    slas: Vec<PathBuf>,
    /// `timestamp,status[,deployed]` CSV sample log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Sampling interval in seconds; inferred from the log by default.
    #[arg(long)]
    interval: Option<f64>,
    /// Billing windows: `calendar` or a fixed length in minutes.
    #[arg(long, default_value = "calendar", value_parser = parse_windows)]
    windows: MonthWindows,
    /// Deployment facts JSON checked against SLA preconditions; without it they count as met.
    #[arg(long)]
    facts: Option<PathBuf>,
    /// Quantum normalization edges in minutes, `lo,hi`.
    #[arg(long, value_parser = input::pair)]
    q_edges: Option<(f64, f64)>,
    /// Guarantee normalization edges in percent, `lo,hi`.
    #[arg(long, value_parser = input::pair)]
    p_edges: Option<(f64, f64)>,
}

fn parse_windows(raw: &str) -> std::result::Result<MonthWindows, String> {
    if raw.eq_ignore_ascii_case("calendar") {
        return Ok(MonthWindows::Calendar);
    }
    raw.parse::<f64>()
        .map(MonthWindows::Fixed)
        .map_err(|_| format!("expected `calendar` or minutes, got `{raw}`"))
}

fn strictness_config(args: &AvailabilityArgs) -> Result<StrictnessConfig> {
    let d = StrictnessConfig::default();
    StrictnessConfig::new(args.q_edges.unwrap_or(d.q_edges), args.p_edges.unwrap_or(d.p_edges))
        .map_err(|e| CliError::domain("strictness edges", e))
}

pub fn run(args: &AvailabilityArgs) -> Result<Report> {
    let config = strictness_config(args)?;
    let facts: Option<DeploymentFacts> = args.facts.as_ref().map(|p| input::json(p)).transpose()?;
    let slas: Vec<SlaDefinition> = args.slas.iter().map(|p| input::json(p)).collect::<Result<_>>()?;
    let ids = input::ids(&args.slas);
    let log = match &args.log {
        Some(path) => Some((path, availability::read_sample_log(input::open(path)?, args.interval).map_err(reading(path))?)),
        None => None,
    };

    let mut table = String::new();
    let _ = writeln!(table, "{:<20} {:>10}", "sla", "S");
    let mut entries = Vec::new();
    for ((id, path), sla) in ids.iter().zip(&args.slas).zip(&slas) {
        let label = sla.name.clone().unwrap_or_else(|| id.clone());
        let s = availability::strictness(sla, &config).map_err(|e| CliError::domain(path.display().to_string(), e))?;
        let _ = writeln!(table, "{label:<20} {s:>10.4}");
        let mut entry = json!({"id": id, "name": label, "file": path, "sla": sla, "strictness": s});
        if let Some((log_path, log)) = &log {
            let ctx = log_path.display().to_string();
            let months = availability::monthly_results(log, sla, args.windows).map_err(|e| CliError::domain(&ctx, e))?;
            let preconditions_met = facts.as_ref().map_or(true, |f| sla.preconditions_met(f));
            let inputs: Vec<AdherenceInput> = months
                .iter()
                .map(|m| AdherenceInput {
                    availability: m.availability,
                    guarantee_pct: sla.guarantee_pct,
                    coverage: m.coverage,
                    preconditions_met,
                })
                .collect();
            let adherence = match availability::sla_adherence(&inputs) {
                Ok(a) => json!(a),
                Err(e) => json!({"not_measurable": e.to_string()}),
            };
            for m in &months {
                let _ = writeln!(
                    table,
                    "  {:<10} availability {:.6}  counted downtime {:.1} min  coverage {:?}{}",
                    m.label,
                    m.availability,
                    m.counted_downtime_min,
                    m.coverage,
                    if m.violated { "  VIOLATED" } else { "" }
                );
            }
            entry["preconditions_met"] = Value::Bool(preconditions_met);
            entry["months"] = json!(months);
            entry["adherence"] = adherence;
        }
        entries.push(entry);
    }

    let mut report = json!({"strictness_config": config, "slas": entries});
    if let Some((path, log)) = &log {
        let ctx = path.display().to_string();
        let operational = availability::operational_availability(log).map_err(|e| CliError::domain(&ctx, e))?;
        let periods = availability::extract_downtime_periods(log);
        let _ = writeln!(table, "operational availability {operational:.6}, {} downtime periods", periods.len());
        report["log"] = json!({
            "file": path,
            "samples": log.samples().len(),
            "interval_s": log.interval(),
            "operational_availability": operational,
            "downtime_periods": periods,
        });
    }
    Ok(Report { json: report, table })
}
