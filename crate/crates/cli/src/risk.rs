use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use cloudbench::risk::{self, AggregationMethod, ResourceType, RiskWeights, ServiceRisk};
use serde_json::json;

use crate::error::{reading, CliError, Result};
use crate::{input, Report};

#[derive(Debug, Args)]
pub struct RiskArgs {
    /// `time,provisioned,demanded,used[,resource]` CSV files.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Weight of the provisioning risk; contention gets the complement.
    #[arg(long, default_value_t = 0.5)]
    w_p: f64,
    /// Resource type of files without a `resource` column.
    #[arg(long, default_value = "cpu")]
    resource: ResourceType,
    /// System aggregation: `iqr`, `mean` or `quantile:Q`. All three are reported by default.
    #[arg(long, value_parser = parse_method)]
    aggregate: Option<AggregationMethod>,
}

fn parse_method(raw: &str) -> std::result::Result<AggregationMethod, String> {
    match raw {
        "iqr" => Ok(AggregationMethod::Iqr),
        "mean" => Ok(AggregationMethod::Mean),
        "median" => Ok(AggregationMethod::Quantile(0.5)),
        _ => raw
            .strip_prefix("quantile:")
            .and_then(|q| q.parse().ok())
            .map(AggregationMethod::Quantile)
            .ok_or_else(|| format!("expected iqr, mean, median or quantile:Q, got `{raw}`")),
    }
}

pub fn run(args: &RiskArgs) -> Result<Report> {
    let weights = RiskWeights::new(args.w_p, 1.0 - args.w_p).map_err(|e| CliError::domain("weights", e))?;
    let per_file: Vec<Vec<ServiceRisk>> = input::parallel(&args.traces, |path| {
        let traces = risk::read_risk_traces(input::open(path)?, args.resource).map_err(reading(path))?;
        traces
            .iter()
            .map(|t| risk::service_risk(t, weights).map_err(|e| CliError::domain(path.display().to_string(), e)))
            .collect()
    })?;

    let ids = input::ids(&args.traces);
    let mut table = format!("{:<20} {:<8} {:>8} {:>8} {:>8}\n", "trace", "resource", "r_p", "r_c", "r_e");
    let mut services = Vec::new();
    for (id, risks) in ids.iter().zip(&per_file) {
        for r in risks {
            let _ = writeln!(table, "{id:<20} {:<8} {:>8.4} {:>8.4} {:>8.4}", r.resource.to_string(), r.r_p, r.r_c, r.r_e);
            services.push(json!({"id": id, "risk": r}));
        }
    }

    let all: Vec<ServiceRisk> = per_file.into_iter().flatten().collect();
    let methods = match args.aggregate {
        Some(m) => vec![m],
        None => vec![AggregationMethod::Iqr, AggregationMethod::Quantile(0.5), AggregationMethod::Mean],
    };
    let mut system = Vec::new();
    for m in methods {
        let by = risk::system_risk_by_resource(&all, m).map_err(|e| CliError::domain("system risk", e))?;
        for (resource, s) in &by {
            let _ = writeln!(table, "system {resource} {m:?}: {:.4}", s.value);
        }
        system.push(json!({"method": m, "by_resource": by}));
    }
    Ok(Report { json: json!({"weights": weights, "services": services, "system": system}), table })
}
