use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use cloudbench::elasticity::{self, report::render_table, ElasticityMetrics, PlatformMetrics, Ranking, WeightConfig};
use cloudbench::traces;
use serde_json::json;

use crate::error::{reading, CliError, Result};
use crate::{input, Report};

#[derive(Debug, Args)]
pub struct WeightArgs {
    /// JSON file with all six weights.
    #[arg(long, conflicts_with_all = ["w_acc_u", "w_ts_u", "w_acc"])]
    weights: Option<PathBuf>,
    /// Under-provisioning weight in accuracy; the over-provisioning weight is its complement.
    #[arg(long, default_value_t = 0.5)]
    w_acc_u: f64,
    #[arg(long, default_value_t = 0.5)]
    w_ts_u: f64,
    /// Accuracy weight in the speedup; timeshare gets the complement.
    #[arg(long, default_value_t = 0.5)]
    w_acc: f64,
}

impl WeightArgs {
    fn load(&self) -> Result<WeightConfig> {
        match &self.weights {
            Some(path) => input::json(path),
            None => WeightConfig::from_primary(self.w_acc_u, self.w_ts_u, self.w_acc).map_err(|e| CliError::domain("weights", e)),
        }
    }
}

#[derive(Debug, Args)]
pub struct ElasticityArgs {
    /// `time,demand,supply` CSV files.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Resource amount of one scaling step.
    #[arg(long, default_value_t = 1.0)]
    scaling_unit: f64,
    /// Rank all traces against this one (file stem, path or 1-based position).
    #[arg(long)]
    baseline: Option<String>,
    #[command(flatten)]
    weights: WeightArgs,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// JSON array of `{id, metrics, resource_unit?}` entries.
    input: PathBuf,
    /// Baseline platform id; defaults to the first entry.
    #[arg(long)]
    baseline: Option<String>,
    #[command(flatten)]
    weights: WeightArgs,
}

fn baseline_index(key: &str, ids: &[String], paths: Option<&[PathBuf]>) -> Result<usize> {
    if let Some(i) = ids.iter().position(|id| id == key) {
        return Ok(i);
    }
    if let Some(i) = paths.and_then(|ps| ps.iter().position(|p| p.as_os_str() == key)) {
        return Ok(i);
    }
    match key.parse::<usize>() {
        Ok(n) if (1..=ids.len()).contains(&n) => Ok(n - 1),
        _ => Err(CliError::Other(format!("unknown baseline `{key}`"))),
    }
}

fn ranking_table(r: &Ranking) -> String {
    let mut out = format!("baseline: {}\n", r.baseline_id);
    let width = r.ranked.iter().chain(&r.perfect).map(|s| s.platform_id.len()).max().unwrap_or(0).max(8);
    let _ = writeln!(out, "rank  {:<width$}  {:>10}  {:>10}  {:>10}", "platform", "speedup", "s_acc", "s_ts");
    for (i, s) in r.ranked.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4}  {:<width$}  {:>10.4}  {:>10.4}  {:>10.4}",
            i + 1,
            s.platform_id,
            s.elastic_speedup,
            s.speedup_accuracy,
            s.speedup_timeshare
        );
    }
    for s in &r.perfect {
        let _ = writeln!(out, "{:>4}  {:<width$}  {:>10}", "-", s.platform_id, "perfect");
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

pub fn run(args: &ElasticityArgs) -> Result<Report> {
    let weights = args.weights.load()?;
    let ids = input::ids(&args.traces);
    let metrics: Vec<ElasticityMetrics> = input::parallel(&args.traces, |path| {
        let pair = traces::read_curve_pair(input::open(path)?).map_err(reading(path))?;
        elasticity::evaluate(&pair, args.scaling_unit).map_err(|e| CliError::domain(path.display().to_string(), e))
    })?;

    let rows: Vec<(&str, ElasticityMetrics)> = ids.iter().map(String::as_str).zip(metrics.iter().copied()).collect();
    let mut table = render_table(&rows);
    let per_trace: Vec<_> = ids
        .iter()
        .zip(&args.traces)
        .zip(&metrics)
        .map(|((id, path), m)| json!({"id": id, "file": path, "metrics": m}))
        .collect();
    let mut report = json!({ "traces": per_trace });

    if let Some(key) = &args.baseline {
        let base = baseline_index(key, &ids, Some(&args.traces))?;
        let platforms: Vec<PlatformMetrics> = ids.iter().zip(&metrics).map(|(id, m)| PlatformMetrics::new(id.clone(), *m)).collect();
        let ranking = elasticity::rank_platforms(&platforms, base, &weights).map_err(|e| CliError::domain("ranking", e))?;
        table.push('\n');
        table.push_str(&ranking_table(&ranking));
        report["ranking"] = serde_json::to_value(&ranking).expect("serializable");
        report["weights"] = serde_json::to_value(weights).expect("serializable");
    }
    Ok(Report { json: report, table })
}

pub fn rank(args: &RankArgs) -> Result<Report> {
    let weights = args.weights.load()?;
    let platforms: Vec<PlatformMetrics> = input::json(&args.input)?;
    let ids: Vec<String> = platforms.iter().map(|p| p.id.clone()).collect();
    let base = match &args.baseline {
        Some(key) => baseline_index(key, &ids, None)?,
        None => 0,
    };
    let ranking = elasticity::rank_platforms(&platforms, base, &weights).map_err(|e| CliError::domain("ranking", e))?;
    let rows: Vec<(&str, ElasticityMetrics)> = platforms.iter().map(|p| (p.id.as_str(), p.metrics)).collect();
    let table = format!("{}\n{}", render_table(&rows), ranking_table(&ranking));
    let json = json!({
        "ranking": ranking,
        "weights": weights,
    });
    Ok(Report { json, table })
}
