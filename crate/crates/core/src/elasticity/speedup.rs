//! Weighted elastic speedup and platform ranking.
//!
//! Step 1 folds the under/over variants into a weighted accuracy and a weighted
//! timeshare. Step 2 divides the baseline's values by the platform's. Step 3 combines
//! the two ratios with a weighted geometric mean.

use serde::{Deserialize, Serialize};

use super::{ElasticityError, ElasticityMetrics, Result};

const WEIGHT_SUM_EPS: f64 = 1e-9;

/// Weights for the three aggregation steps. Each pair must sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightRepr")]
pub struct WeightConfig {
    pub w_acc_u: f64,
    pub w_acc_o: f64,
    pub w_ts_u: f64,
    pub w_ts_o: f64,
    pub w_acc: f64,
    pub w_ts: f64,
}

#[derive(Deserialize)]
struct WeightRepr {
    w_acc_u: f64,
    w_acc_o: f64,
    w_ts_u: f64,
    w_ts_o: f64,
    w_acc: f64,
    w_ts: f64,
}

impl TryFrom<WeightRepr> for WeightConfig {
    type Error = ElasticityError;

    fn try_from(r: WeightRepr) -> Result<Self> {
        WeightConfig::new(r.w_acc_u, r.w_acc_o, r.w_ts_u, r.w_ts_o, r.w_acc, r.w_ts)
    }
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self { w_acc_u: 0.5, w_acc_o: 0.5, w_ts_u: 0.5, w_ts_o: 0.5, w_acc: 0.5, w_ts: 0.5 }
    }
}

impl WeightConfig {
    pub fn new(w_acc_u: f64, w_acc_o: f64, w_ts_u: f64, w_ts_o: f64, w_acc: f64, w_ts: f64) -> Result<Self> {
        let named = [
            ("w_acc_U", w_acc_u),
            ("w_acc_O", w_acc_o),
            ("w_ts_U", w_ts_u),
            ("w_ts_O", w_ts_o),
            ("w_acc", w_acc),
            ("w_ts", w_ts),
        ];
        for (name, w) in named {
            if !(0.0..=1.0).contains(&w) {
                return Err(ElasticityError::InvalidWeights(format!("{name}={w} outside [0, 1]")));
            }
        }
        for (a, b) in [(0, 1), (2, 3), (4, 5)] {
            let sum = named[a].1 + named[b].1;
            if (sum - 1.0).abs() > WEIGHT_SUM_EPS {
                return Err(ElasticityError::InvalidWeights(format!(
                    "{} + {} = {sum}, expected 1",
                    named[a].0, named[b].0
                )));
            }
        }
        Ok(Self { w_acc_u, w_acc_o, w_ts_u, w_ts_o, w_acc, w_ts })
    }

    /// Builds a config from one weight per pair; the partners are `1 - w`.
    pub fn from_primary(w_acc_u: f64, w_ts_u: f64, w_acc: f64) -> Result<Self> {
        Self::new(w_acc_u, 1.0 - w_acc_u, w_ts_u, 1.0 - w_ts_u, w_acc, 1.0 - w_acc)
    }

    pub fn weighted_accuracy(&self, m: &ElasticityMetrics) -> f64 {
        self.w_acc_u * m.accuracy_u + self.w_acc_o * m.accuracy_o
    }

    pub fn weighted_timeshare(&self, m: &ElasticityMetrics) -> f64 {
        self.w_ts_u * m.timeshare_u + self.w_ts_o * m.timeshare_o
    }
}

/// Speedup of one platform against a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupResult {
    pub platform_id: String,
    pub accuracy_weighted: f64,
    pub timeshare_weighted: f64,
    #[serde(with = "crate::serde_ext::f64_or_inf")]
    pub speedup_accuracy: f64,
    #[serde(with = "crate::serde_ext::f64_or_inf")]
    pub speedup_timeshare: f64,
    #[serde(with = "crate::serde_ext::f64_or_inf")]
    pub elastic_speedup: f64,
    /// Set when a weighted metric that carries weight is zero; the speedup is then
    /// infinite and the platform is kept out of ratio-based rankings.
    pub perfect: bool,
}

fn weighted_power(ratio: f64, weight: f64) -> f64 {
    if weight == 0.0 {
        1.0
    } else {
        ratio.powf(weight)
    }
}

pub fn aggregate_speedup(
    platform_id: &str,
    platform: &ElasticityMetrics,
    baseline: &ElasticityMetrics,
    weights: &WeightConfig,
) -> Result<SpeedupResult> {
    let base_acc = weights.weighted_accuracy(baseline);
    let base_ts = weights.weighted_timeshare(baseline);
    if base_acc <= 0.0 || base_ts <= 0.0 {
        return Err(ElasticityError::InvalidBaseline {
            id: platform_id.to_owned(),
            reason: format!("weighted accuracy {base_acc} and weighted timeshare {base_ts} must both be positive"),
        });
    }
    let acc = weights.weighted_accuracy(platform);
    let ts = weights.weighted_timeshare(platform);
    let speedup_accuracy = if acc > 0.0 { base_acc / acc } else { f64::INFINITY };
    let speedup_timeshare = if ts > 0.0 { base_ts / ts } else { f64::INFINITY };
    let elastic_speedup =
        weighted_power(speedup_accuracy, weights.w_acc) * weighted_power(speedup_timeshare, weights.w_ts);
    Ok(SpeedupResult {
        platform_id: platform_id.to_owned(),
        accuracy_weighted: acc,
        timeshare_weighted: ts,
        speedup_accuracy,
        speedup_timeshare,
        elastic_speedup,
        perfect: elastic_speedup.is_infinite(),
    })
}

/// Metrics of one benchmarked platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformMetrics {
    pub id: String,
    pub metrics: ElasticityMetrics,
    /// Label of the scaled resource type, e.g. `vm` or `cpu-core`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_unit: Option<String>,
}

impl PlatformMetrics {
    pub fn new(id: impl Into<String>, metrics: ElasticityMetrics) -> Self {
        Self { id: id.into(), metrics, resource_unit: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub baseline_id: String,
    /// Platforms with a finite speedup, best first.
    pub ranked: Vec<SpeedupResult>,
    /// Platforms flagged as perfect, in input order.
    pub perfect: Vec<SpeedupResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Ranking {
    pub fn order(&self) -> Vec<&str> {
        self.ranked.iter().map(|r| r.platform_id.as_str()).collect()
    }
}

/// Baseline-free ordering key, `-(w_acc ln acc + w_ts ln ts)`.
///
/// The elastic speedup equals `exp(score_k - score_base)`, so sorting by this key is
/// the same as sorting by speedup while never depending on which platform is the
/// baseline, not even through rounding.
fn ordering_score(result: &SpeedupResult, weights: &WeightConfig) -> f64 {
    let term = |w: f64, x: f64| if w == 0.0 { 0.0 } else { -w * x.ln() };
    term(weights.w_acc, result.accuracy_weighted) + term(weights.w_ts, result.timeshare_weighted)
}

/// Sorts platforms by descending elastic speedup against `platforms[baseline_index]`;
/// exact ties keep platform-id order.
pub fn rank_platforms(platforms: &[PlatformMetrics], baseline_index: usize, weights: &WeightConfig) -> Result<Ranking> {
    if platforms.len() < 2 {
        return Err(ElasticityError::TooFewPlatforms(platforms.len()));
    }
    let baseline = platforms.get(baseline_index).ok_or_else(|| ElasticityError::InvalidBaseline {
        id: baseline_index.to_string(),
        reason: format!("index out of range for {} platforms", platforms.len()),
    })?;
    let mut warnings = Vec::new();
    let units: Vec<&str> = platforms.iter().filter_map(|p| p.resource_unit.as_deref()).collect();
    if units.windows(2).any(|w| w[0] != w[1]) {
        let msg = format!("platforms scale different resource units ({}); jitter and accuracy are not comparable", units.join(", "));
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut ranked = Vec::with_capacity(platforms.len());
    let mut perfect = Vec::new();
    for p in platforms {
        let result = aggregate_speedup(&p.id, &p.metrics, &baseline.metrics, weights).map_err(|e| match e {
            ElasticityError::InvalidBaseline { reason, .. } => {
                ElasticityError::InvalidBaseline { id: baseline.id.clone(), reason }
            }
            other => other,
        })?;
        if result.perfect {
            perfect.push(result);
        } else {
            ranked.push(result);
        }
    }
    ranked.sort_by(|a, b| {
        ordering_score(b, weights)
            .total_cmp(&ordering_score(a, weights))
            .then_with(|| a.platform_id.cmp(&b.platform_id))
    });
    Ok(Ranking { baseline_id: baseline.id.clone(), ranked, perfect, warnings })
}
