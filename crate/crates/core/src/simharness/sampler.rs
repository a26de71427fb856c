//! Memoryless availability sampler driven by the zone failure model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Result, SimError};
use crate::availability::{FailureModel, Sample, SampleLog};

/// `floor(duration / interval)` samples from `start`, each independently down with
/// probability `P_OVERALL`. Durations and the interval are in seconds.
pub fn sample_availability(model: &FailureModel, duration: f64, interval: f64, seed: u64, start: f64) -> Result<SampleLog> {
    if !(interval > 0.0) || !(duration >= interval) || !duration.is_finite() {
        return Err(SimError::Spec(format!("need 0 < interval ({interval}) <= duration ({duration})")));
    }
    let p = model.overall_failure_prob().clamp(0.0, 1.0);
    let n = (duration / interval).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|i| {
            let down = rng.gen::<f64>() < p;
            Sample::new(start + i as f64 * interval, !down)
        })
        .collect();
    Ok(SampleLog::new(samples, interval)?)
}
