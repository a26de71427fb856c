//! Synthetic load-intensity profiles built from additive components.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Result, SimError};
use crate::traces::StepCurve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoadComponent {
    Constant {
        level: f64,
    },
    /// `amplitude · sin(2π t / period + phase)`.
    Sine {
        amplitude: f64,
        period: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `level` on `[start, start + length)`.
    Plateau {
        level: f64,
        start: f64,
        length: f64,
    },
    /// `slope · t`.
    Trend {
        slope: f64,
    },
    /// Triangle of the given height peaking at `start + width / 2`.
    Burst {
        height: f64,
        start: f64,
        width: f64,
    },
    /// Zero-mean Gaussian noise. Without an own seed the profile seed plus the
    /// component index is used.
    Noise {
        std: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfileSpec {
    pub components: Vec<LoadComponent>,
    /// Seconds.
    pub horizon: f64,
    /// Sampling step in seconds.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
}

fn default_resolution() -> f64 {
    1.0
}

impl LoadProfileSpec {
    pub fn new(components: Vec<LoadComponent>, horizon: f64) -> Self {
        Self { components, horizon, resolution: default_resolution() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::Spec(m));
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("profile horizon must be positive, got {}", self.horizon));
        }
        if !(self.resolution > 0.0) || !self.resolution.is_finite() {
            return bad(format!("profile resolution must be positive, got {}", self.resolution));
        }
        for c in &self.components {
            match *c {
                LoadComponent::Sine { period, .. } if !(period > 0.0) => return bad(format!("sine period {period}")),
                LoadComponent::Plateau { length, .. } if !(length >= 0.0) => {
                    return bad(format!("plateau length {length}"))
                }
                LoadComponent::Burst { width, .. } if !(width > 0.0) => return bad(format!("burst width {width}")),
                LoadComponent::Noise { std, .. } if !(std >= 0.0) => return bad(format!("noise std {std}")),
                _ => {}
            }
        }
        Ok(())
    }
}

/// Standard normal deviate from two uniforms via the Box–Muller cosine branch:
/// `sqrt(−2 ln(1 − u1)) · cos(2π u2)` with `u1, u2` uniform on `[0, 1)`.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn deterministic_value(c: &LoadComponent, t: f64) -> f64 {
    match *c {
        LoadComponent::Constant { level } => level,
        LoadComponent::Sine { amplitude, period, phase } => amplitude * (2.0 * PI * t / period + phase).sin(),
        LoadComponent::Plateau { level, start, length } => {
            if t >= start && t < start + length {
                level
            } else {
                0.0
            }
        }
        LoadComponent::Trend { slope } => slope * t,
        LoadComponent::Burst { height, start, width } => {
            let half = width / 2.0;
            height * (1.0 - (t - (start + half)).abs() / half).max(0.0)
        }
        LoadComponent::Noise { .. } => 0.0,
    }
}

/// Samples the summed components every `resolution` seconds, clamps at zero and
/// holds each sample until the next. Identical inputs give bit-identical curves.
pub fn generate_profile(spec: &LoadProfileSpec, seed: u64) -> Result<StepCurve> {
    spec.validate()?;
    let n = (spec.horizon / spec.resolution).ceil().max(1.0) as usize;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * spec.resolution).collect();
    let mut values = vec![0.0; n];
    for (idx, c) in spec.components.iter().enumerate() {
        if let LoadComponent::Noise { std, seed: own } = *c {
            let mut rng = ChaCha8Rng::seed_from_u64(own.unwrap_or(seed.wrapping_add(idx as u64)));
            for v in &mut values {
                *v += std * gaussian(&mut rng);
            }
        } else {
            for (v, &t) in values.iter_mut().zip(&times) {
                *v += deterministic_value(c, t);
            }
        }
    }
    let points = times.into_iter().zip(values.into_iter().map(|v| v.max(0.0))).collect();
    Ok(StepCurve::new(points, spec.horizon)?.simplified())
}
