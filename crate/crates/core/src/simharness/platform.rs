//! Simulated elastic platforms: an SLO model plus an autoscaling policy.

use serde::{Deserialize, Serialize};

use super::{Result, SimError};
use crate::elasticity::{ProbeObservation, ScalingProbe};
use crate::traces::StepCurve;

/// Slack when rounding a demand value up to whole units.
const UNIT_EPS: f64 = 1e-9;

/// Service-level objective of a platform with `n` units of `c` work units/s each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Slo {
    /// Utilization `w / (n·c)` at most `max`.
    Utilization { max: f64 },
    /// Processor-sharing response time `1 / (n·c − w)` at most `max` seconds.
    ResponseTime { max: f64 },
}

impl Slo {
    pub fn met(&self, intensity: f64, units: u32, unit_capacity: f64) -> bool {
        let capacity = f64::from(units) * unit_capacity;
        match *self {
            Slo::Utilization { max } => intensity <= max * capacity,
            Slo::ResponseTime { max } => intensity < capacity && 1.0 / (capacity - intensity) <= max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AutoscalerPolicy {
    /// Supply equals demand at every instant (within the scaling bounds).
    Perfect,
    /// Threshold rule evaluated whenever demand changes, an action completes or a
    /// cooldown expires. Scales up when demand exceeds `up_threshold` times the
    /// committed supply (current plus pending actions) and down when it falls below
    /// `down_threshold` times it; the target is the demand rounded up to whole units.
    Reactive {
        #[serde(default = "default_up")]
        up_threshold: f64,
        #[serde(default = "default_down")]
        down_threshold: f64,
        /// Seconds between a decision and the new supply becoming active.
        #[serde(default)]
        provisioning_latency: f64,
        /// Seconds after a decision during which no further decision is taken.
        #[serde(default)]
        cooldown: f64,
    },
    /// Adds `amplitude` units to the rounded-up demand in the first half of every
    /// period and removes them in the second half.
    Oscillating { period: f64, amplitude: u32 },
}

fn default_up() -> f64 {
    1.0
}

fn default_down() -> f64 {
    0.75
}

impl AutoscalerPolicy {
    pub fn reactive(provisioning_latency: f64, cooldown: f64) -> Self {
        AutoscalerPolicy::Reactive {
            up_threshold: default_up(),
            down_threshold: default_down(),
            provisioning_latency,
            cooldown,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AutoscalerPolicy::Perfect => Ok(()),
            AutoscalerPolicy::Reactive { up_threshold, down_threshold, provisioning_latency, cooldown } => {
                if !(up_threshold > down_threshold) || !(down_threshold >= 0.0) {
                    return Err(SimError::Spec(format!(
                        "thresholds must satisfy up ({up_threshold}) > down ({down_threshold}) >= 0"
                    )));
                }
                if !(provisioning_latency >= 0.0) || !(cooldown >= 0.0) {
                    return Err(SimError::Spec("latency and cooldown must be non-negative".into()));
                }
                Ok(())
            }
            AutoscalerPolicy::Oscillating { period, .. } => {
                if !(period > 0.0) {
                    return Err(SimError::Spec(format!("oscillation period must be positive, got {period}")));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformSpec {
    /// Work units per second one resource unit sustains.
    pub unit_capacity: f64,
    pub min_units: u32,
    pub max_units: u32,
    pub policy: AutoscalerPolicy,
    pub slo: Slo,
}

impl PlatformSpec {
    pub fn validate(&self) -> Result<()> {
        if self.min_units < 1 || self.max_units < self.min_units {
            return Err(SimError::Spec(format!(
                "scaling bounds must satisfy 1 <= min ({}) <= max ({})",
                self.min_units, self.max_units
            )));
        }
        if !(self.unit_capacity > 0.0) || !self.unit_capacity.is_finite() {
            return Err(SimError::Spec(format!("unit capacity must be positive, got {}", self.unit_capacity)));
        }
        match self.slo {
            Slo::Utilization { max } | Slo::ResponseTime { max } if !(max > 0.0) => {
                return Err(SimError::Spec(format!("SLO bound must be positive, got {max}")))
            }
            _ => {}
        }
        self.policy.validate()
    }

    fn clamp_units(&self, units: f64) -> f64 {
        units.clamp(f64::from(self.min_units), f64::from(self.max_units))
    }

    fn required_units(&self, demand: f64) -> f64 {
        self.clamp_units((demand - UNIT_EPS).ceil().max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlatformEventKind {
    /// An action was decided; the new supply becomes active at `effective`.
    Decision { from: f64, to: f64, effective: f64 },
    /// Demand outside the scaling bounds.
    Saturated { demand: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatformEvent {
    pub time: f64,
    #[serde(flatten)]
    pub kind: PlatformEventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSupply {
    pub supply: StepCurve,
    pub events: Vec<PlatformEvent>,
}

fn saturation_events(platform: &PlatformSpec, demand: &StepCurve) -> Vec<PlatformEvent> {
    let (lo, hi) = (f64::from(platform.min_units), f64::from(platform.max_units));
    let mut events = Vec::new();
    let mut inside = true;
    for b in demand.breakpoints() {
        let now_inside = b.value <= hi + UNIT_EPS && (b.value >= lo || b.value == 0.0);
        if !now_inside && inside {
            log::info!("demand {} at t={} outside scaling bounds [{lo}, {hi}]", b.value, b.time);
            events.push(PlatformEvent { time: b.time, kind: PlatformEventKind::Saturated { demand: b.value } });
        }
        inside = now_inside;
    }
    events
}

/// Replays a resource-demand curve against the platform's autoscaler.
pub fn simulate_platform(platform: &PlatformSpec, demand: &StepCurve) -> Result<SimulatedSupply> {
    platform.validate()?;
    let mut events = saturation_events(platform, demand);
    let supply = match platform.policy {
        AutoscalerPolicy::Perfect => demand.map_values(|d| platform.clamp_units(d))?.simplified(),
        AutoscalerPolicy::Oscillating { period, amplitude } => oscillate(platform, demand, period, amplitude)?,
        AutoscalerPolicy::Reactive { up_threshold, down_threshold, provisioning_latency, cooldown } => {
            let rule = ReactiveRule { up: up_threshold, down: down_threshold, latency: provisioning_latency, cooldown };
            reactive(platform, demand, rule, &mut events)?
        }
    };
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(SimulatedSupply { supply, events })
}

fn oscillate(platform: &PlatformSpec, demand: &StepCurve, period: f64, amplitude: u32) -> Result<StepCurve> {
    let (start, end) = (demand.start_time(), demand.horizon_end());
    let half = period / 2.0;
    let mut times: Vec<f64> = demand.breakpoints().iter().map(|b| b.time).collect();
    let mut k = 1u64;
    loop {
        let t = start + half * k as f64;
        if t >= end {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let a = f64::from(amplitude);
    let points = times
        .into_iter()
        .map(|t| {
            let base = platform.required_units(demand.value_at(t).expect("inside horizon"));
            let phase = (((t - start) / half).floor() as u64) % 2;
            let v = if phase == 0 { base + a } else { base - a };
            (t, platform.clamp_units(v))
        })
        .collect();
    Ok(StepCurve::new(points, end)?.simplified())
}

#[derive(Debug, Clone, Copy)]
struct ReactiveRule {
    up: f64,
    down: f64,
    latency: f64,
    cooldown: f64,
}

fn reactive(
    platform: &PlatformSpec,
    demand: &StepCurve,
    rule: ReactiveRule,
    events: &mut Vec<PlatformEvent>,
) -> Result<StepCurve> {
    let (start, end) = (demand.start_time(), demand.horizon_end());
    let bps = demand.breakpoints();
    let mut supply = platform.required_units(bps[0].value);
    let mut points = vec![(start, supply)];
    // (completion time, target), in completion order.
    let mut pending: std::collections::VecDeque<(f64, f64)> = Default::default();
    let mut cooldown_until = f64::NEG_INFINITY;
    let mut next_bp = 1;
    let mut t = start;
    loop {
        let d = demand.value_at(t).expect("inside horizon");
        while let Some(&(done, target)) = pending.front() {
            if done > t {
                break;
            }
            pending.pop_front();
            if target != supply {
                supply = target;
                if points.last().map(|p| p.0) == Some(done) {
                    points.pop();
                }
                points.push((done, supply));
            }
        }
        let committed = pending.back().map_or(supply, |p| p.1);
        let want = platform.required_units(d);
        let wants_change = (d > rule.up * committed && want > committed) || (d < rule.down * committed && want < committed);
        let blocked = wants_change && t < cooldown_until;
        if wants_change && !blocked {
            let effective = t + rule.latency;
            events.push(PlatformEvent { time: t, kind: PlatformEventKind::Decision { from: committed, to: want, effective } });
            if rule.latency == 0.0 {
                supply = want;
                if points.last().map(|p| p.0) == Some(t) {
                    points.pop();
                }
                points.push((t, supply));
            } else {
                pending.push_back((effective, want));
            }
            cooldown_until = t + rule.cooldown;
        }

        let mut next = f64::INFINITY;
        if next_bp < bps.len() {
            next = next.min(bps[next_bp].time);
        }
        if let Some(&(done, _)) = pending.front() {
            next = next.min(done);
        }
        if blocked {
            next = next.min(cooldown_until);
        }
        if !(next < end) {
            break;
        }
        t = next;
        while next_bp < bps.len() && bps[next_bp].time <= t {
            next_bp += 1;
        }
    }
    Ok(StepCurve::new(points, end)?.simplified())
}

/// A platform with a pinned allocation, for matching-table derivation.
#[derive(Debug, Clone)]
pub struct SimulatedPlatform {
    spec: PlatformSpec,
    intensity: f64,
    units: u32,
}

impl SimulatedPlatform {
    pub fn new(spec: PlatformSpec) -> Result<Self> {
        spec.validate()?;
        let units = spec.min_units;
        Ok(Self { spec, intensity: 0.0, units })
    }

    pub fn spec(&self) -> &PlatformSpec {
        &self.spec
    }
}

impl ScalingProbe for SimulatedPlatform {
    fn scaling_bounds(&self) -> (u32, u32) {
        (self.spec.min_units, self.spec.max_units)
    }

    fn set_intensity(&mut self, intensity: f64) {
        self.intensity = intensity;
    }

    fn set_allocation(&mut self, units: u32) {
        self.units = units.clamp(self.spec.min_units, self.spec.max_units);
    }

    fn advance(&mut self, _dt: f64) -> ProbeObservation {
        ProbeObservation {
            active_units: self.units,
            slo_met: self.spec.slo.met(self.intensity, self.units, self.spec.unit_capacity),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity;
    use crate::traces::CurvePair;

    fn platform(policy: AutoscalerPolicy) -> PlatformSpec {
        PlatformSpec { unit_capacity: 100.0, min_units: 1, max_units: 10, policy, slo: Slo::Utilization { max: 1.0 } }
    }

    fn step_demand() -> StepCurve {
        StepCurve::new(vec![(0.0, 2.0), (600.0, 3.0)], 1200.0).unwrap()
    }

    fn metrics(demand: &StepCurve, supply: &StepCurve) -> elasticity::ElasticityMetrics {
        elasticity::evaluate(&CurvePair::new(demand.clone(), supply.clone()).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn perfect_policy_tracks_demand() {
        let d = step_demand();
        let out = simulate_platform(&platform(AutoscalerPolicy::Perfect), &d).unwrap();
        assert_eq!(out.supply, d);
        assert!(metrics(&d, &out.supply).is_zero());
    }

    #[test]
    fn reactive_latency_gives_lag_rectangle() {
        let d = step_demand();
        let out = simulate_platform(&platform(AutoscalerPolicy::reactive(120.0, 0.0)), &d).unwrap();
        let m = metrics(&d, &out.supply);
        assert!((m.timeshare_u - 0.1).abs() < 1e-12);
        assert!((m.accuracy_u - 0.1).abs() < 1e-12);
        assert_eq!(m.accuracy_o, 0.0);
        assert_eq!(out.events.len(), 1);
    }

    #[test]
    fn reactive_scales_down_and_honours_cooldown() {
        let d = StepCurve::new(vec![(0.0, 4.0), (100.0, 8.0), (110.0, 1.0)], 400.0).unwrap();
        let out = simulate_platform(&platform(AutoscalerPolicy::reactive(10.0, 50.0)), &d).unwrap();
        // Up decision at 100 (active 110); down blocked until 150 (active 160).
        assert_eq!(out.supply.value_at(105.0), Some(4.0));
        assert_eq!(out.supply.value_at(115.0), Some(8.0));
        assert_eq!(out.supply.value_at(155.0), Some(8.0));
        assert_eq!(out.supply.value_at(165.0), Some(1.0));
    }

    #[test]
    fn pending_actions_count_as_committed_supply() {
        // Demand rises twice while the first action is pending.
        let d = StepCurve::new(vec![(0.0, 1.0), (10.0, 3.0), (20.0, 3.0), (30.0, 5.0)], 200.0).unwrap();
        let out = simulate_platform(&platform(AutoscalerPolicy::reactive(50.0, 0.0)), &d).unwrap();
        let decisions: Vec<_> = out
            .events
            .iter()
            .filter_map(|e| match e.kind {
                PlatformEventKind::Decision { from, to, .. } => Some((e.time, from, to)),
                _ => None,
            })
            .collect();
        assert_eq!(decisions, vec![(10.0, 1.0, 3.0), (30.0, 3.0, 5.0)]);
        assert_eq!(out.supply.value_at(70.0), Some(3.0));
        assert_eq!(out.supply.value_at(90.0), Some(5.0));
    }

    #[test]
    fn oscillating_policy_has_positive_jitter() {
        let d = StepCurve::constant(3.0, 0.0, 1200.0).unwrap();
        let p = platform(AutoscalerPolicy::Oscillating { period: 240.0, amplitude: 1 });
        let out = simulate_platform(&p, &d).unwrap();
        assert!(metrics(&d, &out.supply).jitter > 0.0);
        assert_eq!(out.supply.value_at(10.0), Some(4.0));
        assert_eq!(out.supply.value_at(130.0), Some(2.0));
    }

    #[test]
    fn saturation_is_an_event() {
        let d = StepCurve::new(vec![(0.0, 2.0), (10.0, 14.0), (20.0, 2.0)], 30.0).unwrap();
        let out = simulate_platform(&platform(AutoscalerPolicy::Perfect), &d).unwrap();
        assert_eq!(out.supply.max_value(), 10.0);
        assert!(out.events.iter().any(|e| matches!(e.kind, PlatformEventKind::Saturated { demand } if demand == 14.0)));
    }

    #[test]
    fn spec_validation() {
        let mut p = platform(AutoscalerPolicy::Perfect);
        p.min_units = 0;
        assert!(p.validate().is_err());
        let p = platform(AutoscalerPolicy::Reactive { up_threshold: 0.5, down_threshold: 0.8, provisioning_latency: 0.0, cooldown: 0.0 });
        assert!(p.validate().is_err());
        let p = platform(AutoscalerPolicy::reactive(-1.0, 0.0));
        assert!(p.validate().is_err());
    }

    #[test]
    fn response_time_slo() {
        let slo = Slo::ResponseTime { max: 0.1 };
        // Two units of 100/s: 1 / (200 − w) ≤ 0.1 iff w ≤ 190.
        assert!(slo.met(190.0, 2, 100.0));
        assert!(!slo.met(191.0, 2, 100.0));
        assert!(!slo.met(250.0, 2, 100.0));
    }
}
