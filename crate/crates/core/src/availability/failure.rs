//! Analytic failure probability of a deployment spread over availability zones.

use serde::{Deserialize, Serialize};

use super::{AvailabilityError, Result};

/// Per-period failure probabilities; failure causes are treated as mutually exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FailureModelRepr")]
pub struct FailureModel {
    pub p_pow: f64,
    pub p_aznet: f64,
    /// Physical host failure.
    pub p_ph: f64,
    pub p_vm: f64,
    /// VMs per availability zone.
    pub m: u32,
    /// Availability zones.
    pub n: u32,
}

#[derive(Deserialize)]
struct FailureModelRepr {
    p_pow: f64,
    p_aznet: f64,
    p_ph: f64,
    p_vm: f64,
    m: u32,
    n: u32,
}

impl TryFrom<FailureModelRepr> for FailureModel {
    type Error = AvailabilityError;

    fn try_from(r: FailureModelRepr) -> Result<Self> {
        FailureModel::new(r.p_pow, r.p_aznet, r.p_ph, r.p_vm, r.m, r.n)
    }
}

impl FailureModel {
    pub fn new(p_pow: f64, p_aznet: f64, p_ph: f64, p_vm: f64, m: u32, n: u32) -> Result<Self> {
        for (name, p) in [("P_pow", p_pow), ("P_aznet", p_aznet), ("P_ph", p_ph), ("P_vm", p_vm)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(AvailabilityError::InvalidModel(format!("{name} = {p} is not a probability")));
            }
        }
        if p_pow + p_aznet > 1.0 {
            return Err(AvailabilityError::InvalidModel(format!("P_pow + P_aznet = {} exceeds 1", p_pow + p_aznet)));
        }
        if p_ph + p_vm > 1.0 {
            return Err(AvailabilityError::InvalidModel(format!("P_ph + P_vm = {} exceeds 1", p_ph + p_vm)));
        }
        if m == 0 || n == 0 {
            return Err(AvailabilityError::InvalidModel("M and N must be at least 1".into()));
        }
        Ok(Self { p_pow, p_aznet, p_ph, p_vm, m, n })
    }

    /// `P_OTH`: zone-wide power or network failure.
    pub fn p_oth(&self) -> f64 {
        self.p_pow + self.p_aznet
    }

    /// `P_NODE`: failure of a single VM or its host.
    pub fn p_node(&self) -> f64 {
        self.p_ph + self.p_vm
    }

    /// `P_OTH + P_NODE^M`.
    pub fn az_failure_prob(&self) -> f64 {
        let p = self.p_oth() + self.p_node().powi(self.m as i32);
        if p > 1.0 {
            log::warn!("zone failure probability {p} exceeds 1; the additive model is inconsistent for these inputs");
        }
        p
    }

    /// `(P_OTH + P_NODE^M)^N`: all zones down at once.
    pub fn overall_failure_prob(&self) -> f64 {
        self.az_failure_prob().powi(self.n as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_model() {
        let m = FailureModel::new(0.01, 0.01, 0.05, 0.05, 2, 1).unwrap();
        assert!((m.az_failure_prob() - 0.03).abs() < 1e-15);
        assert_eq!(m.overall_failure_prob(), m.az_failure_prob());
        let m2 = FailureModel { n: 2, ..m };
        assert!((m2.overall_failure_prob() - 9e-4).abs() < 1e-15);
    }

    #[test]
    fn degenerate_components() {
        let m = FailureModel::new(0.0, 0.0, 0.1, 0.2, 1, 1).unwrap();
        assert!((m.az_failure_prob() - 0.3).abs() < 1e-15);
        let m = FailureModel::new(0.02, 0.03, 0.0, 0.0, 3, 1).unwrap();
        assert_eq!(m.az_failure_prob(), m.p_oth());
    }

    #[test]
    fn validation() {
        assert!(FailureModel::new(-0.1, 0.0, 0.0, 0.0, 1, 1).is_err());
        assert!(FailureModel::new(0.6, 0.6, 0.0, 0.0, 1, 1).is_err());
        assert!(FailureModel::new(0.0, 0.0, 0.7, 0.4, 1, 1).is_err());
        assert!(FailureModel::new(0.0, 0.0, 0.0, 0.0, 0, 1).is_err());
        assert!(serde_json::from_str::<FailureModel>(r#"{"p_pow":0,"p_aznet":0,"p_ph":0,"p_vm":0,"m":1,"n":0}"#).is_err());
    }

    #[test]
    fn saturated_inputs_still_evaluate() {
        let m = FailureModel::new(0.5, 0.5, 1.0, 0.0, 1, 2).unwrap();
        assert_eq!(m.az_failure_prob(), 2.0);
        assert_eq!(m.overall_failure_prob(), 4.0);
    }
}
