//! Analytic multi-tenant system with processor-sharing response times.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Result, SimError};
use crate::isolation::{self, QoSObservation, TenantSystem, WorkloadSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TenantRole {
    Abiding,
    Disruptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsolationMode {
    /// One shared server; every tenant sees the response time of the total load.
    None,
    /// Capacity is partitioned in proportion to the quotas.
    FairShare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenantSpec {
    pub id: String,
    /// Requests per second the tenant is entitled to.
    pub quota: f64,
    pub role: TenantRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenantSystemSpec {
    /// Requests per second.
    pub capacity: f64,
    /// Seconds of service per request.
    pub service_demand: f64,
    pub mode: IsolationMode,
    pub tenants: Vec<TenantSpec>,
}

impl TenantSystemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity > 0.0) || !self.capacity.is_finite() {
            return Err(SimError::Spec(format!("capacity must be positive, got {}", self.capacity)));
        }
        if !(self.service_demand > 0.0) || !self.service_demand.is_finite() {
            return Err(SimError::Spec(format!("service demand must be positive, got {}", self.service_demand)));
        }
        let mut seen = BTreeSet::new();
        for t in &self.tenants {
            if !seen.insert(t.id.as_str()) {
                return Err(SimError::Spec(format!("duplicate tenant `{}`", t.id)));
            }
            if !(t.quota > 0.0) || !t.quota.is_finite() {
                return Err(SimError::Spec(format!("tenant `{}` has invalid quota {}", t.id, t.quota)));
            }
        }
        let quotas = self.quota_total();
        if quotas > self.capacity * (1.0 + 1e-12) {
            return Err(SimError::Spec(format!("quotas sum to {quotas}, above the capacity {}", self.capacity)));
        }
        for role in [TenantRole::Abiding, TenantRole::Disruptive] {
            if !self.tenants.iter().any(|t| t.role == role) {
                return Err(SimError::Spec(format!("no {role:?} tenant").to_lowercase()));
            }
        }
        Ok(())
    }

    fn quota_total(&self) -> f64 {
        self.tenants.iter().map(|t| t.quota).sum()
    }

    /// Every tenant loaded at its quota.
    pub fn quota_workload(&self) -> Result<WorkloadSet> {
        let group = |role| self.tenants.iter().filter(|t| t.role == role).map(|t| (t.id.clone(), t.quota)).collect();
        Ok(WorkloadSet::new(group(TenantRole::Abiding), group(TenantRole::Disruptive))?)
    }
}

fn response_time(service_demand: f64, load: f64, capacity: f64) -> Option<f64> {
    let rho = load / capacity;
    (rho < 1.0).then(|| service_demand / (1.0 - rho))
}

/// Per-tenant response times. Shared mode: `z = s / (1 − W/C)` for all tenants, or
/// saturated for all once `W ≥ C`. Fair share: tenant `t` owns `C·q_t / Σq` and sees
/// `z = s / (1 − w_t / c_t)` independently of the others.
pub fn simulate_tenants(system: &TenantSystemSpec, workloads: &WorkloadSet) -> Result<QoSObservation> {
    system.validate()?;
    let quotas: BTreeMap<&str, f64> = system.tenants.iter().map(|t| (t.id.as_str(), t.quota)).collect();
    let ids = workloads.abiding().keys().chain(workloads.disruptive().keys());
    let mut qos = BTreeMap::new();
    let shared = response_time(system.service_demand, workloads.total(), system.capacity);
    let quota_total = system.quota_total();
    for id in ids {
        let quota = *quotas.get(id.as_str()).ok_or_else(|| SimError::Spec(format!("unknown tenant `{id}`")))?;
        let z = match system.mode {
            IsolationMode::None => shared,
            IsolationMode::FairShare => {
                let share = system.capacity * quota / quota_total;
                response_time(system.service_demand, workloads.load(id).unwrap_or(0.0), share)
            }
        };
        qos.insert(id.clone(), z);
    }
    Ok(QoSObservation::new(workloads.clone(), qos)?)
}

/// [`TenantSystem`] adapter over [`simulate_tenants`].
#[derive(Debug, Clone)]
pub struct SimulatedTenantSystem {
    spec: TenantSystemSpec,
    observations: usize,
}

impl SimulatedTenantSystem {
    pub fn new(spec: TenantSystemSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, observations: 0 })
    }

    /// Number of workloads observed so far.
    pub fn observations(&self) -> usize {
        self.observations
    }
}

impl TenantSystem for SimulatedTenantSystem {
    fn observe(&mut self, workloads: &WorkloadSet) -> isolation::Result<QoSObservation> {
        self.observations += 1;
        simulate_tenants(&self.spec, workloads).map_err(|e| match e {
            SimError::Isolation(e) => e,
            other => isolation::IsolationError::Setup(other.to_string()),
        })
    }
}
