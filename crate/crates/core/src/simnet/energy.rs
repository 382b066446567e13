//! Energy and CO2-proxy accounting.
//!
//! Energy is counted in integer picojoules so the cost comparison is exact;
//! joule and gram figures are derived from those totals.

use serde::{Deserialize, Serialize};

use crate::redundancy::{tau, CostModel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyModel {
    pub pj_per_hash_op: u64,
    pub pj_per_instruction: u64,
    /// Cost of one dispatch message; feeds the coordination term `c`.
    pub pj_per_message: u64,
    pub grams_co2_per_joule: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        // roughly: a CPU SHA-256 at 1 uJ, an interpreted instruction at
        // 1 nJ, a small network message at 10 uJ, and a 400 g/kWh grid
        EnergyModel {
            pj_per_hash_op: 1_000_000,
            pj_per_instruction: 1_000,
            pj_per_message: 10_000_000,
            grams_co2_per_joule: 400.0 / 3.6e6,
        }
    }
}

/// Counters an energy account is computed from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyCounters {
    pub hash_ops: u64,
    pub vm_instructions: u64,
    pub clone_executions: u64,
    pub dispatch_messages: u64,
    pub miners: u64,
    pub k: u64,
}

/// Terms of `tau = (k*T + c) - p*w`, all in picojoules except `k`, `w`, and
/// the instruction mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauTerms {
    pub k: u64,
    /// `floor(vm_instructions / clone_executions)`, zero without clones.
    pub mean_clone_instructions: u64,
    /// `T`: mean clone instructions times the per-instruction cost.
    pub clone_cost_pj: u64,
    /// `c`: dispatch messages times the per-message cost.
    pub coordination_pj: u64,
    /// `p`: cost of one hash-op.
    pub pow_cost_pj: u64,
    /// `w`: miner count.
    pub pow_miners: u64,
    pub tau_pj: i128,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub pow_pj: u128,
    pub povm_pj: u128,
    pub joules_pow: f64,
    pub joules_povm: f64,
    pub grams_co2: f64,
    pub tau: TauTerms,
}

pub fn account_energy(c: &EnergyCounters, m: &EnergyModel) -> EnergyReport {
    let pow_pj = c.hash_ops as u128 * m.pj_per_hash_op as u128;
    let povm_pj = c.vm_instructions as u128 * m.pj_per_instruction as u128;
    let joules_pow = pow_pj as f64 * 1e-12;
    let joules_povm = povm_pj as f64 * 1e-12;
    let mean_clone_instructions = c
        .vm_instructions
        .checked_div(c.clone_executions)
        .unwrap_or(0);
    let model = CostModel {
        k: c.k,
        clone_cost: mean_clone_instructions.saturating_mul(m.pj_per_instruction),
        coordination: c.dispatch_messages.saturating_mul(m.pj_per_message),
        pow_cost: m.pj_per_hash_op,
        pow_miners: c.miners,
    };
    EnergyReport {
        pow_pj,
        povm_pj,
        joules_pow,
        joules_povm,
        grams_co2: (joules_pow + joules_povm) * m.grams_co2_per_joule,
        tau: TauTerms {
            k: model.k,
            mean_clone_instructions,
            clone_cost_pj: model.clone_cost,
            coordination_pj: model.coordination,
            pow_cost_pj: model.pow_cost,
            pow_miners: model.pow_miners,
            tau_pj: tau(&model),
        },
    }
}
