use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::engine::{budget_step, GameParams, Position, Round, StrategyError, StrategyII};
use crate::geometry::RationalPoint;
use crate::rational::{format_rational, to_f64, Rational};

use super::select::{extwit_extend, SimEntry, SimulationState};
use super::witness::WitnessEnumeration;

/// Audit of one simulation entry after a round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub witness: Vec<u64>,
    #[serde(rename = "E")]
    pub e_size: usize,
    #[serde(rename = "F")]
    pub f_size: usize,
    pub consistent: bool,
    pub simulation: bool,
    /// `|E| ≥ β^{s−δ} |F|`, decided exactly.
    pub size_bound: bool,
    /// The entry's ledger at δ over its `E` sets.
    pub s_delta: f64,
    /// `s_delta` does not exceed the real ledger at `s`.
    pub chain: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRound {
    pub round: usize,
    pub beta: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub added: Option<Vec<u64>>,
    /// The real ledger at `s` over the offered sets.
    pub s_real: f64,
    pub entries: Vec<AuditEntry>,
}

impl AuditRound {
    pub fn all_ok(&self) -> bool {
        self.entries.iter().all(|e| e.consistent && e.simulation && e.size_bound && e.chain)
    }
}

/// Player II in the `s`-game built from an unfolded δ-game strategy τ.
///
/// Keeps one simulation of the real run per enumerated partial witness,
/// answering with a point τ would pick in every simulation. A new witness
/// joins (as a copy of the entry for its parent, offered its last digit)
/// once `β_n^{s−δ} < 1/(entries + 1)`, at most one per round.
pub struct TransferStrategy {
    tau: Box<dyn StrategyII + Send>,
    delta: Rational,
    s: Rational,
    enumeration: WitnessEnumeration,
    sim: SimulationState,
    audit: Vec<AuditRound>,
    check: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("transfer needs 0 < δ < s, got δ = {delta}, s = {s}")]
pub struct TransferError {
    pub delta: String,
    pub s: String,
}

impl TransferStrategy {
    pub fn new(tau: Box<dyn StrategyII + Send>, delta: Rational, s: Rational, digit_cap: u64) -> Result<Self, TransferError> {
        if !delta.is_positive() || s <= delta {
            return Err(TransferError { delta: format_rational(&delta), s: format_rational(&s) });
        }
        Ok(TransferStrategy {
            tau,
            delta,
            s,
            enumeration: WitnessEnumeration::new(digit_cap),
            sim: SimulationState::fresh(),
            audit: Vec::new(),
            check: true,
        })
    }

    /// Skips the per-round replay audit (the size and chain checks remain).
    pub fn without_replay_check(mut self) -> Self {
        self.check = false;
        self
    }

    pub fn simulation(&self) -> &SimulationState {
        &self.sim
    }

    pub fn audit(&self) -> &[AuditRound] {
        &self.audit
    }

    pub fn gap(&self) -> Rational {
        &self.s - &self.delta
    }

    pub fn digit_cap(&self) -> u64 {
        self.enumeration.cap
    }

    /// First round at which `m` entries are allowed.
    pub fn trigger_round(&self, params: &GameParams, m: usize) -> Option<usize> {
        (0..=params.horizon()).find(|&i| allows(&params.beta(i), &self.gap(), m))
    }

    fn reset(&mut self) {
        self.sim = SimulationState::fresh();
        self.audit.clear();
    }

    fn sim_params(&self, params: &GameParams) -> Result<GameParams, StrategyError> {
        params.with_delta(to_f64(&self.delta)).map_err(|e| StrategyError::new(e.to_string()))
    }
}

/// `m < β^{−g}`, i.e. `β^g < 1/m`, decided exactly for rational `g = p/q`.
pub fn allows(beta: &Rational, gap: &Rational, m: usize) -> bool {
    let p = gap.numer().to_u32().expect("gap numerator fits u32");
    let q = gap.denom().to_u32().expect("gap denominator fits u32");
    // m^q · a^p < b^p for β = a/b
    BigInt::from(m).pow(q) * beta.numer().pow(p) < beta.denom().pow(p)
}

/// `|E| ≥ β^g |F|` exactly: `|E|^q b^p ≥ |F|^q a^p`.
pub fn size_bound_holds(e: usize, f: usize, beta: &Rational, gap: &Rational) -> bool {
    let p = gap.numer().to_u32().expect("gap numerator fits u32");
    let q = gap.denom().to_u32().expect("gap denominator fits u32");
    BigInt::from(e).pow(q) * beta.denom().pow(p) >= BigInt::from(f).pow(q) * beta.numer().pow(p)
}

impl StrategyII for TransferStrategy {
    fn choose(&mut self, params: &GameParams, pos: &Position, offered: &[RationalPoint], _digits: &[u64]) -> Result<RationalPoint, StrategyError> {
        let n = pos.len();
        if n == 0 {
            self.reset();
        }
        if self.sim.entries.iter().any(|e| e.position.len() != n) {
            return Err(StrategyError::new(format!("simulations are out of step with the real position at round {n}")));
        }
        let sim_params = self.sim_params(params)?;
        let beta = params.beta(n);
        let gap = self.gap();
        let mut sorted = offered.to_vec();
        sorted.sort();
        let mut digits: Vec<Vec<u64>> = vec![Vec::new(); self.sim.len()];
        let mut added = None;
        let k = self.sim.len();
        if allows(&beta, &gap, k + 1) {
            let w = self.enumeration.get(k as u64);
            let parent = self.enumeration.index_of(&w[..w.len() - 1]).expect("prefix is enumerated") as usize;
            let copy = SimEntry { position: self.sim.entries[parent].position.clone() };
            self.sim.entries.push(copy);
            digits.push(vec![*w.last().unwrap()]);
            added = Some(w);
        }
        let ext = extwit_extend(self.tau.as_mut(), &sim_params, &self.sim, &sorted, &digits)?;
        self.sim.advance(&ext, &sorted, &digits);
        let x = sorted[ext.chosen].clone();

        let real = pos.extended(Round { offered: sorted.clone(), digits: Vec::new(), chosen: x.clone() });
        let s_f = to_f64(&self.s);
        let d_f = to_f64(&self.delta);
        let s_real = real.rounds().iter().enumerate().fold(0.0, |acc, (i, r)| budget_step(acc, r.offered.len(), &params.beta(i), s_f));
        let consistency = if self.check { self.sim.consistency(self.tau.as_mut(), &sim_params)? } else { vec![true; self.sim.len()] };
        let simulates = self.sim.simulates(&real);
        let entries = self
            .sim
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let s_delta = e.position.rounds().iter().enumerate().fold(0.0, |acc, (j, r)| budget_step(acc, r.offered.len(), &params.beta(j), d_f));
                let e_size = e.position.rounds().last().unwrap().offered.len();
                let size_bound = e.position.rounds().iter().zip(real.rounds()).enumerate().all(|(j, (se, re))| size_bound_holds(se.offered.len(), re.offered.len(), &params.beta(j), &gap));
                AuditEntry {
                    witness: e.witness(),
                    e_size,
                    f_size: sorted.len(),
                    consistent: consistency[i],
                    simulation: simulates[i],
                    size_bound,
                    s_delta,
                    chain: s_delta <= s_real + 1e-9 * s_real.abs().max(1.0),
                }
            })
            .collect();
        self.audit.push(AuditRound { round: n, beta: format_rational(&beta), added, s_real, entries });
        Ok(x)
    }

    fn name(&self) -> String {
        format!("transfer:{}:{}:{}:D={}", self.tau.name(), format_rational(&self.delta), format_rational(&self.s), self.enumeration.cap)
    }

    fn reseed(&mut self, seed: u64) {
        self.tau.reseed(seed);
        self.reset();
    }
}
