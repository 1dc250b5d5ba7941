use serde::{Deserialize, Serialize};

use crate::geometry::RationalPoint;
use crate::rational::{ln_rational, Rational};

/// One completed round: I offered `offered` (with `digits` in the unfolded
/// game) and II chose `chosen`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Round {
    pub offered: Vec<RationalPoint>,
    pub digits: Vec<u64>,
    pub chosen: RationalPoint,
}

/// Alternating history `(F₀, x₀, F₁, x₁, …)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Position {
    rounds: Vec<Round>,
}

impl Position {
    pub fn new() -> Self {
        Position::default()
    }

    pub fn from_rounds(rounds: Vec<Round>) -> Self {
        Position { rounds }
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    /// Index of the round about to be played.
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn last_chosen(&self) -> Option<&RationalPoint> {
        self.rounds.last().map(|r| &r.chosen)
    }

    pub fn chosen(&self) -> impl Iterator<Item = &RationalPoint> {
        self.rounds.iter().map(|r| &r.chosen)
    }

    /// All witness digits played so far, in order.
    pub fn witness(&self) -> Vec<u64> {
        self.rounds.iter().flat_map(|r| r.digits.iter().copied()).collect()
    }

    pub fn push(&mut self, round: Round) {
        self.rounds.push(round);
    }

    pub fn pop(&mut self) -> Option<Round> {
        self.rounds.pop()
    }

    pub fn extended(&self, round: Round) -> Position {
        let mut p = self.clone();
        p.push(round);
        p
    }

    pub fn truncated(&self, n: usize) -> Position {
        Position { rounds: self.rounds[..n.min(self.rounds.len())].to_vec() }
    }
}

/// Witness digits with the round each was played in.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessLog {
    pub digits: Vec<u64>,
    pub round_played: Vec<usize>,
}

impl WitnessLog {
    pub fn from_position(pos: &Position) -> Self {
        let mut log = WitnessLog::default();
        for (n, r) in pos.rounds().iter().enumerate() {
            for &d in &r.digits {
                log.digits.push(d);
                log.round_played.push(n);
            }
        }
        log
    }
}

/// `S_n = Σ_{i<n} (δ ln(1/β_i) − ln|F_i|)` and its running max.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub trace: Vec<f64>,
    pub max: f64,
}

impl Default for BudgetLedger {
    fn default() -> Self {
        BudgetLedger { trace: vec![0.0], max: 0.0 }
    }
}

impl BudgetLedger {
    pub fn current(&self) -> f64 {
        *self.trace.last().unwrap()
    }

    pub fn update(&mut self, offered: usize, beta: &Rational, delta: f64) -> f64 {
        let s = budget_step(self.current(), offered, beta, delta);
        self.trace.push(s);
        self.max = self.max.max(s);
        s
    }

    /// Recomputes the ledger of a finished position.
    pub fn recompute(sizes: impl IntoIterator<Item = usize>, betas: impl Fn(usize) -> Rational, delta: f64) -> Self {
        let mut ledger = BudgetLedger::default();
        for (i, size) in sizes.into_iter().enumerate() {
            ledger.update(size, &betas(i), delta);
        }
        ledger
    }
}

/// One ledger step `S + δ ln(1/β) − ln|F|`.
pub fn budget_step(s: f64, offered: usize, beta: &Rational, delta: f64) -> f64 {
    assert!(offered >= 1, "budget update with an empty move");
    s - delta * ln_rational(beta) - (offered as f64).ln()
}
