use std::collections::BTreeMap;

use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::params::GameParams;
use super::position::{BudgetLedger, Position, Round};
use super::transcript::{RoundRecord, RunTranscript};
use crate::geometry::{first_close_pair, Ball, RationalPoint};
use crate::rational::{format_rational, int, Rational};
use crate::targets::{RelationOracle, TargetSet};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{0}")]
pub struct StrategyError(pub String);

impl StrategyError {
    pub fn new(msg: impl Into<String>) -> Self {
        StrategyError(msg.into())
    }
}

/// Player I's move: the finite set `F` and, in the unfolded game, any
/// witness digits played alongside it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MoveI {
    pub points: Vec<RationalPoint>,
    pub digits: Vec<u64>,
}

impl MoveI {
    pub fn points(points: Vec<RationalPoint>) -> Self {
        MoveI { points, digits: Vec::new() }
    }
}

pub trait StrategyI {
    fn next_move(&mut self, params: &GameParams, pos: &Position) -> Result<MoveI, StrategyError>;

    fn name(&self) -> String;

    /// Folds the run seed into any internal randomness.
    fn reseed(&mut self, _seed: u64) {}
}

pub trait StrategyII {
    /// Picks a point of `offered`; `digits` are the witness digits offered
    /// alongside it (always empty in the folded game).
    fn choose(
        &mut self,
        params: &GameParams,
        pos: &Position,
        offered: &[RationalPoint],
        digits: &[u64],
    ) -> Result<RationalPoint, StrategyError>;

    fn name(&self) -> String;

    fn reseed(&mut self, _seed: u64) {}
}

impl<T: StrategyI + ?Sized> StrategyI for Box<T> {
    fn next_move(&mut self, params: &GameParams, pos: &Position) -> Result<MoveI, StrategyError> {
        (**self).next_move(params, pos)
    }
    fn name(&self) -> String {
        (**self).name()
    }
    fn reseed(&mut self, seed: u64) {
        (**self).reseed(seed)
    }
}

impl<T: StrategyII + ?Sized> StrategyII for Box<T> {
    fn choose(&mut self, params: &GameParams, pos: &Position, offered: &[RationalPoint], digits: &[u64]) -> Result<RationalPoint, StrategyError> {
        (**self).choose(params, pos, offered, digits)
    }
    fn name(&self) -> String {
        (**self).name()
    }
    fn reseed(&mut self, seed: u64) {
        (**self).reseed(seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Player {
    I,
    II,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum MoveViolation {
    #[error("empty move")]
    Empty,
    #[error("point {point:?} is not in dimension {expected}")]
    WrongDimension { point: RationalPoint, expected: usize },
    #[error("{first:?} and {second:?} are closer than {separation}")]
    NotSeparated { first: RationalPoint, second: RationalPoint, separation: String },
    #[error("{point:?} is not inside B({center:?}, {radius})")]
    OutsideBall { point: RationalPoint, center: RationalPoint, radius: String },
}

/// Open ball player I must play inside at the next round; `None` when
/// unconstrained (round 0 without a start ball).
pub fn containment_ball(params: &GameParams, pos: &Position) -> Option<Ball> {
    match pos.last_chosen() {
        Some(x) => {
            let i = pos.len() - 1;
            let radius = (Rational::one() - params.beta(i)) * params.rho(i);
            Some(Ball { center: x.clone(), radius })
        }
        None => params.start_ball().cloned(),
    }
}

/// Checks `F` is nonempty, `3ρ_i`-separated and strictly inside the
/// containment ball.
pub fn validate_move_i(params: &GameParams, pos: &Position, points: &[RationalPoint]) -> Result<(), MoveViolation> {
    if points.is_empty() {
        return Err(MoveViolation::Empty);
    }
    if let Some(p) = points.iter().find(|p| p.dim() != params.dim()) {
        return Err(MoveViolation::WrongDimension { point: p.clone(), expected: params.dim() });
    }
    let sep = int(3) * params.rho(pos.len());
    if let Some((a, b)) = first_close_pair(points, &sep) {
        return Err(MoveViolation::NotSeparated { first: points[a].clone(), second: points[b].clone(), separation: format_rational(&sep) });
    }
    if let Some(ball) = containment_ball(params, pos) {
        if let Some(p) = points.iter().find(|p| !ball.contains_open(p)) {
            return Err(MoveViolation::OutsideBall { point: p.clone(), center: ball.center.clone(), radius: format_rational(&ball.radius) });
        }
    }
    Ok(())
}

/// `B(x_{n−1}, 2ρ_{n−1})`, which contains the limit of every legal
/// continuation.
pub fn localize_limit(params: &GameParams, pos: &Position) -> Option<Ball> {
    let x = pos.last_chosen()?;
    let n = pos.len() - 1;
    Some(Ball { center: x.clone(), radius: int(2) * params.rho(n) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameMode {
    Folded,
    Unfolded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    IForfeits { round: usize, violation: MoveViolation },
    IiForfeits { round: usize, point: RationalPoint },
    Aborted { player: Player, round: usize, message: String },
    /// The limit is provably outside the target after `after_rounds` rounds.
    ILostCertified { after_rounds: usize },
    #[serde(rename = "open-consistent-with-I")]
    OpenConsistentWithI { rounds: usize },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::IForfeits { .. } => "i-forfeits",
            Outcome::IiForfeits { .. } => "ii-forfeits",
            Outcome::Aborted { .. } => "aborted",
            Outcome::ILostCertified { .. } => "i-lost-certified",
            Outcome::OpenConsistentWithI { .. } => "open-consistent-with-I",
        }
    }

    pub fn is_forfeit(&self) -> bool {
        matches!(self, Outcome::IForfeits { .. } | Outcome::IiForfeits { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetHealth {
    pub max_s: f64,
    pub ln_c: f64,
    pub healthy: bool,
}

/// Longest stretch of rounds without a new witness digit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarvationReport {
    pub digits_played: usize,
    pub longest_gap: usize,
    pub window: usize,
    pub starved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub budget: BudgetHealth,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starvation: Option<StarvationReport>,
}

/// Finite-horizon proxy for "lim x_n ∈ A": certified loss at the first
/// round whose localization ball provably misses the target (or, given a
/// relation, the piece named by the witness so far).
pub fn finite_horizon_verdict(params: &GameParams, pos: &Position, target: &TargetSet, relation: Option<&RelationOracle>) -> Outcome {
    let mut witness: Vec<u64> = Vec::new();
    for (i, round) in pos.rounds().iter().enumerate() {
        witness.extend(&round.digits);
        let two_rho = int(2) * params.rho(i);
        let refuted = target.dist_exceeds_at_scale(&round.chosen, &params.rho(i), &two_rho);
        let refuted_by_witness = relation.is_some_and(|rel| !witness.is_empty() && rel.refutes(&round.chosen, &witness, &two_rho));
        if refuted || refuted_by_witness {
            return Outcome::ILostCertified { after_rounds: i + 1 };
        }
    }
    Outcome::OpenConsistentWithI { rounds: pos.len() }
}

pub fn budget_health(params: &GameParams, ledger: &BudgetLedger) -> BudgetHealth {
    let ln_c = params.ln_budget_c();
    BudgetHealth { max_s: ledger.max, ln_c, healthy: ledger.max <= ln_c }
}

pub fn starvation_report(pos: &Position, window: usize) -> StarvationReport {
    let mut longest = 0;
    let mut gap = 0;
    for r in pos.rounds() {
        if r.digits.is_empty() {
            gap += 1;
            longest = longest.max(gap);
        } else {
            gap = 0;
        }
    }
    StarvationReport { digits_played: pos.witness().len(), longest_gap: longest, window, starved: longest >= window }
}

#[derive(Clone, Debug)]
pub struct PlayConfig {
    pub rounds: usize,
    pub seed: u64,
    pub mode: GameMode,
    /// Rounds without a new digit before the unfolded run is flagged.
    pub starvation_window: usize,
    pub relation: Option<RelationOracle>,
}

impl PlayConfig {
    pub fn folded(rounds: usize, seed: u64) -> Self {
        PlayConfig { rounds, seed, mode: GameMode::Folded, starvation_window: 10, relation: None }
    }

    pub fn unfolded(rounds: usize, seed: u64, relation: Option<RelationOracle>) -> Self {
        PlayConfig { rounds, seed, mode: GameMode::Unfolded, starvation_window: 10, relation }
    }
}

/// Runs one game. Every move is validated; a forfeit ends the run with the
/// offending move kept in the last record.
pub fn play(
    params: &GameParams,
    sigma: &mut dyn StrategyI,
    tau: &mut dyn StrategyII,
    target: &TargetSet,
    config: &PlayConfig,
) -> RunTranscript {
    assert!(config.rounds <= params.horizon(), "rounds exceed the horizon");
    sigma.reseed(config.seed);
    tau.reseed(config.seed);
    let unfolded = config.mode == GameMode::Unfolded;
    let mut pos = Position::new();
    let mut ledger = BudgetLedger::default();
    let mut records = Vec::new();
    let mut ended: Option<Outcome> = None;

    for n in 0..config.rounds {
        let mv = match sigma.next_move(params, &pos) {
            Ok(mv) => mv,
            Err(e) => {
                ended = Some(Outcome::Aborted { player: Player::I, round: n, message: e.0 });
                break;
            }
        };
        let mut offered = mv.points;
        offered.sort();
        let digits = if unfolded { mv.digits } else { Vec::new() };
        if let Err(violation) = validate_move_i(params, &pos, &offered) {
            records.push(RoundRecord { round: n, offered, chosen: None, digits, s: ledger.current() });
            ended = Some(Outcome::IForfeits { round: n, violation });
            break;
        }
        let x = match tau.choose(params, &pos, &offered, &digits) {
            Ok(x) => x,
            Err(e) => {
                records.push(RoundRecord { round: n, offered, chosen: None, digits, s: ledger.current() });
                ended = Some(Outcome::Aborted { player: Player::II, round: n, message: e.0 });
                break;
            }
        };
        let s = ledger.update(offered.len(), &params.beta(n), params.delta());
        let legal = offered.binary_search(&x).is_ok();
        records.push(RoundRecord { round: n, offered: offered.clone(), chosen: Some(x.clone()), digits: digits.clone(), s });
        if !legal {
            ended = Some(Outcome::IiForfeits { round: n, point: x });
            break;
        }
        pos.push(Round { offered, digits, chosen: x });
    }

    let outcome = ended.unwrap_or_else(|| finite_horizon_verdict(params, &pos, target, config.relation.as_ref()));
    let verdict = Verdict {
        outcome,
        budget: budget_health(params, &ledger),
        starvation: unfolded.then(|| starvation_report(&pos, config.starvation_window)),
    };
    RunTranscript {
        params: params.clone(),
        seed: config.seed,
        mode: config.mode,
        players: [("I".to_string(), sigma.name()), ("II".to_string(), tau.name())].into_iter().collect::<BTreeMap<_, _>>(),
        target: target.to_string(),
        records,
        verdict,
    }
}
