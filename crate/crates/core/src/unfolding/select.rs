use serde::{Deserialize, Serialize};

use crate::engine::{GameParams, Position, Round, StrategyError, StrategyII};
use crate::geometry::RationalPoint;

/// Whether element `a` has at least `|A|/n` elements at or below it in
/// every order. `ranks[i][a]` is the 1-based rank of `a` in order `i`.
pub fn linord_satisfies(ranks: &[Vec<usize>], a: usize) -> bool {
    let n = ranks.len();
    ranks.iter().all(|r| r[a] * n >= r.len())
}

/// An element below which every order keeps at least `|A|/n` elements.
/// Scans the first order from its maximum down and returns the first
/// element that qualifies; `None` only for empty input.
pub fn linord_select(ranks: &[Vec<usize>]) -> Option<usize> {
    let first = ranks.first()?;
    let mut by_first: Vec<usize> = (0..first.len()).collect();
    by_first.sort_by(|&a, &b| first[b].cmp(&first[a]));
    by_first.into_iter().find(|&a| linord_satisfies(ranks, a))
}

/// Rank maps of τ's preference on one offered set, one per simulation
/// entry. `ranks[i][k]` is the rank of `offered[k]` for entry `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankProfile {
    pub ranks: Vec<Vec<usize>>,
}

impl RankProfile {
    /// `{y : y ⪯_i x}` as indices in offered order.
    pub fn below(&self, entry: usize, x: usize) -> Vec<usize> {
        let r = &self.ranks[entry];
        (0..r.len()).filter(|&k| r[k] <= r[x]).collect()
    }
}

/// One simulated run: an unfolded position consistent with τ whose
/// digits spell the entry's partial witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimEntry {
    pub position: Position,
}

impl SimEntry {
    pub fn witness(&self) -> Vec<u64> {
        self.position.witness()
    }
}

/// Simulations of one real position, each with its own partial witness.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimulationState {
    pub entries: Vec<SimEntry>,
}

fn pick_index(offered: &[RationalPoint], x: &RationalPoint) -> Result<usize, StrategyError> {
    offered
        .iter()
        .position(|p| p == x)
        .ok_or_else(|| StrategyError::new(format!("τ picked {x:?}, which was not offered")))
}

/// Ranks for one entry: rank `|F|` is τ's pick from `F`, rank `j` its
/// pick once every higher-ranked point is removed.
pub fn rank_order(tau: &mut dyn StrategyII, params: &GameParams, q: &Position, offered: &[RationalPoint], digits: &[u64]) -> Result<Vec<usize>, StrategyError> {
    let mut ranks = vec![0; offered.len()];
    let mut remaining: Vec<usize> = (0..offered.len()).collect();
    for j in (1..=offered.len()).rev() {
        let pts: Vec<RationalPoint> = remaining.iter().map(|&k| offered[k].clone()).collect();
        let x = tau.choose(params, q, &pts, digits)?;
        let local = pick_index(&pts, &x)?;
        ranks[remaining[local]] = j;
        remaining.remove(local);
    }
    Ok(ranks)
}

/// Rank profile of `offered` for every entry; `digits[i]` is what entry
/// `i` plays alongside it (empty, or the one digit extending its witness).
pub fn rank_profile(
    tau: &mut dyn StrategyII,
    params: &GameParams,
    sim: &SimulationState,
    offered: &[RationalPoint],
    digits: &[Vec<u64>],
) -> Result<RankProfile, StrategyError> {
    let ranks = sim.entries.iter().zip(digits).map(|(e, d)| rank_order(tau, params, &e.position, offered, d)).collect::<Result<_, _>>()?;
    Ok(RankProfile { ranks })
}

/// Result of extending every simulation by one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extension {
    /// Index of the answer in `offered`.
    pub chosen: usize,
    pub profile: RankProfile,
    /// `E_i` per entry, as indices into `offered`.
    pub kept: Vec<Vec<usize>>,
}

/// Picks `x ∈ F` with `|E_i| ≥ |F|/n` for `E_i = {y : y ⪯_i x}`, so that τ
/// answers `x` to `E_i` in every simulation.
pub fn extwit_extend(
    tau: &mut dyn StrategyII,
    params: &GameParams,
    sim: &SimulationState,
    offered: &[RationalPoint],
    digits: &[Vec<u64>],
) -> Result<Extension, StrategyError> {
    if offered.is_empty() {
        return Err(StrategyError::new("offered an empty set"));
    }
    let profile = rank_profile(tau, params, sim, offered, digits)?;
    let chosen = linord_select(&profile.ranks).ok_or_else(|| StrategyError::new("no element meets the selection bound"))?;
    let kept = (0..sim.entries.len()).map(|i| profile.below(i, chosen)).collect();
    Ok(Extension { chosen, profile, kept })
}

impl SimulationState {
    /// A single entry with the empty witness and no rounds.
    pub fn fresh() -> Self {
        SimulationState { entries: vec![SimEntry { position: Position::new() }] }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends `(E_i, digits_i, x)` to every entry.
    pub fn advance(&mut self, ext: &Extension, offered: &[RationalPoint], digits: &[Vec<u64>]) {
        let x = offered[ext.chosen].clone();
        for ((entry, kept), d) in self.entries.iter_mut().zip(&ext.kept).zip(digits) {
            let e: Vec<RationalPoint> = kept.iter().map(|&k| offered[k].clone()).collect();
            entry.position.push(Round { offered: e, digits: d.clone(), chosen: x.clone() });
        }
    }

    /// Per entry: replaying τ on each simulated round reproduces its answer.
    pub fn consistency(&self, tau: &mut dyn StrategyII, params: &GameParams) -> Result<Vec<bool>, StrategyError> {
        self.entries.iter().map(|e| replays(tau, params, &e.position)).collect()
    }

    /// Per entry: each simulated round keeps a subset of the real offer
    /// and the same answer.
    pub fn simulates(&self, real: &Position) -> Vec<bool> {
        self.entries
            .iter()
            .map(|e| {
                e.position.len() == real.len()
                    && e.position.rounds().iter().zip(real.rounds()).all(|(s, r)| s.chosen == r.chosen && s.offered.iter().all(|p| r.offered.contains(p)))
            })
            .collect()
    }
}

/// Whether τ, replayed round by round on `q`, answers every recorded choice.
pub fn replays(tau: &mut dyn StrategyII, params: &GameParams, q: &Position) -> Result<bool, StrategyError> {
    for n in 0..q.len() {
        let round = &q.rounds()[n];
        let x = tau.choose(params, &q.truncated(n), &round.offered, &round.digits)?;
        if x != round.chosen {
            return Ok(false);
        }
    }
    Ok(true)
}
