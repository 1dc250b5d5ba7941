use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::engine::{containment_ball, GameParams, MoveI, Position, StrategyError, StrategyI};
use crate::geometry::{greedy_separated_indices, RationalPoint};
use crate::rational::{int, ln_rational, Rational};
use crate::targets::{pow, IfsSystem, Piece};

/// Player I aiming at an IFS attractor: offers piece centers at the
/// least level whose pieces are smaller than the next radius, pruned to
/// the required separation.
///
/// In the unfolded game the player keeps to the cell named by the digits
/// it has already emitted, and emits every further digit shared by all
/// of its candidate pieces.
#[derive(Clone, Debug)]
pub struct IfsPlayerI {
    ifs: IfsSystem,
    delta: f64,
    unfolded: bool,
}

impl IfsPlayerI {
    pub fn new(ifs: IfsSystem, delta: f64) -> Result<Self, StrategyError> {
        let dim = ifs.similarity_dimension();
        if !(delta > 0.0 && delta < dim) {
            return Err(StrategyError::new(format!(
                "delta {delta} must lie strictly between 0 and the similarity dimension {dim:.6} of `{}`",
                ifs.name()
            )));
        }
        Ok(IfsPlayerI { ifs, delta, unfolded: false })
    }

    pub fn unfolded(mut self) -> Self {
        self.unfolded = true;
        self
    }

    pub fn ifs(&self) -> &IfsSystem {
        &self.ifs
    }

    /// Least level whose piece diameter is below `β_m ρ_m`.
    pub fn level_for_round(&self, params: &GameParams, m: usize) -> usize {
        self.ifs.level_with_diameter_below(&params.rho(m + 1))
    }

    /// Pieces whose centers are legal at round `m`, in canonical order.
    pub fn candidates(&self, params: &GameParams, pos: &Position) -> Vec<Piece> {
        let k = self.level_for_round(params, pos.len());
        let mut pieces = match containment_ball(params, pos) {
            Some(ball) => self.ifs.pieces_centered_in(k, &ball),
            None => self.ifs.pieces(k),
        };
        if self.unfolded {
            let emitted = pos.witness();
            pieces.retain(|p| p.address.len() >= emitted.len() && p.address.iter().zip(&emitted).all(|(&a, &d)| u64::from(a) == d));
        }
        pieces.sort_by(|a, b| a.ball.center.cmp(&b.ball.center));
        pieces
    }
}

fn common_prefix(pieces: &[Piece]) -> Vec<u32> {
    let Some(first) = pieces.first() else { return Vec::new() };
    let mut len = first.address.len();
    for p in &pieces[1..] {
        len = len.min(p.address.iter().zip(&first.address).take_while(|(a, b)| a == b).count());
    }
    first.address[..len].to_vec()
}

impl StrategyI for IfsPlayerI {
    fn next_move(&mut self, params: &GameParams, pos: &Position) -> Result<MoveI, StrategyError> {
        let candidates = self.candidates(params, pos);
        if candidates.is_empty() {
            return Err(StrategyError::new(format!("no `{}` piece is legal at round {}", self.ifs.name(), pos.len())));
        }
        let centers: Vec<RationalPoint> = candidates.iter().map(|p| p.ball.center.clone()).collect();
        let sep = int(3) * params.rho(pos.len());
        let points = greedy_separated_indices(&centers, &sep).into_iter().map(|i| centers[i].clone()).collect();
        let digits = if self.unfolded {
            let emitted = pos.witness().len();
            common_prefix(&candidates)[emitted..].iter().map(|&a| u64::from(a)).collect()
        } else {
            Vec::new()
        };
        Ok(MoveI { points, digits })
    }

    fn name(&self) -> String {
        let mode = if self.unfolded { ":unfolded" } else { "" };
        format!("ifs:{}:{}{mode}", self.ifs.name(), self.delta)
    }
}

/// Analytic upper bound on the folded player's budget statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetBound {
    pub delta: f64,
    /// Guaranteed lower bound on `|F_m|`, as `ln`.
    pub ln_floor: Vec<f64>,
    /// Upper bounds on `S_1, S_2, …`.
    pub s_bound: Vec<f64>,
    pub max: f64,
}

/// Budget bound for the folded IFS player on a d = 1 attractor whose
/// level-1 cells are separated by a gap `g`.
///
/// At round `m ≥ 1` the previous point sits in a cell `Q` of level `q`,
/// the least level whose cells are narrower than the containment radius,
/// so `Q` lies inside the containment ball. Distinct level-`j` sub-cells
/// of `Q` are at least `g r^{j−1}` apart; taking the deepest `j ≤ k(m)`
/// with `g r^{j−1} ≥ 3ρ_m` gives `N^{j−q}` separated candidates, and
/// left-to-right greedy pruning on a line keeps a maximum separated subset.
pub fn ifs_budget_bound(ifs: &IfsSystem, params: &GameParams, rounds: usize, delta: f64) -> Option<BudgetBound> {
    let gap = ifs.level_one_gap()?;
    let width = ifs.box_width();
    let r = ifs.ratio();
    let ln_n = (ifs.map_count() as f64).ln();
    let player = IfsPlayerI { ifs: ifs.clone(), delta, unfolded: false };
    let mut ln_floor = Vec::with_capacity(rounds);
    let mut s_bound = Vec::with_capacity(rounds);
    let mut s = 0.0;
    let mut max = 0.0f64;
    for m in 0..rounds {
        let floor_exp = if m == 0 {
            0
        } else {
            let radius = (Rational::one() - params.beta(m - 1)) * params.rho(m - 1);
            let mut q = 0;
            let mut cell = width.clone();
            while cell >= radius {
                cell *= r;
                q += 1;
            }
            let k = player.level_for_round(params, m);
            let sep = int(3) * params.rho(m);
            (q + 1..=k).rev().find(|&j| &gap * pow(r, j - 1) >= sep).map_or(0, |j| j - q)
        };
        let lf = floor_exp as f64 * ln_n;
        s += -delta * ln_rational(&params.beta(m)) - lf;
        max = max.max(s);
        ln_floor.push(lf);
        s_bound.push(s);
    }
    Some(BudgetBound { delta, ln_floor, s_bound, max })
}
