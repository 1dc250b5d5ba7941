use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{validate_move_i, GameParams, MoveViolation, Position, Round, StrategyI};
use crate::geometry::{Ball, RationalPoint};
use crate::rational::{int, ln_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum TreeError {
    #[error("illegal move at node {path:?}: {violation}")]
    Illegal { path: Vec<usize>, violation: MoveViolation },
    #[error("strategy failed at node {path:?}: {message}")]
    Strategy { path: Vec<usize>, message: String },
    #[error("tree exceeds {0} nodes")]
    TooLarge(usize),
}

/// One position of the tree. `round` is the round leading into it
/// (`None` at the root).
#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub parent: Option<usize>,
    pub depth: usize,
    pub round: Option<Round>,
    pub children: Vec<usize>,
    pub mass: Rational,
}

impl TreeNode {
    pub fn chosen(&self) -> Option<&RationalPoint> {
        self.round.as_ref().map(|r| &r.chosen)
    }
}

/// Every position reachable against all of II's replies, with the
/// cylinder measure `μ(node) = ∏ |F_i|^{-1}` along its path.
#[derive(Clone, Debug)]
pub struct TreeMeasure {
    params: GameParams,
    depth: usize,
    nodes: Vec<TreeNode>,
}

/// Expands every reply of II to `depth` rounds, validating each of σ's
/// moves. σ must be a function of the position alone.
pub fn strategy_tree(sigma: &mut dyn StrategyI, params: &GameParams, depth: usize, max_nodes: usize) -> Result<TreeMeasure, TreeError> {
    let mut nodes = vec![TreeNode { parent: None, depth: 0, round: None, children: Vec::new(), mass: Rational::one() }];
    let mut pos = Position::new();
    let mut path = Vec::new();
    expand(sigma, params, depth, max_nodes, &mut nodes, 0, &mut pos, &mut path)?;
    Ok(TreeMeasure { params: params.clone(), depth, nodes })
}

#[allow(clippy::too_many_arguments)]
fn expand(
    sigma: &mut dyn StrategyI,
    params: &GameParams,
    depth: usize,
    max_nodes: usize,
    nodes: &mut Vec<TreeNode>,
    at: usize,
    pos: &mut Position,
    path: &mut Vec<usize>,
) -> Result<(), TreeError> {
    if pos.len() == depth {
        return Ok(());
    }
    let mv = sigma.next_move(params, pos).map_err(|e| TreeError::Strategy { path: path.clone(), message: e.0 })?;
    validate_move_i(params, pos, &mv.points).map_err(|violation| TreeError::Illegal { path: path.clone(), violation })?;
    let mut offered = mv.points;
    offered.sort();
    let mass = &nodes[at].mass / Rational::from_integer(offered.len().into());
    for (k, x) in offered.iter().enumerate() {
        if nodes.len() >= max_nodes {
            return Err(TreeError::TooLarge(max_nodes));
        }
        let round = Round { offered: offered.clone(), digits: mv.digits.clone(), chosen: x.clone() };
        let id = nodes.len();
        nodes.push(TreeNode { parent: Some(at), depth: pos.len() + 1, round: Some(round.clone()), children: Vec::new(), mass: mass.clone() });
        nodes[at].children.push(id);
        pos.push(round);
        path.push(k);
        expand(sigma, params, depth, max_nodes, nodes, id, pos, path)?;
        path.pop();
        pos.pop();
    }
    Ok(())
}

impl TreeMeasure {
    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].children.is_empty())
    }

    pub fn at_depth(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| self.nodes[i].depth == n)
    }

    /// Node ids from the root down to `id`.
    pub fn branch(&self, id: usize) -> Vec<usize> {
        let mut out = vec![id];
        let mut at = id;
        while let Some(p) = self.nodes[at].parent {
            out.push(p);
            at = p;
        }
        out.reverse();
        out
    }

    pub fn position(&self, id: usize) -> Position {
        Position::from_rounds(self.branch(id).iter().filter_map(|&i| self.nodes[i].round.clone()).collect())
    }

    /// `B(x_{n−1}, 2ρ_{n−1})` for a node at depth `n ≥ 1`.
    pub fn localization(&self, id: usize) -> Option<Ball> {
        let node = &self.nodes[id];
        let x = node.chosen()?;
        Some(Ball { center: x.clone(), radius: int(2) * self.params.rho(node.depth - 1) })
    }

    /// Sum of masses at each depth; exactly one when the tree is complete.
    pub fn depth_totals(&self) -> Vec<Rational> {
        let mut totals = vec![Rational::zero(); self.depth + 1];
        for n in &self.nodes {
            totals[n.depth] += &n.mass;
        }
        totals
    }

    /// Bounds on the pushforward mass of `B(x, r)`: leaves whose
    /// localization ball lies inside it, and leaves whose ball meets it.
    pub fn ball_mass(&self, x: &RationalPoint, r: &Rational) -> (Rational, Rational) {
        let ball = Ball { center: x.clone(), radius: r.clone() };
        let mut lower = Rational::zero();
        let mut upper = Rational::zero();
        for leaf in self.leaves() {
            let mass = &self.nodes[leaf].mass;
            match self.localization(leaf) {
                Some(loc) => {
                    if loc.inside(&ball) {
                        lower += mass;
                    }
                    if loc.meets(&ball) {
                        upper += mass;
                    }
                }
                None => {
                    upper += mass;
                }
            }
        }
        (lower, upper)
    }
}

/// Exponent estimate along one branch or summarized over many.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub kind: String,
    pub exponent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_m: Option<f64>,
    pub samples: usize,
    pub scales: Vec<f64>,
    pub residuals: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median: Option<f64>,
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

/// Local exponent of the branch ending at `leaf`. A node at depth `n`
/// chose `x_{n−1}`, and its cylinder mass bounds `μ(B(x_{n−1}, ρ_{n−1}))`,
/// so the pairs are `(ln ρ_{n−1}, ln μ(node_n))` for depths `n` in `range`
/// with `ρ_{n−1} ≠ 1`. The estimate is the least-squares slope, or the
/// single ratio `ln μ / ln ρ` when only one depth is in range.
pub fn local_exponent(tm: &TreeMeasure, leaf: usize, range: std::ops::RangeInclusive<usize>) -> DimensionEstimate {
    let branch = tm.branch(leaf);
    let pairs: Vec<(f64, f64)> = range
        .filter(|&n| n >= 1 && n < branch.len())
        .map(|n| (ln_rational(&tm.params.rho(n - 1)), ln_rational(&tm.nodes[branch[n]].mass)))
        .filter(|(x, _)| *x != 0.0)
        .collect();
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (exponent, residuals) = match least_squares(&xs, &ys) {
        Some((slope, icpt)) => (slope, xs.iter().zip(&ys).map(|(x, y)| y - (slope * x + icpt)).collect()),
        None => (ys.first().zip(xs.first()).map_or(f64::NAN, |(y, x)| y / x), vec![0.0; xs.len()]),
    };
    let ratios: Vec<f64> = pairs.iter().map(|(x, y)| y / x).collect();
    DimensionEstimate {
        kind: "local-exponent".into(),
        exponent,
        constant_m: None,
        samples: pairs.len(),
        scales: xs.iter().map(|x| x.exp()).collect(),
        residuals,
        min: ratios.iter().copied().reduce(f64::min),
        median: median(&ratios),
    }
}

/// Local exponents of every leaf over `range`, summarized by min and
/// median; `exponent` is the median.
pub fn exponent_summary(tm: &TreeMeasure, range: std::ops::RangeInclusive<usize>) -> DimensionEstimate {
    let per_leaf: Vec<f64> = tm.leaves().map(|l| local_exponent(tm, l, range.clone()).exponent).filter(|e| e.is_finite()).collect();
    let med = median(&per_leaf);
    DimensionEstimate {
        kind: "tree".into(),
        exponent: med.unwrap_or(f64::NAN),
        constant_m: None,
        samples: per_leaf.len(),
        scales: range.filter(|&n| n >= 1 && n <= tm.depth).map(|n| crate::rational::to_f64(&tm.params.rho(n - 1))).collect(),
        residuals: Vec::new(),
        min: per_leaf.iter().copied().reduce(f64::min),
        median: med,
    }
}
