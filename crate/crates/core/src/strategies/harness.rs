//! Adversarial challenge for a player-II strategy τ.
//!
//! Player I plays subsets of fixed separated nets, removing τ's favorite
//! points first; the resulting positions form a coded tree carrying a
//! probability measure. Any target point can be traced through the tree.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{validate_move_i, GameParams, GameSettings, Position, Round, StrategyII};
use crate::geometry::{build_net, dist_sq, nearest, Ball, NetFamily, RationalPoint};
use crate::rational::{format_rational, int, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("tau failed at code {code:?}: {message}")]
    TauFailed { code: Vec<(usize, usize)>, message: String },
    #[error("tau picked {point:?}, which was not offered, at code {code:?}")]
    TauIllegal { code: Vec<(usize, usize)>, point: RationalPoint },
    #[error("epsilon must be positive")]
    BadEpsilon,
    #[error("depth {depth} exceeds the horizon {horizon}")]
    TooDeep { depth: usize, horizon: usize },
    #[error("{0:?} is outside the start ball")]
    OutsideStart(RationalPoint),
    #[error("net point {point:?} at level {level} is not {spacing}-close to the traced point")]
    NotCovered { level: usize, point: RationalPoint, spacing: String },
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    #[serde(with = "crate::rational::serde_rational")]
    pub epsilon: Rational,
    pub depth: usize,
    /// Radius `r` of the start ball `B(0, r)`; defaults to `ρ₀`.
    #[serde(default, with = "option_rational")]
    pub start_radius: Option<Rational>,
    /// Codes whose mass falls below the floor are not expanded.
    pub mass_floor: f64,
}

mod option_rational {
    use super::Rational;
    use crate::rational::{format_rational, parse_rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match q {
            Some(q) => s.serialize_some(&format_rational(q)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?.map(|t| parse_rational(&t).map_err(D::Error::custom)).transpose()
    }
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig { epsilon: Rational::one(), depth: 4, start_radius: None, mass_floor: 0.0 }
    }
}

/// Nets `E_0, E_1, …` (spacing `½ρ_n`) over the region every harness ball
/// lives in, with their class partitions at `3ρ_n`.
#[derive(Clone, Debug)]
pub struct HarnessNets {
    pub region: Ball,
    pub start: Ball,
    pub levels: Vec<NetFamily>,
}

impl HarnessNets {
    pub fn build(params: &GameParams, start_radius: &Rational, depth: usize) -> Self {
        let d = params.dim();
        let origin = RationalPoint::origin(d);
        let start = Ball { center: origin.clone(), radius: start_radius.clone() };
        let region = Ball { center: origin, radius: start_radius + int(2) * params.rho0() };
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        let levels = (0..depth).map(|n| build_net(&region, &(&half * params.rho(n)), n)).collect();
        HarnessNets { region, start, levels }
    }

    /// Largest class count over all levels.
    pub fn class_count(&self) -> usize {
        self.levels.iter().map(|l| l.classes.len()).max().unwrap_or(0)
    }
}

/// One appropriate code `u = (s⌢i, t⌢j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessNode {
    pub code: Vec<(usize, usize)>,
    pub parent: Option<usize>,
    /// Set I offered at this code's round, and τ's answer.
    pub offered: Vec<RationalPoint>,
    pub chosen: Option<RationalPoint>,
    /// `B_u`: where I's next move must lie.
    pub ball: Ball,
    /// Exact mass, available when ε is an integer.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "option_rational")]
    pub mass: Option<Rational>,
    pub mass_f64: f64,
    /// `k_u` and `ℓ_u` of the parent's class choice.
    pub k_u: usize,
    pub ell_u: usize,
    pub appropriate: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HarnessChecks {
    pub mass_recursion: bool,
    pub children_sum: bool,
    pub lower_bound: bool,
    pub cumulative_lower_bound: bool,
    pub legal_moves: bool,
    pub failures: Vec<String>,
    /// `min μ(child) / (c j^{−(1+ε)} μ(parent))` over all nodes.
    pub min_lower_bound_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub tau: String,
    pub config: HarnessConfig,
    pub nodes: usize,
    pub leaves: usize,
    pub pruned_by_floor: usize,
    /// Class count `ℓ` of the partitions used.
    pub ell: usize,
    /// `c = 1/(ℓ ζ(1+ε))`.
    pub c: f64,
    pub checks: HarnessChecks,
}

impl HarnessReport {
    pub fn passed(&self) -> bool {
        let c = &self.checks;
        c.mass_recursion && c.children_sum && c.lower_bound && c.cumulative_lower_bound && c.legal_moves
    }
}

#[derive(Clone, Debug)]
pub struct HarnessTree {
    pub nodes: Vec<HarnessNode>,
    pub report: HarnessReport,
}

/// `Σ_{j'≥1} j'^{−s}` for `s > 1`, with an integral tail estimate.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0);
    let n = 100_000;
    let head: f64 = (1..=n).rev().map(|j| (j as f64).powf(-s)).sum();
    // Euler–Maclaurin tail: ∫_n^∞ x^{−s} dx − n^{−s}/2
    head + (n as f64).powf(1.0 - s) / (s - 1.0) - 0.5 * (n as f64).powf(-s)
}

fn int_pow(j: usize, e: &BigInt) -> Rational {
    let mut out = Rational::one();
    let base = int(j as i64);
    let mut k = e.clone();
    while k.is_positive() {
        out *= &base;
        k -= 1;
    }
    out
}

struct Weights {
    exact: bool,
    one_plus_eps: f64,
    exponent: BigInt,
}

impl Weights {
    fn new(epsilon: &Rational) -> Self {
        let exact = epsilon.is_integer();
        Weights { exact, one_plus_eps: 1.0 + to_f64(epsilon), exponent: (epsilon + Rational::one()).to_integer() }
    }

    fn pow_exact(&self, j: usize) -> Rational {
        int_pow(j, &self.exponent)
    }

    /// `Σ_{j'≤k} j'^{−(1+ε)}` exactly.
    fn partial_sum_exact(&self, k: usize) -> Rational {
        (1..=k).map(|j| self.pow_exact(j).recip()).fold(Rational::zero(), |a, b| a + b)
    }

    fn partial_sum_f64(&self, k: usize) -> f64 {
        (1..=k).rev().map(|j| (j as f64).powf(-self.one_plus_eps)).sum()
    }
}

struct Builder<'a> {
    params: GameParams,
    nets: &'a HarnessNets,
    tau: &'a mut dyn StrategyII,
    weights: Weights,
    depth: usize,
    floor: f64,
    c: f64,
    nodes: Vec<HarnessNode>,
    pruned: usize,
    checks: HarnessChecks,
}

impl Builder<'_> {
    fn fail(&mut self, msg: String) {
        if self.checks.failures.len() < 20 {
            self.checks.failures.push(msg);
        }
    }

    /// τ's removal sequence on `offered`: element `j−1` is the set of
    /// size `j` and τ's pick from it.
    fn removal_sequence(&mut self, pos: &Position, code: &[(usize, usize)], offered: &[RationalPoint]) -> Result<Vec<(Vec<RationalPoint>, RationalPoint)>, HarnessError> {
        let mut current = offered.to_vec();
        let mut seq = Vec::with_capacity(offered.len());
        while !current.is_empty() {
            let x = self
                .tau
                .choose(&self.params, pos, &current, &[])
                .map_err(|e| HarnessError::TauFailed { code: code.to_vec(), message: e.0 })?;
            let Ok(idx) = current.binary_search(&x) else {
                return Err(HarnessError::TauIllegal { code: code.to_vec(), point: x });
            };
            seq.push((current.clone(), x));
            current.remove(idx);
        }
        seq.reverse();
        Ok(seq)
    }

    fn expand(&mut self, node_idx: usize, pos: &mut Position) -> Result<(), HarnessError> {
        let n = pos.len();
        if n >= self.depth {
            return Ok(());
        }
        let ball = self.nodes[node_idx].ball.clone();
        let code = self.nodes[node_idx].code.clone();
        let parent_mass = self.nodes[node_idx].mass.clone();
        let parent_f = self.nodes[node_idx].mass_f64;
        let nets = self.nets;
        let net = &nets.levels[n];
        let per_class: Vec<Vec<RationalPoint>> =
            net.classes.iter().map(|class| class.iter().filter(|p| ball.contains_open(p)).cloned().collect()).collect();
        let ell_u = per_class.iter().filter(|c| !c.is_empty()).count();
        let mut child_sum_exact = Rational::zero();
        let mut child_sum_f = 0.0;
        for (i, offered) in per_class.iter().enumerate() {
            let k_u = offered.len();
            if k_u == 0 {
                continue;
            }
            let seq = self.removal_sequence(pos, &code, offered)?;
            let h_exact = self.weights.exact.then(|| self.weights.partial_sum_exact(k_u));
            let h_f = self.weights.partial_sum_f64(k_u);
            for (j, (set, x)) in seq.into_iter().enumerate().map(|(idx, v)| (idx + 1, v)) {
                let mut child_code = code.clone();
                child_code.push((i, j));
                if let Err(v) = validate_move_i(&self.params, pos, &set) {
                    self.checks.legal_moves = false;
                    self.fail(format!("illegal move at {child_code:?}: {v}"));
                }
                let weight_f = ell_u as f64 * (j as f64).powf(self.weights.one_plus_eps) * h_f;
                let mass_f = parent_f / weight_f;
                let mass = match (&parent_mass, &h_exact) {
                    (Some(pm), Some(h)) => {
                        let denom = int(ell_u as i64) * self.weights.pow_exact(j) * h;
                        let m = pm / &denom;
                        if &(&m * &denom) != pm {
                            self.checks.mass_recursion = false;
                            self.fail(format!("mass recursion fails at {child_code:?}"));
                        }
                        child_sum_exact += &m;
                        Some(m)
                    }
                    _ => None,
                };
                let mass_f64 = mass.as_ref().map_or(mass_f, to_f64);
                if (mass_f64 - mass_f).abs() > 1e-9 * mass_f.abs() {
                    self.checks.mass_recursion = false;
                    self.fail(format!("exact and float masses disagree at {child_code:?}"));
                }
                child_sum_f += mass_f64;
                let bound = self.c * (j as f64).powf(-self.weights.one_plus_eps) * parent_f;
                let ratio = mass_f64 / bound;
                self.checks.min_lower_bound_ratio = self.checks.min_lower_bound_ratio.min(ratio);
                if ratio < 1.0 - 1e-12 {
                    self.checks.lower_bound = false;
                    self.fail(format!("mass below c j^-(1+eps) at {child_code:?}"));
                }
                let cumulative: f64 = child_code
                    .iter()
                    .map(|&(_, jj)| self.c * (jj as f64).powf(-self.weights.one_plus_eps))
                    .product();
                if mass_f64 < cumulative * (1.0 - 1e-9) {
                    self.checks.cumulative_lower_bound = false;
                    self.fail(format!("mass below c^n prod j^-(1+eps) at {child_code:?}"));
                }
                let round = self.params.beta(n);
                let next_ball = Ball { center: x.clone(), radius: (Rational::one() - round) * self.params.rho(n) };
                let child = HarnessNode {
                    code: child_code,
                    parent: Some(node_idx),
                    offered: set.clone(),
                    chosen: Some(x.clone()),
                    ball: next_ball,
                    mass,
                    mass_f64,
                    k_u,
                    ell_u,
                    appropriate: (1..=k_u).contains(&j),
                };
                self.nodes.push(child);
                let child_idx = self.nodes.len() - 1;
                if mass_f64 < self.floor {
                    self.pruned += 1;
                    continue;
                }
                pos.push(Round { offered: set, digits: Vec::new(), chosen: x });
                let res = self.expand(child_idx, pos);
                pos.pop();
                res?;
            }
        }
        if ell_u > 0 {
            let exact_ok = parent_mass.as_ref().is_none_or(|pm| &child_sum_exact <= pm);
            if !exact_ok || child_sum_f > parent_f * (1.0 + 1e-12) {
                self.checks.children_sum = false;
                self.fail(format!("children of {code:?} outweigh their parent"));
            }
        }
        Ok(())
    }
}

/// Harness parameters: the game's params with the start ball `B(0, r)`.
pub fn harness_params(params: &GameParams, start_radius: &Rational) -> GameParams {
    let start = Ball { center: RationalPoint::origin(params.dim()), radius: start_radius.clone() };
    GameParams::new(GameSettings { start_ball: Some(start), ..params.settings().clone() }).expect("adding a start ball keeps params valid")
}

pub fn harness_build(tau: &mut dyn StrategyII, params: &GameParams, config: &HarnessConfig) -> Result<HarnessTree, HarnessError> {
    let nets = HarnessNets::build(params, config.start_radius.as_ref().unwrap_or(params.rho0()), config.depth);
    harness_build_with(tau, params, config, &nets)
}

pub fn harness_build_with(tau: &mut dyn StrategyII, params: &GameParams, config: &HarnessConfig, nets: &HarnessNets) -> Result<HarnessTree, HarnessError> {
    if !config.epsilon.is_positive() {
        return Err(HarnessError::BadEpsilon);
    }
    if config.depth > params.horizon() {
        return Err(HarnessError::TooDeep { depth: config.depth, horizon: params.horizon() });
    }
    let params = harness_params(params, &nets.start.radius);
    let weights = Weights::new(&config.epsilon);
    let ell = nets.class_count().max(1);
    let c = 1.0 / (ell as f64 * zeta(weights.one_plus_eps));
    let root = HarnessNode {
        code: Vec::new(),
        parent: None,
        offered: Vec::new(),
        chosen: None,
        ball: nets.start.clone(),
        mass: weights.exact.then(Rational::one),
        mass_f64: 1.0,
        k_u: 0,
        ell_u: 0,
        appropriate: true,
    };
    let tau_name = tau.name();
    let mut b = Builder {
        params,
        nets,
        tau,
        weights,
        depth: config.depth,
        floor: config.mass_floor,
        c,
        nodes: vec![root],
        pruned: 0,
        checks: HarnessChecks {
            mass_recursion: true,
            children_sum: true,
            lower_bound: true,
            cumulative_lower_bound: true,
            legal_moves: true,
            failures: Vec::new(),
            min_lower_bound_ratio: f64::INFINITY,
        },
    };
    let mut pos = Position::new();
    b.expand(0, &mut pos)?;
    let leaves = b.nodes.iter().filter(|n| n.code.len() == config.depth).count();
    let report = HarnessReport {
        tau: tau_name,
        config: config.clone(),
        nodes: b.nodes.len(),
        leaves,
        pruned_by_floor: b.pruned,
        ell,
        c,
        checks: b.checks,
    };
    Ok(HarnessTree { nodes: b.nodes, report })
}

/// Result of tracing a point through the harness tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    /// `(i_n, j_n)` per level.
    pub code: Vec<(usize, usize)>,
    pub net_points: Vec<RationalPoint>,
    pub k: Vec<usize>,
    /// `|x_{n+1} − x_n| < (1−β_n)ρ_n`, checked exactly per step.
    pub steps_legal: Vec<bool>,
    #[serde(skip)]
    pub position: Position,
}

impl TraceResult {
    pub fn all_legal(&self) -> bool {
        self.steps_legal.iter().all(|&b| b)
    }
}

pub fn trace_point(tau: &mut dyn StrategyII, params: &GameParams, x: &RationalPoint, nets: &HarnessNets) -> Result<TraceResult, HarnessError> {
    let params = harness_params(params, &nets.start.radius);
    let mut pos = Position::new();
    let mut out = TraceResult { code: Vec::new(), net_points: Vec::new(), k: Vec::new(), steps_legal: Vec::new(), position: Position::new() };
    let mut ball = nets.start.clone();
    for (n, net) in nets.levels.iter().enumerate() {
        let idx = nearest(&net.points, x).ok_or_else(|| HarnessError::Internal(format!("net at level {n} is empty")))?;
        let xn = net.points[idx].clone();
        if dist_sq(&xn, x) >= &net.spacing * &net.spacing {
            return Err(HarnessError::NotCovered { level: n, point: xn, spacing: format_rational(&net.spacing) });
        }
        if n == 0 && !ball.contains_open(&xn) {
            return Err(HarnessError::OutsideStart(xn));
        }
        if n > 0 {
            out.steps_legal.push(ball.contains_open(&xn));
        }
        let class = net.class_of(&xn).ok_or_else(|| HarnessError::Internal("net point without a class".into()))?;
        let mut current: Vec<RationalPoint> = net.classes[class].iter().filter(|p| ball.contains_open(p)).cloned().collect();
        let k_u = current.len();
        if current.binary_search(&xn).is_err() {
            return Err(HarnessError::Internal(format!("x_{n} is not offered at level {n}")));
        }
        let mut j = k_u;
        loop {
            let pick = tau
                .choose(&params, &pos, &current, &[])
                .map_err(|e| HarnessError::TauFailed { code: out.code.clone(), message: e.0 })?;
            let Ok(at) = current.binary_search(&pick) else {
                return Err(HarnessError::TauIllegal { code: out.code.clone(), point: pick });
            };
            if pick == xn {
                break;
            }
            current.remove(at);
            j -= 1;
            if j == 0 {
                return Err(HarnessError::Internal(format!("tau never picked x_{n}")));
            }
        }
        out.code.push((class, j));
        out.k.push(k_u);
        out.net_points.push(xn.clone());
        pos.push(Round { offered: current, digits: Vec::new(), chosen: xn.clone() });
        ball = Ball { center: xn, radius: (Rational::one() - params.beta(n)) * params.rho(n) };
    }
    out.position = pos;
    Ok(out)
}
