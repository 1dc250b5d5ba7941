//! Randomized and exhaustive self-checks of the combinatorial bounds the
//! strategies rely on: the order selector, the one-round simulation
//! extension, and the packing and partition counts.

use itertools::Itertools;
use num_bigint::{BigInt, BigUint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{GameParams, GameSettings, Position, Round, StrategyI, StrategyII};
use crate::geometry::{build_net, class_bound, greedy_separated, is_separated, packing_bound, Ball, RationalPoint};
use crate::rational::{format_rational, int, Rational};
use crate::strategies::{HashedII, LeastII, NearestII, RandomII, RandomLegalI};
use crate::unfolding::{extwit_extend, linord_satisfies, linord_select, SimEntry, SimulationState};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinordCase {
    pub set_size: usize,
    pub orders: usize,
    pub tuples: usize,
    pub exhaustive: bool,
    /// Tuples where the selector returned nothing or an element that
    /// misses the bound.
    pub selector_failures: usize,
    /// Tuples where no element at all meets the bound.
    pub no_witness: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinordCheck {
    pub cases: Vec<LinordCase>,
}

impl LinordCheck {
    pub fn counterexamples(&self) -> usize {
        self.cases.iter().map(|c| c.selector_failures + c.no_witness).sum()
    }
}

fn ranks_of(order: &[usize]) -> Vec<usize> {
    let mut ranks = vec![0; order.len()];
    for (pos, &a) in order.iter().enumerate() {
        ranks[a] = pos + 1;
    }
    ranks
}

/// Counts `{b : b ⪯ a}` directly for every order instead of reading ranks.
fn brute_force_witness(orders: &[Vec<usize>]) -> bool {
    let m = orders[0].len();
    let n = orders.len();
    (0..m).any(|a| {
        orders.iter().all(|o| {
            let at = o.iter().position(|&b| b == a).unwrap();
            let below = o.iter().take(at + 1).count();
            below * n >= m
        })
    })
}

fn check_tuple(orders: &[Vec<usize>], case: &mut LinordCase) {
    let ranks: Vec<Vec<usize>> = orders.iter().map(|o| ranks_of(o)).collect();
    match linord_select(&ranks) {
        Some(a) if linord_satisfies(&ranks, a) => {}
        _ => case.selector_failures += 1,
    }
    if !brute_force_witness(orders) {
        case.no_witness += 1;
    }
    case.tuples += 1;
}

/// Every tuple of `n ≤ max_orders` linear orders on `|A| ≤ max_set`
/// elements when there are at most `samples` of them, otherwise
/// `samples` random tuples.
pub fn check_linord(max_set: usize, max_orders: usize, samples: usize, seed: u64) -> LinordCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    for m in 1..=max_set {
        let perms: Vec<Vec<usize>> = (0..m).permutations(m).collect();
        for n in 1..=max_orders {
            let total = (perms.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
            let exhaustive = total <= samples as u128;
            let mut case = LinordCase { set_size: m, orders: n, tuples: 0, exhaustive, selector_failures: 0, no_witness: 0 };
            if exhaustive {
                for tuple in (0..n).map(|_| perms.iter().cloned()).multi_cartesian_product() {
                    check_tuple(&tuple, &mut case);
                }
            } else {
                let mut base: Vec<usize> = (0..m).collect();
                for _ in 0..samples {
                    let tuple: Vec<Vec<usize>> = (0..n)
                        .map(|_| {
                            base.shuffle(&mut rng);
                            base.clone()
                        })
                        .collect();
                    check_tuple(&tuple, &mut case);
                }
            }
            cases.push(case);
        }
    }
    LinordCheck { cases }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionCheck {
    pub instances: usize,
    /// Entries where τ, asked directly on `E_i`, answered the chosen point.
    pub consistent: usize,
    /// Entries with `(n+1)|E_i| ≥ |F|`.
    pub size_ok: usize,
    /// Entries with the sharper `n|E_i| ≥ |F|`.
    pub sharp_size_ok: usize,
    pub entries: usize,
    pub failures: Vec<String>,
}

impl ExtensionCheck {
    pub fn passed(&self) -> bool {
        self.consistent == self.entries && self.size_ok == self.entries && self.failures.is_empty()
    }
}

fn random_tau(rng: &mut ChaCha8Rng) -> Box<dyn StrategyII> {
    match rng.gen_range(0..4) {
        0 => Box::new(HashedII { salt: rng.gen() }),
        1 => Box::new(RandomII::new(rng.gen())),
        2 => Box::new(LeastII),
        _ => {
            let x = Rational::new(BigInt::from(rng.gen_range(-64..=64)), BigInt::from(64));
            Box::new(NearestII { point: RationalPoint::scalar(x) })
        }
    }
}

/// A τ-consistent unfolded position of the given length, with random digits.
fn random_entry(tau: &mut dyn StrategyII, params: &GameParams, len: usize, rng: &mut ChaCha8Rng) -> Result<Position, String> {
    let mut sigma = RandomLegalI::new(rng.gen(), 8);
    let mut pos = Position::new();
    for _ in 0..len {
        let offered = sigma.next_move(params, &pos).map_err(|e| e.0)?.points;
        let digits: Vec<u64> = if rng.gen_bool(0.5) { vec![rng.gen_range(0..3)] } else { Vec::new() };
        let chosen = tau.choose(params, &pos, &offered, &digits).map_err(|e| e.0)?;
        pos.push(Round { offered, digits, chosen });
    }
    Ok(pos)
}

/// Random instances of the one-round extension: a τ, up to `max_entries`
/// simulated positions consistent with it, and an offer of at most
/// `max_offer` points. The output is re-checked by asking τ directly.
pub fn check_extension(instances: usize, max_offer: usize, max_entries: usize, seed: u64) -> ExtensionCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = GameParams::new(GameSettings { horizon: 16, ..GameSettings::default() }).expect("default settings are valid");
    let mut report = ExtensionCheck { instances, consistent: 0, size_ok: 0, sharp_size_ok: 0, entries: 0, failures: Vec::new() };
    for inst in 0..instances {
        let mut tau = random_tau(&mut rng);
        let len = rng.gen_range(0..4);
        let n = rng.gen_range(1..=max_entries);
        let entries: Result<Vec<Position>, String> = (0..n).map(|_| random_entry(tau.as_mut(), &params, len, &mut rng)).collect();
        let entries = match entries {
            Ok(e) => e,
            Err(e) => {
                report.failures.push(format!("instance {inst}: {e}"));
                continue;
            }
        };
        let size = rng.gen_range(1..=max_offer);
        let ball = Ball { center: RationalPoint::origin(1), radius: int(1) };
        let sep = int(3) * params.rho(len);
        let raw: Vec<RationalPoint> = (0..size * 40)
            .map(|_| RationalPoint::scalar(Rational::new(BigInt::from(rng.gen_range(-4095..4096)), BigInt::from(4096))))
            .collect();
        let mut offered = greedy_separated(&raw, &sep);
        offered.truncate(size);
        if offered.is_empty() {
            offered.push(ball.center.clone());
        }
        let digits: Vec<Vec<u64>> = (0..n).map(|_| if rng.gen_bool(0.5) { vec![rng.gen_range(0..3)] } else { Vec::new() }).collect();
        let sim = SimulationState { entries: entries.iter().map(|p| SimEntry { position: p.clone() }).collect() };
        let ext = match extwit_extend(tau.as_mut(), &params, &sim, &offered, &digits) {
            Ok(ext) => ext,
            Err(e) => {
                report.failures.push(format!("instance {inst}: {}", e.0));
                continue;
            }
        };
        let x = &offered[ext.chosen];
        for (i, kept) in ext.kept.iter().enumerate() {
            report.entries += 1;
            let e: Vec<RationalPoint> = kept.iter().map(|&k| offered[k].clone()).collect();
            match tau.choose(&params, &entries[i], &e, &digits[i]) {
                Ok(y) if &y == x => report.consistent += 1,
                Ok(y) => report.failures.push(format!("instance {inst} entry {i}: τ answered {y:?} on E instead of {x:?}")),
                Err(err) => report.failures.push(format!("instance {inst} entry {i}: {}", err.0)),
            }
            if e.len() * (n + 1) >= offered.len() {
                report.size_ok += 1;
            }
            if e.len() * n >= offered.len() {
                report.sharp_size_ok += 1;
            }
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingCase {
    pub dim: usize,
    pub beta: String,
    pub size: usize,
    pub bound: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingCheck {
    pub instances: usize,
    pub packing_violations: Vec<PackingCase>,
    /// Largest `|F| / bound` seen.
    pub max_packing_ratio: f64,
    pub nets: usize,
    pub class_violations: Vec<String>,
    /// Largest class count seen, per dimension `1..=max_dim`.
    pub max_classes: Vec<usize>,
    pub class_bounds: Vec<String>,
}

impl PackingCheck {
    pub fn counterexamples(&self) -> usize {
        self.packing_violations.len() + self.class_violations.len()
    }
}

fn random_point_in(ball: &Ball, rng: &mut ChaCha8Rng) -> RationalPoint {
    const GRID: i64 = 1 << 16;
    loop {
        let coords: Vec<Rational> =
            (0..ball.dim()).map(|_| Rational::new(BigInt::from(rng.gen_range(-GRID + 1..GRID)), BigInt::from(GRID)) * &ball.radius).collect();
        let p = ball.center.add(&RationalPoint::new(coords).unwrap());
        if ball.contains_open(&p) {
            return p;
        }
    }
}

/// Random `3βρ`-separated sets inside `B(c, (1−β)ρ)` against the packing
/// bound, and random nets against the class bound, in dimensions
/// `1..=max_dim`. Each set is a greedy separated subset of many random
/// points, so it is close to maximal.
pub fn check_packing(instances: usize, max_dim: usize, seed: u64) -> PackingCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = PackingCheck {
        instances,
        packing_violations: Vec::new(),
        max_packing_ratio: 0.0,
        nets: 0,
        class_violations: Vec::new(),
        max_classes: vec![0; max_dim],
        class_bounds: (1..=max_dim).map(|d| class_bound(d as u32).to_string()).collect(),
    };
    for inst in 0..instances {
        let d = rng.gen_range(1..=max_dim);
        let beta = Rational::new(BigInt::from(rng.gen_range(1..=20)), BigInt::from(rng.gen_range(41..=200)));
        let rho = Rational::new(BigInt::from(rng.gen_range(1..=16)), BigInt::from(rng.gen_range(1..=16)));
        let center = RationalPoint::new((0..d).map(|_| Rational::new(BigInt::from(rng.gen_range(-8..=8)), BigInt::from(8))).collect()).unwrap();
        let ball = Ball { center, radius: (Rational::from_integer(BigInt::from(1)) - &beta) * &rho };
        let sep = int(3) * &beta * &rho;
        let bound = packing_bound(d as u32, &beta);
        let draws = bound.to_string().parse::<usize>().unwrap_or(usize::MAX).saturating_mul(4).clamp(64, 600);
        let raw: Vec<RationalPoint> = (0..draws).map(|_| random_point_in(&ball, &mut rng)).collect();
        let set = greedy_separated(&raw, &sep);
        let ratio = set.len() as f64 / bound.to_string().parse::<f64>().unwrap_or(f64::INFINITY);
        report.max_packing_ratio = report.max_packing_ratio.max(ratio);
        if BigUint::from(set.len()) > bound {
            report.packing_violations.push(PackingCase { dim: d, beta: format_rational(&beta), size: set.len(), bound: bound.to_string() });
        }

        // Nets are costly in higher dimension; test one every few instances.
        if inst % 4 == 0 {
            let spacing = Rational::new(BigInt::from(rng.gen_range(1..=8)), BigInt::from(rng.gen_range(1..=8)));
            let reach = if d >= 3 { 3 } else { 6 };
            let region_center =
                RationalPoint::new((0..d).map(|_| Rational::new(BigInt::from(rng.gen_range(-8..=8)), BigInt::from(rng.gen_range(1..=8)))).collect())
                    .unwrap();
            let region = Ball { center: region_center, radius: &spacing * Rational::new(BigInt::from(rng.gen_range(2..=2 * reach)), BigInt::from(2)) };
            let net = build_net(&region, &spacing, 0);
            report.nets += 1;
            let classes = net.classes.len();
            report.max_classes[d - 1] = report.max_classes[d - 1].max(classes);
            if BigUint::from(classes) > class_bound(d as u32) {
                report.class_violations.push(format!("d = {d}, spacing {}: {classes} classes", format_rational(&spacing)));
            }
            let six = &spacing * int(6);
            if net.classes.iter().any(|c| !is_separated(c, &six)) {
                report.class_violations.push(format!("d = {d}, spacing {}: a class is not 6·spacing separated", format_rational(&spacing)));
            }
        }
    }
    report
}
