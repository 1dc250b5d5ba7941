use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{containment_ball, GameParams, MoveI, Position, StrategyError, StrategyI, StrategyII};
use crate::geometry::{dist_sq, is_separated, Ball, RationalPoint};
use crate::rational::{format_rational, int, Rational};
use crate::targets::TargetSet;

fn require_nonempty(offered: &[RationalPoint]) -> Result<(), StrategyError> {
    if offered.is_empty() {
        Err(StrategyError::new("offered an empty set"))
    } else {
        Ok(())
    }
}

/// splitmix64 finalizer, used to combine seeds.
pub(crate) fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Picks the offered point farthest from the target; ties go to the
/// canonically least point.
#[derive(Clone, Debug)]
pub struct AvoidII {
    target: TargetSet,
}

impl AvoidII {
    pub fn new(target: TargetSet) -> Self {
        AvoidII { target }
    }

    /// Distance key; `None` is infinite.
    fn key(&self, params: &GameParams, round: usize, x: &RationalPoint) -> Option<Rational> {
        match &self.target {
            TargetSet::Empty { .. } => None,
            TargetSet::Finite(pts) => pts.iter().map(|p| dist_sq(p, x)).min(),
            TargetSet::Ifs(_) => self.target.dist_lower_at_scale(x, &params.rho(round + 1)),
        }
    }
}

impl StrategyII for AvoidII {
    fn choose(&mut self, params: &GameParams, pos: &Position, offered: &[RationalPoint], _digits: &[u64]) -> Result<RationalPoint, StrategyError> {
        require_nonempty(offered)?;
        let mut best: Option<(&RationalPoint, Option<Rational>)> = None;
        for x in offered {
            let key = self.key(params, pos.len(), x);
            let better = match &best {
                None => true,
                Some((bx, bk)) => match (bk, &key) {
                    (None, None) => x < bx,
                    (None, Some(_)) => false,
                    (Some(_), None) => true,
                    (Some(b), Some(k)) => k > b || (k == b && x < bx),
                },
            };
            if better {
                best = Some((x, key));
            }
        }
        Ok(best.unwrap().0.clone())
    }

    fn name(&self) -> String {
        "avoid".into()
    }
}

/// Picks the offered point nearest to a fixed point.
#[derive(Clone, Debug)]
pub struct NearestII {
    pub point: RationalPoint,
}

impl StrategyII for NearestII {
    fn choose(&mut self, _params: &GameParams, _pos: &Position, offered: &[RationalPoint], _digits: &[u64]) -> Result<RationalPoint, StrategyError> {
        require_nonempty(offered)?;
        if let Some(p) = offered.iter().find(|p| p.dim() != self.point.dim()) {
            return Err(StrategyError::new(format!("offered point of dimension {}, reference point has {}", p.dim(), self.point.dim())));
        }
        let i = crate::geometry::nearest(offered, &self.point).unwrap();
        Ok(offered[i].clone())
    }

    fn name(&self) -> String {
        let coords: Vec<String> = self.point.coords().iter().map(format_rational).collect();
        format!("nearest:{}", coords.join(","))
    }
}

/// Always the canonically least offered point.
#[derive(Clone, Debug, Default)]
pub struct LeastII;

impl StrategyII for LeastII {
    fn choose(&mut self, _params: &GameParams, _pos: &Position, offered: &[RationalPoint], _digits: &[u64]) -> Result<RationalPoint, StrategyError> {
        require_nonempty(offered)?;
        Ok(offered.iter().min().unwrap().clone())
    }

    fn name(&self) -> String {
        "least".into()
    }
}

/// Uniform choice from a ChaCha stream keyed by seed and round.
#[derive(Clone, Debug)]
pub struct RandomII {
    base: u64,
    seed: u64,
}

impl RandomII {
    pub fn new(seed: u64) -> Self {
        RandomII { base: seed, seed }
    }
}

impl StrategyII for RandomII {
    fn choose(&mut self, _params: &GameParams, pos: &Position, offered: &[RationalPoint], _digits: &[u64]) -> Result<RationalPoint, StrategyError> {
        require_nonempty(offered)?;
        let mut sorted: Vec<&RationalPoint> = offered.iter().collect();
        sorted.sort();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(pos.len() as u64);
        Ok(sorted[rng.gen_range(0..sorted.len())].clone())
    }

    fn name(&self) -> String {
        format!("random:{}", self.base)
    }

    fn reseed(&mut self, seed: u64) {
        self.seed = mix(self.base, seed);
    }
}

/// A pseudo-random II that is a pure function of position, offered set
/// and digits: the pick is driven by a hash of all three.
#[derive(Clone, Debug)]
pub struct HashedII {
    pub salt: u64,
}

impl StrategyII for HashedII {
    fn choose(&mut self, _params: &GameParams, pos: &Position, offered: &[RationalPoint], digits: &[u64]) -> Result<RationalPoint, StrategyError> {
        require_nonempty(offered)?;
        let mut sorted: Vec<&RationalPoint> = offered.iter().collect();
        sorted.sort();
        let mut h = DefaultHasher::new();
        self.salt.hash(&mut h);
        pos.hash(&mut h);
        sorted.hash(&mut h);
        digits.hash(&mut h);
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
        Ok(sorted[rng.gen_range(0..sorted.len())].clone())
    }

    fn name(&self) -> String {
        format!("hashed:{}", self.salt)
    }
}

/// Random legal player I: a few separated random rational points strictly
/// inside the containment ball (round 0 uses `B(0, ρ₀)`).
#[derive(Clone, Debug)]
pub struct RandomLegalI {
    base: u64,
    seed: u64,
    pub max_points: usize,
}

impl RandomLegalI {
    pub fn new(seed: u64, max_points: usize) -> Self {
        RandomLegalI { base: seed, seed, max_points: max_points.max(1) }
    }
}

const GRID: i64 = 1 << 20;

impl StrategyI for RandomLegalI {
    fn next_move(&mut self, params: &GameParams, pos: &Position) -> Result<MoveI, StrategyError> {
        let ball = containment_ball(params, pos)
            .unwrap_or_else(|| Ball { center: RationalPoint::origin(params.dim()), radius: params.rho0().clone() });
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(pos.len() as u64);
        let want = rng.gen_range(1..=self.max_points);
        let sep = int(3) * params.rho(pos.len());
        let mut points: Vec<RationalPoint> = Vec::new();
        for _ in 0..want * 20 {
            if points.len() == want {
                break;
            }
            let coords: Vec<Rational> = (0..params.dim())
                .map(|_| Rational::new(BigInt::from(rng.gen_range(-GRID + 1..GRID)), BigInt::from(GRID)) * &ball.radius)
                .collect();
            let p = ball.center.add(&RationalPoint::new(coords).unwrap());
            if !ball.contains_open(&p) {
                continue;
            }
            let mut trial = points.clone();
            trial.push(p);
            if is_separated(&trial, &sep) {
                points = trial;
            }
        }
        if points.is_empty() {
            points.push(ball.center.clone());
        }
        Ok(MoveI::points(points))
    }

    fn name(&self) -> String {
        format!("random-legal:{}:{}", self.base, self.max_points)
    }

    fn reseed(&mut self, seed: u64) {
        self.seed = mix(self.base, seed);
    }
}

/// Player I that always offers a single point: the previous choice, or
/// the origin at round 0.
#[derive(Clone, Debug, Default)]
pub struct StayI;

impl StrategyI for StayI {
    fn next_move(&mut self, params: &GameParams, pos: &Position) -> Result<MoveI, StrategyError> {
        let x = pos.last_chosen().cloned().unwrap_or_else(|| RationalPoint::origin(params.dim()));
        Ok(MoveI::points(vec![x]))
    }

    fn name(&self) -> String {
        "stay".into()
    }
}
