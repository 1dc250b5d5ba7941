//! Target sets the game is played about.
//!
//! A target answers scale-indexed distance queries. Attractors of
//! equicontractive rational IFSs additionally enumerate nested pieces,
//! each a closed ball circumscribing one level-k cell.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dist_sq, Ball, RationalPoint};
use crate::rational::{format_rational, int, ln_bigint, ln_rational, parse_rational, rat, sqrt_lower, sqrt_upper, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TargetError {
    #[error("contraction ratio must lie in (0,1), got {0}")]
    BadRatio(String),
    #[error("an IFS needs at least one map")]
    NoMaps,
    #[error("map {map}: {reason}")]
    BadMap { map: usize, reason: String },
    #[error("witness box is degenerate or has the wrong dimension")]
    BadWitnessBox,
    #[error("map {0} sends the witness box outside itself")]
    BoxNotInvariant(usize),
    #[error("open set condition fails: images of maps {0} and {1} overlap")]
    OverlappingImages(usize, usize),
    #[error("unknown target spec `{0}`")]
    UnknownSpec(String),
    #[error("bad point list in `{spec}`: {reason}")]
    BadPoints { spec: String, reason: String },
    #[error("reading IFS definition: {0}")]
    Io(String),
}

/// `x -> O x` with `(O x)_k = ±x_{perm[k]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct SignedPerm {
    perm: Vec<usize>,
    flip: Vec<bool>,
}

impl SignedPerm {
    fn identity(d: usize) -> Self {
        SignedPerm { perm: (0..d).collect(), flip: vec![false; d] }
    }

    fn apply(&self, x: &RationalPoint) -> RationalPoint {
        let c = x.coords();
        let coords = self
            .perm
            .iter()
            .zip(&self.flip)
            .map(|(&src, &neg)| if neg { -c[src].clone() } else { c[src].clone() })
            .collect();
        RationalPoint::new(coords).unwrap()
    }

    fn apply_ints(&self, x: &[BigInt]) -> Vec<BigInt> {
        self.perm.iter().zip(&self.flip).map(|(&src, &neg)| if neg { -&x[src] } else { x[src].clone() }).collect()
    }

    /// `self ∘ other`
    fn compose(&self, other: &SignedPerm) -> SignedPerm {
        let perm = self.perm.iter().map(|&k| other.perm[k]).collect();
        let flip = self.perm.iter().zip(&self.flip).map(|(&k, &f)| f ^ other.flip[k]).collect();
        SignedPerm { perm, flip }
    }
}

/// One contracting similarity `x -> r O x + t` (the ratio lives on the
/// owning system).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityMap {
    pub translation: RationalPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip: Option<Vec<bool>>,
}

impl SimilarityMap {
    pub fn translate(t: RationalPoint) -> Self {
        SimilarityMap { translation: t, perm: None, flip: None }
    }

    fn orientation(&self, d: usize) -> SignedPerm {
        SignedPerm {
            perm: self.perm.clone().unwrap_or_else(|| (0..d).collect()),
            flip: self.flip.clone().unwrap_or_else(|| vec![false; d]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessBox {
    pub lo: RationalPoint,
    pub hi: RationalPoint,
}

/// On-disk form of a custom IFS.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IfsDefinition {
    pub name: String,
    #[serde(with = "crate::rational::serde_rational")]
    pub ratio: Rational,
    pub witness_box: WitnessBox,
    pub maps: Vec<SimilarityMap>,
}

/// A level-k piece: its address and the closed ball circumscribing the
/// cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub address: Vec<u32>,
    pub ball: Ball,
}

/// A level-k cell: composite orientation and center `num / (L q^k)`,
/// where `r = p/q` and `L` clears the denominators of the level-0 data.
#[derive(Clone, Debug)]
struct Cell {
    address: Vec<u32>,
    orient: SignedPerm,
    num: Vec<BigInt>,
}

/// Integer form of the maps: the root center and `f_b(c) − c`, scaled by `L`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Lattice {
    p: BigInt,
    q: BigInt,
    l: BigInt,
    root: Vec<BigInt>,
    offsets: Vec<Vec<BigInt>>,
}

/// Running per-level constants `p^k` and `L q^k`.
#[derive(Clone, Debug)]
struct LevelScale {
    pk: BigInt,
    denom: BigInt,
}

/// Compares `|center − X|` with a reach, both scaled by a level denominator,
/// using integer arithmetic only.
struct BallTest {
    y: Vec<BigInt>,
    e: BigInt,
    t2: BigInt,
    rhs: BigInt,
}

impl BallTest {
    /// `y0 / e` is `X`; `s / t` is the scaled reach.
    fn new(y0: &[BigInt], e: &BigInt, denom: &BigInt, s: &BigInt, t: &BigInt) -> Self {
        BallTest { y: y0.iter().map(|v| v * denom).collect(), e: e.clone(), t2: t * t, rhs: s * s * e * e }
    }

    fn cmp(&self, num: &[BigInt]) -> Ordering {
        let mut sum = BigInt::zero();
        for (z, y) in num.iter().zip(&self.y) {
            let diff = z * &self.e - y;
            sum += &diff * &diff;
        }
        (sum * &self.t2).cmp(&self.rhs)
    }
}

/// `x` as integer numerators over one common denominator.
fn common_form(x: &RationalPoint) -> (Vec<BigInt>, BigInt) {
    let e = x.coords().iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let y = x.coords().iter().map(|c| c.numer() * (&e / c.denom())).collect();
    (y, e)
}

/// Equicontractive IFS of rational similarities with a verified open set
/// condition witness box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IfsSystem {
    def: IfsDefinition,
    orients: Vec<SignedPerm>,
    box_center: RationalPoint,
    /// Rational upper bound on the half-diagonal of the witness box.
    base_radius: Rational,
    lattice: Lattice,
}

impl Lattice {
    fn new(def: &IfsDefinition, orients: &[SignedPerm], center: &RationalPoint) -> Self {
        let r = &def.ratio;
        let offsets: Vec<RationalPoint> =
            def.maps.iter().zip(orients).map(|(m, o)| o.apply(center).scale(r).add(&m.translation).sub(center)).collect();
        let l = std::iter::once(center)
            .chain(&offsets)
            .flat_map(|p| p.coords().iter())
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints = |p: &RationalPoint| p.coords().iter().map(|c| c.numer() * (&l / c.denom())).collect::<Vec<_>>();
        Lattice { p: r.numer().clone(), q: r.denom().clone(), root: ints(center), offsets: offsets.iter().map(ints).collect(), l: l.clone() }
    }
}

impl IfsSystem {
    pub fn new(def: IfsDefinition) -> Result<Self, TargetError> {
        let d = def.witness_box.lo.dim();
        if def.witness_box.hi.dim() != d || def.witness_box.lo.coords().iter().zip(def.witness_box.hi.coords()).any(|(a, b)| a >= b) {
            return Err(TargetError::BadWitnessBox);
        }
        if !def.ratio.is_positive() || def.ratio >= Rational::one() {
            return Err(TargetError::BadRatio(format_rational(&def.ratio)));
        }
        if def.maps.is_empty() {
            return Err(TargetError::NoMaps);
        }
        let mut orients = Vec::with_capacity(def.maps.len());
        for (i, m) in def.maps.iter().enumerate() {
            if m.translation.dim() != d {
                return Err(TargetError::BadMap { map: i, reason: "translation has the wrong dimension".into() });
            }
            let o = m.orientation(d);
            let mut seen = o.perm.clone();
            seen.sort_unstable();
            if o.perm.len() != d || o.flip.len() != d || seen != (0..d).collect::<Vec<_>>() {
                return Err(TargetError::BadMap { map: i, reason: "perm/flip is not a signed permutation".into() });
            }
            orients.push(o);
        }
        let half = rat(1, 2);
        let box_center = def.witness_box.lo.add(&def.witness_box.hi).scale(&half);
        let half_diag_sq = dist_sq(&def.witness_box.lo, &box_center);
        let base_radius = sqrt_upper(&half_diag_sq);
        let lattice = Lattice::new(&def, &orients, &box_center);
        let sys = IfsSystem { def, orients, box_center, base_radius, lattice };
        sys.verify_witness_box()?;
        Ok(sys)
    }

    /// Each image of the witness box must stay inside it, and distinct
    /// images must have disjoint interiors.
    fn verify_witness_box(&self) -> Result<(), TargetError> {
        let boxes: Vec<(RationalPoint, RationalPoint)> = (0..self.def.maps.len()).map(|i| self.image_box(i)).collect();
        let (lo, hi) = (&self.def.witness_box.lo, &self.def.witness_box.hi);
        for (i, (a, b)) in boxes.iter().enumerate() {
            let inside = a.coords().iter().zip(lo.coords()).all(|(x, l)| x >= l) && b.coords().iter().zip(hi.coords()).all(|(x, h)| x <= h);
            if !inside {
                return Err(TargetError::BoxNotInvariant(i));
            }
        }
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                let (a1, b1) = &boxes[i];
                let (a2, b2) = &boxes[j];
                let separated_on_some_axis = (0..self.dim()).any(|k| b1.coords()[k] <= a2.coords()[k] || b2.coords()[k] <= a1.coords()[k]);
                if !separated_on_some_axis {
                    return Err(TargetError::OverlappingImages(i, j));
                }
            }
        }
        Ok(())
    }

    fn image_box(&self, i: usize) -> (RationalPoint, RationalPoint) {
        let a = self.apply_map(i, &self.def.witness_box.lo);
        let b = self.apply_map(i, &self.def.witness_box.hi);
        let lo = a.coords().iter().zip(b.coords()).map(|(x, y)| x.min(y).clone()).collect();
        let hi = a.coords().iter().zip(b.coords()).map(|(x, y)| x.max(y).clone()).collect();
        (RationalPoint::new(lo).unwrap(), RationalPoint::new(hi).unwrap())
    }

    fn apply_map(&self, i: usize, x: &RationalPoint) -> RationalPoint {
        self.orients[i].apply(x).scale(&self.def.ratio).add(&self.def.maps[i].translation)
    }

    pub fn definition(&self) -> &IfsDefinition {
        &self.def
    }

    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn dim(&self) -> usize {
        self.box_center.dim()
    }

    pub fn ratio(&self) -> &Rational {
        &self.def.ratio
    }

    pub fn map_count(&self) -> usize {
        self.def.maps.len()
    }

    /// `ln N / ln(1/r)`.
    pub fn similarity_dimension(&self) -> f64 {
        (self.map_count() as f64).ln() / -ln_rational(&self.def.ratio)
    }

    pub fn witness_box(&self) -> &WitnessBox {
        &self.def.witness_box
    }

    /// Circumscribed radius of level-k pieces.
    pub fn piece_radius(&self, level: usize) -> Rational {
        pow(&self.def.ratio, level) * &self.base_radius
    }

    /// Least level whose piece diameter is strictly below `bound`.
    pub fn level_with_diameter_below(&self, bound: &Rational) -> usize {
        assert!(bound.is_positive());
        let (rn, rd) = (self.base_radius.numer(), self.base_radius.denom());
        self.least_level(&(rn * bound.denom() * 2), &(bound.numer() * rd), true, usize::MAX)
    }

    fn root(&self) -> Cell {
        Cell { address: Vec::new(), orient: SignedPerm::identity(self.dim()), num: self.lattice.root.clone() }
    }

    fn root_scale(&self) -> LevelScale {
        LevelScale { pk: BigInt::one(), denom: self.lattice.l.clone() }
    }

    fn next_scale(&self, s: &LevelScale) -> LevelScale {
        LevelScale { pk: &s.pk * &self.lattice.p, denom: &s.denom * &self.lattice.q }
    }

    /// Child of a cell at the level described by `s`.
    fn child(&self, cell: &Cell, s: &LevelScale, digit: u32) -> Cell {
        let off = cell.orient.apply_ints(&self.lattice.offsets[digit as usize]);
        let num = cell.num.iter().zip(off).map(|(z, v)| (z + &s.pk * v) * &self.lattice.q).collect();
        let mut address = cell.address.clone();
        address.push(digit);
        Cell { address, orient: cell.orient.compose(&self.orients[digit as usize]), num }
    }

    fn children<'a>(&'a self, cells: &'a [Cell], s: &'a LevelScale) -> impl Iterator<Item = Cell> + 'a {
        cells.iter().flat_map(move |c| (0..self.map_count() as u32).map(move |a| self.child(c, s, a)))
    }

    fn cell_at(&self, address: &[u32]) -> (Cell, LevelScale) {
        let mut cell = self.root();
        let mut s = self.root_scale();
        for &a in address {
            cell = self.child(&cell, &s, a);
            s = self.next_scale(&s);
        }
        (cell, s)
    }

    fn cell_center(&self, cell: &Cell, s: &LevelScale) -> RationalPoint {
        RationalPoint::new(cell.num.iter().map(|z| Rational::new(z.clone(), s.denom.clone())).collect()).unwrap()
    }

    fn pieces_of(&self, cells: Vec<Cell>, s: &LevelScale, level: usize) -> Vec<Piece> {
        let radius = self.piece_radius(level);
        cells
            .into_iter()
            .map(|c| {
                let center = self.cell_center(&c, s);
                Piece { address: c.address, ball: Ball { center, radius: radius.clone() } }
            })
            .collect()
    }

    /// `(R_k + extra) L q^k` as `s / t`.
    fn scaled_reach(&self, s: &LevelScale, with_piece: bool, extra: &Rational) -> (BigInt, BigInt) {
        let (rn, rd) = (self.base_radius.numer(), self.base_radius.denom());
        let t = rd * extra.denom();
        let mut num = extra.numer() * &s.denom * rd;
        if with_piece {
            num += rn * &self.lattice.l * &s.pk * extra.denom();
        }
        (num, t)
    }

    /// Piece with the given address; panics on an out-of-range digit.
    pub fn piece(&self, address: &[u32]) -> Piece {
        assert!(address.iter().all(|&a| (a as usize) < self.map_count()));
        let (cell, s) = self.cell_at(address);
        self.pieces_of(vec![cell], &s, address.len()).pop().unwrap()
    }

    /// All `N^k` level-k pieces in address order.
    pub fn pieces(&self, level: usize) -> Vec<Piece> {
        self.descendants(&[], level)
    }

    /// Centers of all level-`level` pieces as integer numerators over one
    /// common denominator, in address order.
    pub fn center_numerators(&self, level: usize) -> (Vec<Vec<BigInt>>, BigInt) {
        let mut cells = vec![self.root()];
        let mut s = self.root_scale();
        for _ in 0..level {
            cells = self.children(&cells, &s).collect();
            s = self.next_scale(&s);
        }
        (cells.into_iter().map(|c| c.num).collect(), s.denom)
    }

    /// Level-`level` descendants of the piece at `address`.
    pub fn descendants(&self, address: &[u32], level: usize) -> Vec<Piece> {
        assert!(level >= address.len());
        let (cell, mut s) = self.cell_at(address);
        let mut cells = vec![cell];
        for _ in address.len()..level {
            cells = self.children(&cells, &s).collect();
            s = self.next_scale(&s);
        }
        self.pieces_of(cells, &s, level)
    }

    /// Cells at `level` kept by `keep(test at that level, cell)`, where every
    /// level applies the ball test of `(center, radius + R_j)`. The last level
    /// uses `last` instead.
    fn descend(&self, level: usize, center: &RationalPoint, radius: &Rational, keep: impl Fn(Ordering) -> bool, last: Option<&dyn Fn(Ordering) -> bool>) -> (Vec<Cell>, LevelScale) {
        let (y0, e) = common_form(center);
        let mut cells = vec![self.root()];
        let mut s = self.root_scale();
        for j in 1..=level {
            let kids: Vec<Cell> = self.children(&cells, &s).collect();
            s = self.next_scale(&s);
            let final_level = j == level && last.is_some();
            let (rs, rt) = self.scaled_reach(&s, !final_level, radius);
            let test = BallTest::new(&y0, &e, &s.denom, &rs, &rt);
            cells = kids
                .into_iter()
                .filter(|c| {
                    let o = test.cmp(&c.num);
                    match last {
                        Some(f) if final_level => f(o),
                        _ => keep(o),
                    }
                })
                .collect();
            if cells.is_empty() {
                break;
            }
        }
        (cells, s)
    }

    /// Level-`level` pieces whose center lies strictly inside `region`.
    /// Subtrees whose ball cannot reach the region are pruned.
    pub fn pieces_centered_in(&self, level: usize, region: &Ball) -> Vec<Piece> {
        let inside = |o: Ordering| o == Ordering::Less;
        if level == 0 {
            return self.pieces(0).into_iter().filter(|p| region.contains_open(&p.ball.center)).collect();
        }
        let (cells, s) = self.descend(level, &region.center, &region.radius, inside, Some(&inside));
        self.pieces_of(cells, &s, level)
    }

    /// Address of the level-`level` piece centered exactly at `x`.
    pub fn address_of_center(&self, x: &RationalPoint, level: usize) -> Option<Vec<u32>> {
        if level == 0 {
            return (self.cell_center(&self.root(), &self.root_scale()) == *x).then(Vec::new);
        }
        let zero = Rational::zero();
        let (cells, _) = self.descend(level, x, &zero, |o| o != Ordering::Greater, Some(&|o| o == Ordering::Equal));
        cells.into_iter().next().map(|c| c.address)
    }

    /// Whether every level-`level` piece ball stays farther than
    /// `threshold` from `x`, which certifies `dist(x, attractor) > threshold`.
    pub fn dist_exceeds(&self, x: &RationalPoint, threshold: &Rational, level: usize) -> bool {
        let (y0, e) = common_form(x);
        let s0 = self.root_scale();
        let (rs, rt) = self.scaled_reach(&s0, true, threshold);
        if BallTest::new(&y0, &e, &s0.denom, &rs, &rt).cmp(&self.root().num) == Ordering::Greater {
            return true;
        }
        let (cells, _) = self.descend(level, x, threshold, |o| o != Ordering::Greater, None);
        cells.is_empty()
    }

    /// Sound lower bound on `dist(x, attractor)` from level-k pieces:
    /// `min (|x - center| - radius)^+`, with branch-and-bound pruning.
    pub fn dist_lower(&self, x: &RationalPoint, level: usize) -> Rational {
        let mut best: Option<Rational> = None;
        let mut stack = vec![(self.root(), self.root_scale())];
        while let Some((cell, s)) = stack.pop() {
            let k = cell.address.len();
            let bound = self.piece_gap(x, &cell, &s);
            if best.as_ref().is_some_and(|b| &bound >= b) {
                continue;
            }
            if k == level {
                best = Some(bound);
                if best.as_ref().is_some_and(Zero::is_zero) {
                    break;
                }
                continue;
            }
            let next = self.next_scale(&s);
            let mut kids: Vec<(Rational, Cell)> = (0..self.map_count() as u32)
                .map(|a| self.child(&cell, &s, a))
                .map(|c| (self.piece_gap(x, &c, &next), c))
                .collect();
            // visit the most promising child first
            kids.sort_by(|a, b| b.0.cmp(&a.0));
            stack.extend(kids.into_iter().map(|(_, c)| (c, next.clone())));
        }
        best.unwrap_or_else(Rational::zero)
    }

    fn piece_gap(&self, x: &RationalPoint, cell: &Cell, s: &LevelScale) -> Rational {
        let radius = self.piece_radius(cell.address.len());
        let d2 = dist_sq(x, &self.cell_center(cell, s));
        if d2 <= &radius * &radius {
            return Rational::zero();
        }
        let d = sqrt_lower(&d2) - radius;
        if d.is_negative() {
            Rational::zero()
        } else {
            d
        }
    }

    /// Least `k` with `a p^k < b q^k` (or `≤` when not `strict`), capped.
    fn least_level(&self, a: &BigInt, b: &BigInt, strict: bool, cap: usize) -> usize {
        let (p, q) = (&self.lattice.p, &self.lattice.q);
        let holds = |k: usize| {
            let lhs = a * p.pow(k as u32);
            let rhs = b * q.pow(k as u32);
            if strict {
                lhs < rhs
            } else {
                lhs <= rhs
            }
        };
        let est = (ln_bigint(a) - ln_bigint(b)) / (ln_bigint(q) - ln_bigint(p));
        let mut k = if est.is_finite() && est > 0.0 { (est.ceil() as usize).min(cap) } else { 0 };
        while k > 0 && holds(k - 1) {
            k -= 1;
        }
        while k < cap && !holds(k) {
            k += 1;
        }
        k
    }

    /// Level at which pieces resolve distances of order `scale`.
    pub fn level_for_scale(&self, scale: &Rational) -> usize {
        // R_k ≤ scale / 8
        let (rn, rd) = (self.base_radius.numer(), self.base_radius.denom());
        self.least_level(&(rn * scale.denom() * 8), &(scale.numer() * rd), false, 2048)
    }

    /// In d = 1, the least gap between distinct level-1 cells, taken as
    /// intervals. `None` when cells touch or d > 1.
    pub fn level_one_gap(&self) -> Option<Rational> {
        if self.dim() != 1 {
            return None;
        }
        let mut boxes: Vec<(Rational, Rational)> =
            (0..self.map_count()).map(|i| self.image_box(i)).map(|(a, b)| (a.coords()[0].clone(), b.coords()[0].clone())).collect();
        boxes.sort();
        let gap = boxes.windows(2).map(|w| &w[1].0 - &w[0].1).min()?;
        gap.is_positive().then_some(gap)
    }

    /// Cell side length at level 0 along the first axis.
    pub fn box_width(&self) -> Rational {
        &self.def.witness_box.hi.coords()[0] - &self.def.witness_box.lo.coords()[0]
    }
}

pub(crate) fn pow(q: &Rational, k: usize) -> Rational {
    Rational::new_raw(q.numer().pow(k as u32), q.denom().pow(k as u32))
}

/// Middle-thirds Cantor set in `[0,1]`.
pub fn cantor() -> IfsSystem {
    let p = |x: Rational| RationalPoint::scalar(x);
    IfsSystem::new(IfsDefinition {
        name: "cantor".into(),
        ratio: rat(1, 3),
        witness_box: WitnessBox { lo: p(int(0)), hi: p(int(1)) },
        maps: vec![SimilarityMap::translate(p(int(0))), SimilarityMap::translate(p(rat(2, 3)))],
    })
    .expect("cantor IFS is valid")
}

/// Sierpinski carpet in `[0,1]^2`: 8 maps of ratio 1/3.
pub fn sierpinski_carpet() -> IfsSystem {
    let mut maps = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            if i == 1 && j == 1 {
                continue;
            }
            maps.push(SimilarityMap::translate(RationalPoint::new(vec![rat(i, 3), rat(j, 3)]).unwrap()));
        }
    }
    let corner = |v| RationalPoint::new(vec![int(v), int(v)]).unwrap();
    IfsSystem::new(IfsDefinition {
        name: "carpet".into(),
        ratio: rat(1, 3),
        witness_box: WitnessBox { lo: corner(0), hi: corner(1) },
        maps,
    })
    .expect("carpet IFS is valid")
}

/// The set `A` a game is played about.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetSet {
    Empty { dim: usize },
    Finite(Vec<RationalPoint>),
    Ifs(IfsSystem),
}

impl TargetSet {
    pub fn dim(&self) -> usize {
        match self {
            TargetSet::Empty { dim } => *dim,
            TargetSet::Finite(pts) => pts.first().map_or(1, RationalPoint::dim),
            TargetSet::Ifs(ifs) => ifs.dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TargetSet::Empty { .. } => "empty",
            TargetSet::Finite(_) => "finite-points",
            TargetSet::Ifs(_) => "ifs-attractor",
        }
    }

    pub fn as_ifs(&self) -> Option<&IfsSystem> {
        match self {
            TargetSet::Ifs(ifs) => Some(ifs),
            _ => None,
        }
    }

    /// Rational lower bound on `dist(x, A)` at piece level `level`;
    /// `None` means the distance is infinite (empty target). Exact for
    /// finite targets in d = 1.
    pub fn dist_lower(&self, x: &RationalPoint, level: usize) -> Option<Rational> {
        match self {
            TargetSet::Empty { .. } => None,
            TargetSet::Finite(pts) => pts.iter().map(|p| dist_sq(p, x)).min().map(|d2| sqrt_lower(&d2)),
            TargetSet::Ifs(ifs) => Some(ifs.dist_lower(x, level)),
        }
    }

    /// Lower bound with the level picked to resolve `scale`.
    pub fn dist_lower_at_scale(&self, x: &RationalPoint, scale: &Rational) -> Option<Rational> {
        let level = match self {
            TargetSet::Ifs(ifs) => ifs.level_for_scale(scale),
            _ => 0,
        };
        self.dist_lower(x, level)
    }

    /// Whether `dist(x, A) > threshold` is certified, with pieces at the
    /// level resolving `scale`.
    pub fn dist_exceeds_at_scale(&self, x: &RationalPoint, scale: &Rational, threshold: &Rational) -> bool {
        match self {
            TargetSet::Empty { .. } => true,
            TargetSet::Finite(pts) => {
                let t2 = threshold * threshold;
                pts.iter().all(|p| dist_sq(p, x) > t2)
            }
            TargetSet::Ifs(ifs) => ifs.dist_exceeds(x, threshold, ifs.level_for_scale(scale)),
        }
    }

    /// Level-k pieces, for IFS targets only.
    pub fn pieces(&self, level: usize) -> Option<Vec<Piece>> {
        self.as_ifs().map(|ifs| ifs.pieces(level))
    }

    /// Parses `cantor`, `carpet`, `empty`, `empty:<d>`, `finite:(x1;x2;…)`
    /// (coordinates of one point separated by commas) or `json:<path>`.
    pub fn parse(spec: &str) -> Result<TargetSet, TargetError> {
        let s = spec.trim();
        match s {
            "cantor" => return Ok(TargetSet::Ifs(cantor())),
            "carpet" => return Ok(TargetSet::Ifs(sierpinski_carpet())),
            "empty" => return Ok(TargetSet::Empty { dim: 1 }),
            _ => {}
        }
        if let Some(d) = s.strip_prefix("empty:") {
            let dim = d.parse().ok().filter(|&d: &usize| d >= 1).ok_or_else(|| TargetError::UnknownSpec(s.into()))?;
            return Ok(TargetSet::Empty { dim });
        }
        if let Some(path) = s.strip_prefix("json:") {
            let text = std::fs::read_to_string(path).map_err(|e| TargetError::Io(e.to_string()))?;
            let def: IfsDefinition = serde_json::from_str(&text).map_err(|e| TargetError::Io(e.to_string()))?;
            return IfsSystem::new(def).map(TargetSet::Ifs);
        }
        if let Some(body) = s.strip_prefix("finite:") {
            let body = body.trim().trim_start_matches('(').trim_end_matches(')');
            let bad = |reason: String| TargetError::BadPoints { spec: s.into(), reason };
            let mut pts = Vec::new();
            for item in body.split(';').map(str::trim).filter(|t| !t.is_empty()) {
                let coords = item.split(',').map(|c| parse_rational(c).map_err(|e| bad(e.to_string()))).collect::<Result<Vec<_>, _>>()?;
                pts.push(RationalPoint::new(coords).map_err(|e| bad(e.to_string()))?);
            }
            if pts.is_empty() {
                return Err(bad("no points".into()));
            }
            if pts.iter().any(|p| p.dim() != pts[0].dim()) {
                return Err(bad("points of different dimensions".into()));
            }
            pts.sort();
            pts.dedup();
            return Ok(TargetSet::Finite(pts));
        }
        Err(TargetError::UnknownSpec(s.into()))
    }
}

impl fmt::Display for TargetSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSet::Empty { dim } if *dim == 1 => write!(f, "empty"),
            TargetSet::Empty { dim } => write!(f, "empty:{dim}"),
            TargetSet::Ifs(ifs) => write!(f, "{}", ifs.name()),
            TargetSet::Finite(pts) => {
                let items: Vec<String> =
                    pts.iter().map(|p| p.coords().iter().map(format_rational).collect::<Vec<_>>().join(",")).collect();
                write!(f, "finite:({})", items.join(";"))
            }
        }
    }
}

/// The coded-branch relation of an attractor: `(x, y)` belongs to it when
/// `x` lies in the attractor and `y` is an address of a piece chain
/// containing `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationOracle {
    pub base: TargetSet,
}

impl RelationOracle {
    pub fn ifs(&self) -> &IfsSystem {
        self.base.as_ifs().expect("relation oracles are built over IFS targets")
    }

    /// Digits a witness must carry for the piece at `address`.
    pub fn witness_rule(&self, address: &[u32]) -> Vec<u64> {
        address.iter().map(|&a| u64::from(a)).collect()
    }

    /// Whether the digit prefix names a valid piece that contains `x`.
    pub fn accepts(&self, x: &RationalPoint, digits: &[u64]) -> bool {
        match self.address_of(digits) {
            Some(address) => self.ifs().piece(&address).ball.contains_closed(x),
            None => false,
        }
    }

    /// Certified refutation: every point within `radius` of `x` is outside
    /// the piece named by `digits`, so no limit there can carry this
    /// witness.
    pub fn refutes(&self, x: &RationalPoint, digits: &[u64], radius: &Rational) -> bool {
        let Some(address) = self.address_of(digits) else { return true };
        let piece = self.ifs().piece(&address);
        let reach = radius + &piece.ball.radius;
        dist_sq(x, &piece.ball.center) > &reach * &reach
    }

    fn address_of(&self, digits: &[u64]) -> Option<Vec<u32>> {
        let n = self.ifs().map_count() as u64;
        digits.iter().map(|&d| (d < n).then_some(d as u32)).collect()
    }
}

pub fn coded_branch_relation(ifs: &IfsSystem) -> RelationOracle {
    RelationOracle { base: TargetSet::Ifs(ifs.clone()) }
}
