//! Exact rational geometry in `Q^d`.
//!
//! Every legality-relevant predicate here compares squared distances in
//! rational arithmetic; nothing is decided in floating point.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::rational::{ceil_times_sqrt, format_rational, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(String),
    #[error("points must have dimension at least 1")]
    ZeroDimension,
}

/// A point of `Q^d`. Ordered lexicographically, which is the canonical
/// order used for every greedy tie-break in the crate.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalPoint(Vec<Rational>);

impl RationalPoint {
    pub fn new(coords: Vec<Rational>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        Ok(RationalPoint(coords))
    }

    pub fn origin(dim: usize) -> Self {
        assert!(dim >= 1);
        RationalPoint(vec![Rational::zero(); dim])
    }

    /// 1-d convenience constructor.
    pub fn scalar(x: Rational) -> Self {
        RationalPoint(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(crate::rational::to_f64).collect()
    }

    pub fn add(&self, other: &RationalPoint) -> RationalPoint {
        RationalPoint(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &RationalPoint) -> RationalPoint {
        RationalPoint(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, k: &Rational) -> RationalPoint {
        RationalPoint(self.0.iter().map(|a| a * k).collect())
    }
}

impl fmt::Debug for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for RationalPoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<String> = self.0.iter().map(format_rational).collect();
        strings.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let strings = Vec::<String>::deserialize(d)?;
        let coords = strings
            .iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect::<Result<Vec<_>, _>>()?;
        RationalPoint::new(coords).map_err(D::Error::custom)
    }
}

/// A Euclidean ball with exact rational center and positive radius.
/// Whether it is read as open or closed is up to the caller; see
/// [`Ball::contains_open`] and [`Ball::contains_closed`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ball {
    pub center: RationalPoint,
    #[serde(with = "crate::rational::serde_rational")]
    pub radius: Rational,
}

impl Ball {
    pub fn new(center: RationalPoint, radius: Rational) -> Result<Self, GeometryError> {
        if !radius.is_positive() {
            return Err(GeometryError::NonPositiveRadius(format_rational(&radius)));
        }
        Ok(Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Strict containment: `|x - c| < r`.
    pub fn contains_open(&self, x: &RationalPoint) -> bool {
        cmp_dist(&self.center, x, &self.radius) == Ordering::Less
    }

    /// `|x - c| <= r`.
    pub fn contains_closed(&self, x: &RationalPoint) -> bool {
        cmp_dist(&self.center, x, &self.radius) != Ordering::Greater
    }

    /// Closed-ball inclusion `self ⊆ other`: `|c1 - c2| + r1 <= r2`.
    pub fn inside(&self, other: &Ball) -> bool {
        let slack = &other.radius - &self.radius;
        !slack.is_negative() && cmp_dist(&self.center, &other.center, &slack) != Ordering::Greater
    }

    /// Whether the closed balls intersect: `|c1 - c2| <= r1 + r2`.
    pub fn meets(&self, other: &Ball) -> bool {
        let reach = &self.radius + &other.radius;
        cmp_dist(&self.center, &other.center, &reach) != Ordering::Greater
    }
}

/// Squared Euclidean distance. Panics on a dimension mismatch; use
/// [`try_dist_sq`] where inputs are untrusted.
pub fn dist_sq(x: &RationalPoint, y: &RationalPoint) -> Rational {
    try_dist_sq(x, y).expect("points of equal dimension")
}

/// Compares `|x - y|` with `r ≥ 0` exactly, without normalizing any
/// intermediate fraction. Panics on a dimension mismatch.
pub fn cmp_dist(x: &RationalPoint, y: &RationalPoint, r: &Rational) -> Ordering {
    assert_eq!(x.dim(), y.dim(), "points of equal dimension");
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for (a, b) in x.coords().iter().zip(y.coords()) {
        let n = a.numer() * b.denom() - b.numer() * a.denom();
        let m = a.denom() * b.denom();
        let m2 = &m * &m;
        num = num * &m2 + &n * &n * &den;
        den *= m2;
    }
    (num * r.denom() * r.denom()).cmp(&(r.numer() * r.numer() * den))
}

pub fn try_dist_sq(x: &RationalPoint, y: &RationalPoint) -> Result<Rational, GeometryError> {
    if x.dim() != y.dim() {
        return Err(GeometryError::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    let mut acc = Rational::zero();
    for (a, b) in x.0.iter().zip(&y.0) {
        let t = a - b;
        acc += &t * &t;
    }
    Ok(acc)
}

/// Exactly decides `|x - y| >= r` for `r >= 0`.
pub fn dist_ge(x: &RationalPoint, y: &RationalPoint, r: &Rational) -> Result<bool, GeometryError> {
    if x.dim() != y.dim() {
        try_dist_sq(x, y)?;
    }
    Ok(cmp_dist(x, y, r) != Ordering::Less)
}

/// True iff all distinct pairs are at distance `>= r` (non-strict).
pub fn is_separated(points: &[RationalPoint], r: &Rational) -> bool {
    first_close_pair(points, r).is_none()
}

/// The first pair (in index order) closer than `r`, if any.
pub fn first_close_pair(points: &[RationalPoint], r: &Rational) -> Option<(usize, usize)> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].dim() != points[j].dim() || cmp_dist(&points[i], &points[j], r) == Ordering::Less {
                return Some((i, j));
            }
        }
    }
    None
}

/// `ceil(4 sqrt(d) / (3 beta))^d`, with the ceiling taken exactly.
pub fn packing_bound(d: u32, beta: &Rational) -> BigUint {
    assert!(d >= 1);
    assert!(beta.is_positive() && beta < &Rational::new(BigInt::one(), BigInt::from(2)));
    let q = Rational::from_integer(BigInt::from(4)) / (Rational::from_integer(BigInt::from(3)) * beta);
    ceil_times_sqrt(&q, u64::from(d)).pow(d)
}

/// `ceil(14 sqrt(d))^d`.
pub fn class_bound(d: u32) -> BigUint {
    assert!(d >= 1);
    ceil_times_sqrt(&Rational::from_integer(BigInt::from(14)), u64::from(d)).pow(d)
}

/// A separated net at one level of the game, with its partition into
/// sparser classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetFamily {
    pub level: usize,
    #[serde(with = "crate::rational::serde_rational")]
    pub spacing: Rational,
    pub points: Vec<RationalPoint>,
    pub classes: Vec<Vec<RationalPoint>>,
}

impl NetFamily {
    /// Index of the class containing `p`.
    pub fn class_of(&self, p: &RationalPoint) -> Option<usize> {
        self.classes.iter().position(|c| c.binary_search(p).is_ok())
    }
}

/// Lattice step used by [`build_net`]: `spacing / (2 ceil(sqrt d))`, a
/// rational no larger than `spacing / (2 sqrt d)`.
pub fn net_lattice_step(spacing: &Rational, d: usize) -> Rational {
    let root = ceil_times_sqrt(&Rational::one(), d as u64);
    spacing / Rational::from_integer(BigInt::from(root) * 2)
}

/// Greedy maximal `spacing`-separated subset of the lattice
/// `step * Z^d` inside the closed region, scanned lexicographically.
pub fn build_net(region: &Ball, spacing: &Rational, level: usize) -> NetFamily {
    assert!(spacing.is_positive());
    let d = region.dim();
    let step = net_lattice_step(spacing, d);
    let lattice = lattice_points(region, &step);
    let points = greedy_separated(&lattice, spacing);
    let separation = spacing * Rational::from_integer(BigInt::from(6));
    let classes = partition_net(&points, &separation);
    NetFamily { level, spacing: spacing.clone(), points, classes }
}

/// All points of `step * Z^d` in the closed ball, in lexicographic order.
pub fn lattice_points(region: &Ball, step: &Rational) -> Vec<RationalPoint> {
    let ranges: Vec<(BigInt, BigInt)> = region
        .center
        .coords()
        .iter()
        .map(|c| {
            let lo = ((c - &region.radius) / step).ceil().to_integer();
            let hi = ((c + &region.radius) / step).floor().to_integer();
            (lo, hi)
        })
        .collect();
    let mut out = Vec::new();
    let mut current: Vec<BigInt> = ranges.iter().map(|(lo, _)| lo.clone()).collect();
    if ranges.iter().any(|(lo, hi)| lo > hi) {
        return out;
    }
    loop {
        let p = RationalPoint(current.iter().map(|k| Rational::from_integer(k.clone()) * step).collect());
        if region.contains_closed(&p) {
            out.push(p);
        }
        // odometer increment, last coordinate fastest => lexicographic order
        let mut axis = current.len();
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if current[axis] < ranges[axis].1 {
                current[axis] += 1;
                for k in axis + 1..current.len() {
                    current[k] = ranges[k].0.clone();
                }
                break;
            }
        }
    }
}

/// Greedy class building: class `i` is the greedy maximal
/// `separation`-separated subset of what earlier classes left over, each
/// scan in canonical order. Classes come back sorted.
pub fn partition_net(points: &[RationalPoint], separation: &Rational) -> Vec<Vec<RationalPoint>> {
    let mut rest: Vec<RationalPoint> = points.to_vec();
    rest.sort();
    let mut classes = Vec::new();
    while !rest.is_empty() {
        let keep = greedy_separated_indices(&rest, separation);
        let mut taken = vec![false; rest.len()];
        for &i in &keep {
            taken[i] = true;
        }
        classes.push(keep.iter().map(|&i| rest[i].clone()).collect());
        rest = rest.into_iter().zip(taken).filter(|(_, t)| !t).map(|(p, _)| p).collect();
    }
    classes
}

/// Greedy maximal `r`-separated subsequence of `points`, keeping input
/// order.
pub fn greedy_separated(points: &[RationalPoint], r: &Rational) -> Vec<RationalPoint> {
    greedy_separated_indices(points, r).into_iter().map(|i| points[i].clone()).collect()
}

/// Indices kept by the greedy scan. A hash grid of cell size `r` limits
/// each check to neighbouring cells.
pub fn greedy_separated_indices(points: &[RationalPoint], r: &Rational) -> Vec<usize> {
    assert!(r.is_positive());
    let Some(first) = points.first() else { return Vec::new() };
    let d = first.dim();
    let mut grid: HashMap<Vec<BigInt>, Vec<usize>> = HashMap::new();
    let mut kept = Vec::new();
    let offsets = neighbour_offsets(d);
    for (idx, p) in points.iter().enumerate() {
        let cell: Vec<BigInt> = p.coords().iter().map(|c| (c.numer() * r.denom()).div_floor(&(c.denom() * r.numer()))).collect();
        let clash = offsets.iter().any(|off| {
            let key: Vec<BigInt> = cell.iter().zip(off).map(|(c, o)| c + o).collect();
            grid.get(&key).is_some_and(|bucket| bucket.iter().any(|&k| cmp_dist(&points[k], p, r) == Ordering::Less))
        });
        if !clash {
            grid.entry(cell).or_default().push(idx);
            kept.push(idx);
        }
    }
    kept
}

fn neighbour_offsets(d: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-1..=1).map(move |o| {
                    let mut w = v.clone();
                    w.push(o);
                    w
                })
            })
            .collect();
    }
    out
}

/// Index of the point nearest to `x`, least in canonical order on ties.
/// `points` must be sorted.
pub fn nearest(points: &[RationalPoint], x: &RationalPoint) -> Option<usize> {
    let mut best: Option<(usize, Rational)> = None;
    for (i, p) in points.iter().enumerate() {
        let d = dist_sq(p, x);
        if best.as_ref().is_none_or(|(_, b)| &d < b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}
