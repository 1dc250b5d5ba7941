use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;

use crate::geometry::RationalPoint;
use crate::rational::{ln_rational, rat, Rational};
use crate::targets::TargetSet;

use super::tree::{least_squares, DimensionEstimate};

/// Largest number of sample points generated for an attractor.
pub const POINT_BUDGET: usize = 300_000;

/// Box-counting estimate at grid sides `h_k = w r^k`, `k = 1..=levels`,
/// where `r` is the IFS ratio and `w` its box width (`1/3` and `1` for
/// finite targets). Each count is the number of grid cells holding a
/// sample point; attractors are sampled by piece centers at the deepest
/// level within [`POINT_BUDGET`], and scales finer than that level are
/// dropped. Returns `None` for the empty target or fewer than two scales.
pub fn box_count(target: &TargetSet, levels: usize) -> Option<DimensionEstimate> {
    // sample points as integer numerators over a common denominator
    let (points, denom, ratio, width, origin, max_level) = match target {
        TargetSet::Empty { .. } => return None,
        TargetSet::Finite(pts) => {
            let denom = pts.iter().flat_map(|p| p.coords()).fold(BigInt::from(1), |acc, c| acc.lcm(c.denom()));
            let nums = pts.iter().map(|p| p.coords().iter().map(|c| c.numer() * (&denom / c.denom())).collect()).collect();
            (nums, denom, rat(1, 3), Rational::from_integer(1.into()), RationalPoint::origin(target.dim()), levels)
        }
        TargetSet::Ifs(ifs) => {
            let n = ifs.map_count();
            let mut level = 0;
            while level < levels && n.checked_pow(level as u32 + 1).is_some_and(|c| c <= POINT_BUDGET) {
                level += 1;
            }
            let (nums, denom) = ifs.center_numerators(level);
            (nums, denom, ifs.ratio().clone(), ifs.box_width(), ifs.witness_box().lo.clone(), level)
        }
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut scales = Vec::new();
    let mut side = width;
    for _ in 1..=max_level.min(levels) {
        side *= &ratio;
        // cell index floor((z/D − o) / h) = floor((z·o_d − o_n·D)·h_d / (D·o_d·h_n))
        let offsets: Vec<(BigInt, BigInt)> = origin.coords().iter().map(|o| (o.numer() * &denom, o.denom().clone())).collect();
        let mut cells: HashSet<Vec<BigInt>> = HashSet::new();
        for p in &points {
            let key = p
                .iter()
                .zip(&offsets)
                .map(|(z, (on, od))| ((z * od - on) * side.denom()).div_floor(&(&denom * od * side.numer())))
                .collect();
            cells.insert(key);
        }
        xs.push(-ln_rational(&side));
        ys.push((cells.len() as f64).ln());
        scales.push(crate::rational::to_f64(&side));
    }
    let (slope, icpt) = least_squares(&xs, &ys)?;
    Some(DimensionEstimate {
        kind: "box".into(),
        exponent: slope,
        constant_m: None,
        samples: points.len(),
        scales,
        residuals: xs.iter().zip(&ys).map(|(x, y)| y - (slope * x + icpt)).collect(),
        min: None,
        median: None,
    })
}
