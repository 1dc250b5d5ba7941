use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::geometry::RationalPoint;
use crate::rational::{ceil_times_sqrt, int, to_f64, Rational};

use super::tree::TreeMeasure;

/// `N_d = ⌈1 + 12√d⌉`.
pub fn n_d(d: u32) -> BigUint {
    ceil_times_sqrt(&int(12), u64::from(d)) + 1u32
}

/// Constant of the upper mass bound, `N_d^{2d}`.
pub fn c_d(d: u32) -> BigUint {
    n_d(d).pow(2 * d)
}

/// Dimension constants; `stated_constant` is the smaller constant printed
/// with the statement of the upper bound, which disagrees with the
/// `N_d^{2d}` the argument produces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constants {
    pub d: u32,
    pub n_d: String,
    pub c_d: String,
    pub stated_constant: String,
}

impl Constants {
    pub fn new(d: u32) -> Self {
        Constants { d, n_d: n_d(d).to_string(), c_d: c_d(d).to_string(), stated_constant: n_d(d).to_string() }
    }
}

/// Bounds on `μ(B(x, r))` at one sampled point and radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassSample {
    pub point: usize,
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Outcome of a sampled certificate. Accepted certificates carry the
/// achieved extreme ratio; refused ones carry the violating sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: String,
    pub s: f64,
    pub m: f64,
    pub accepted: bool,
    pub achieved: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<MassSample>,
    pub statement: String,
}

fn points_of(samples: &[MassSample]) -> Vec<usize> {
    let mut pts: Vec<usize> = samples.iter().map(|s| s.point).collect();
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// Lower bound on `ℋ^s`: every sampled `μ(B(x,r)) / r^s` (upper mass
/// bound) must stay below `m`.
pub fn mass_lower_certificate(samples: &[MassSample], s: f64, m: f64) -> Certificate {
    let ratio = |x: &MassSample| x.upper / x.radius.powf(s);
    let worst = samples.iter().max_by(|a, b| ratio(a).total_cmp(&ratio(b)));
    let achieved = worst.map_or(0.0, ratio);
    let accepted = !samples.is_empty() && achieved < m;
    Certificate {
        kind: "lower".into(),
        s,
        m,
        accepted,
        achieved,
        witness: (!accepted).then(|| worst.cloned()).flatten(),
        statement: if accepted {
            format!("sampled: sup μ(B(x,r))/r^{s} = {achieved:.6} < {m}; if this holds for all x in A as r -> 0, then H^{s}(A) >= μ*(A)/{m}")
        } else {
            format!("refused: sampled ratio {achieved:.6} is not below {m}")
        },
    }
}

/// Upper bound on `ℋ^s`: at every sampled point, the ratio with the lower
/// mass bound must exceed `m` at one of its `tail` finest sampled radii.
pub fn mass_upper_certificate(samples: &[MassSample], s: f64, m: f64, d: u32, tail: usize) -> Certificate {
    let ratio = |x: &MassSample| x.lower / x.radius.powf(s);
    let mut achieved = f64::INFINITY;
    let mut witness = None;
    for p in points_of(samples) {
        let mut own: Vec<&MassSample> = samples.iter().filter(|x| x.point == p).collect();
        own.sort_by(|a, b| a.radius.total_cmp(&b.radius));
        let best = own.iter().take(tail.max(1)).max_by(|a, b| ratio(a).total_cmp(&ratio(b))).unwrap();
        let r = ratio(best);
        if r < achieved {
            achieved = r;
            witness = Some((*best).clone());
        }
    }
    let accepted = witness.is_some() && achieved > m;
    let cd = c_d(d);
    Certificate {
        kind: "upper".into(),
        s,
        m,
        accepted,
        achieved,
        witness: if accepted { None } else { witness },
        statement: if accepted {
            format!("sampled: fine-scale μ(B(x,r))/r^{s} >= {achieved:.6} > {m} at every sampled x; if this holds for all x in A as r -> 0, then H^{s}(A) <= {cd}·μ*(A)/{m}")
        } else {
            format!("refused: some sampled point only reaches ratio {achieved:.6}, not above {m}")
        },
    }
}

/// Lebesgue measure on `[0,1]`, sampled at the given points and radii.
pub fn lebesgue_samples(points: &[f64], radii: &[f64]) -> Vec<MassSample> {
    let mut out = Vec::new();
    for (i, &x) in points.iter().enumerate() {
        for &r in radii {
            let len = ((x + r).min(1.0) - (x - r).max(0.0)).max(0.0);
            out.push(MassSample { point: i, radius: r, lower: len, upper: len });
        }
    }
    out
}

/// Unit point mass at `atom`, sampled at points and radii (open balls).
pub fn point_mass_samples(atom: f64, points: &[f64], radii: &[f64]) -> Vec<MassSample> {
    let mut out = Vec::new();
    for (i, &x) in points.iter().enumerate() {
        for &r in radii {
            let m = if (x - atom).abs() < r { 1.0 } else { 0.0 };
            out.push(MassSample { point: i, radius: r, lower: m, upper: m });
        }
    }
    out
}

/// Tree-measure bounds on `μ(B(x, r))` at the given points and radii.
pub fn tree_samples(tm: &TreeMeasure, points: &[RationalPoint], radii: &[Rational]) -> Vec<MassSample> {
    let mut out = Vec::new();
    for (i, x) in points.iter().enumerate() {
        for r in radii {
            let (lo, hi) = tm.ball_mass(x, r);
            out.push(MassSample { point: i, radius: to_f64(r), lower: to_f64(&lo), upper: to_f64(&hi) });
        }
    }
    out
}

/// `Σ r_i^s` over a cover.
pub fn hausdorff_presum(radii: &[f64], s: f64) -> f64 {
    radii.iter().map(|r| r.powf(s)).sum()
}
