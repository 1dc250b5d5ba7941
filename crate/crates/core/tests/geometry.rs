use hdgame::geometry::*;
use hdgame::rational::{int, rat, Rational};
use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;

fn pt(coords: &[(i64, i64)]) -> RationalPoint {
    RationalPoint::new(coords.iter().map(|&(n, d)| rat(n, d)).collect()).unwrap()
}

fn p1(x: i64) -> RationalPoint {
    pt(&[(x, 1)])
}

#[test]
fn dist_ge_examples() {
    assert!(dist_ge(&p1(0), &p1(1), &int(1)).unwrap());
    assert!(dist_ge(&pt(&[(0, 1), (0, 1)]), &pt(&[(3, 5), (4, 5)]), &int(1)).unwrap());
    assert!(!dist_ge(&p1(0), &pt(&[(1, 2)]), &rat(2, 3)).unwrap());
    assert!(dist_ge(&p1(0), &p1(1), &int(1)).is_ok());
    assert!(dist_ge(&p1(0), &pt(&[(0, 1), (0, 1)]), &int(1)).is_err());
}

#[test]
fn separation_examples() {
    assert!(is_separated(&[p1(0), p1(1), p1(2)], &int(1)));
    assert!(!is_separated(&[p1(0), pt(&[(1, 2)])], &int(1)));
    assert!(is_separated(&[], &int(5)));
}

#[test]
fn packing_bound_examples() {
    assert_eq!(packing_bound(1, &rat(1, 3)), BigUint::from(4u32));
    assert_eq!(packing_bound(2, &rat(1, 4)), BigUint::from(64u32));
    assert_eq!(packing_bound(1, &rat(1, 6)), BigUint::from(8u32));
}

#[test]
fn class_bound_examples() {
    assert_eq!(class_bound(1), BigUint::from(14u32));
    assert_eq!(class_bound(2), BigUint::from(400u32));
    assert_eq!(class_bound(3), BigUint::from(15625u32));
}

#[test]
fn net_on_the_unit_interval() {
    let region = Ball::new(p1(0), int(1)).unwrap();
    let net = build_net(&region, &int(1), 0);
    assert_eq!(net.points, vec![p1(-1), p1(0), p1(1)]);
    assert!(is_separated(&net.points, &int(1)));

    let coarse = build_net(&region, &int(3), 0);
    assert_eq!(coarse.points.len(), 1);
}

#[test]
fn net_covers_its_region() {
    let region = Ball::new(pt(&[(1, 3), (-1, 2)]), rat(5, 4)).unwrap();
    let spacing = rat(1, 3);
    let net = build_net(&region, &spacing, 2);
    assert!(is_separated(&net.points, &spacing));
    // every lattice point at a finer step lies within the spacing of some net point
    for p in lattice_points(&region, &rat(1, 10)) {
        assert!(net.points.iter().any(|q| !dist_ge(&p, q, &spacing).unwrap()), "{p:?} uncovered");
    }
}

#[test]
fn partition_examples() {
    let classes = partition_net(&[p1(0), p1(1), p1(2), p1(3)], &int(2));
    assert_eq!(classes, vec![vec![p1(0), p1(2)], vec![p1(1), p1(3)]]);
    assert_eq!(partition_net(&[pt(&[(7, 2)])], &int(100)).len(), 1);
}

#[test]
fn build_net_is_deterministic() {
    let region = Ball::new(pt(&[(0, 1), (1, 7)]), rat(3, 2)).unwrap();
    let a = build_net(&region, &rat(2, 5), 1);
    let b = build_net(&region, &rat(2, 5), 1);
    assert_eq!(a, b);
}

#[test]
fn nets_stay_within_the_class_bound() {
    for d in 1..=3usize {
        let region = Ball::new(RationalPoint::origin(d), int(2)).unwrap();
        let net = build_net(&region, &rat(1, 2), 0);
        let six = int(3);
        assert!(net.classes.iter().all(|c| is_separated(c, &six)));
        assert!(BigUint::from(net.classes.len()) <= class_bound(d as u32), "d = {d}: {} classes", net.classes.len());
        let total: usize = net.classes.iter().map(Vec::len).sum();
        assert_eq!(total, net.points.len());
    }
}

/// `|x − y|² ≥ r²` with every coordinate over one common denominator, in
/// plain integer arithmetic.
fn dist_ge_oracle(x: &[(i64, i64)], y: &[(i64, i64)], r: (i64, i64)) -> bool {
    let den: i128 = x.iter().chain(y).map(|&(_, d)| d as i128).product();
    let sum: i128 = x
        .iter()
        .zip(y)
        .map(|(&(a, ad), &(b, bd))| {
            let diff = a as i128 * (den / ad as i128) - b as i128 * (den / bd as i128);
            diff * diff
        })
        .sum();
    let (rn, rd) = (r.0 as i128, r.1 as i128);
    sum * rd * rd >= rn * rn * den * den
}

fn coord() -> impl Strategy<Value = (i64, i64)> {
    (-40i64..=40, 1i64..=9)
}

proptest! {
    #[test]
    fn dist_ge_agrees_with_integer_oracle(
        x in prop::collection::vec(coord(), 2),
        y in prop::collection::vec(coord(), 2),
        r in (1i64..=60, 1i64..=9),
    ) {
        let got = dist_ge(&pt(&x), &pt(&y), &rat(r.0, r.1)).unwrap();
        prop_assert_eq!(got, dist_ge_oracle(&x, &y, r));
    }

    #[test]
    fn dist_ge_is_exact_on_the_boundary(a in -50i64..50, b in -50i64..50, k in 1i64..6, q in 1i64..20) {
        // Pythagorean triples scaled by k/q sit exactly at distance 5k/q.
        let x = pt(&[(a, q), (b, q)]);
        let y = pt(&[(a + 3 * k, q), (b + 4 * k, q)]);
        prop_assert!(dist_ge(&x, &y, &rat(5 * k, q)).unwrap());
        prop_assert!(!dist_ge(&x, &y, &(rat(5 * k, q) + rat(1, 1_000_000_007))).unwrap());
    }

    #[test]
    fn separated_sets_in_balls_respect_the_packing_bound(
        d in 1usize..=3,
        beta_n in 1i64..=10,
        beta_d in 21i64..=60,
        raw in prop::collection::vec(prop::collection::vec(-1000i64..=1000, 3), 1..200),
    ) {
        let beta = rat(beta_n, beta_d);
        let rho = Rational::from_integer(BigInt::from(1));
        let ball = Ball::new(RationalPoint::origin(d), (int(1) - &beta) * &rho).unwrap();
        let pts: Vec<RationalPoint> = raw
            .iter()
            .map(|c| pt(&c[..d].iter().map(|&v| (v, 1000)).collect::<Vec<_>>()))
            .filter(|p| ball.contains_open(p))
            .collect();
        let sep = int(3) * &beta * &rho;
        let set = greedy_separated(&pts, &sep);
        prop_assert!(is_separated(&set, &sep));
        prop_assert!(BigUint::from(set.len()) <= packing_bound(d as u32, &beta));
    }

    #[test]
    fn greedy_subsets_are_maximal(raw in prop::collection::vec((-30i64..=30, -30i64..=30), 1..60), r in 1i64..=12) {
        let pts: Vec<RationalPoint> = raw.iter().map(|&(a, b)| pt(&[(a, 4), (b, 4)])).collect();
        let r = rat(r, 4);
        let kept = greedy_separated(&pts, &r);
        prop_assert!(is_separated(&kept, &r));
        for p in &pts {
            prop_assert!(kept.iter().any(|q| !dist_ge(p, q, &r).unwrap()));
        }
    }
}
