use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use hdgame::engine::*;
use hdgame::geometry::RationalPoint;
use hdgame::rational::{int, rat, to_f64, Rational};
use hdgame::strategies::{HashedII, IfsPlayerI, LeastII, RandomLegalI};
use hdgame::targets::{cantor, TargetSet};
use hdgame::unfolding::*;
use proptest::prelude::*;

fn p1(x: Rational) -> RationalPoint {
    RationalPoint::scalar(x)
}

fn harmonic(horizon: usize) -> GameParams {
    GameParams::new(GameSettings { horizon, ..GameSettings::default() }).unwrap()
}

/// τ whose pick depends on the salt, the round, the offer and the witness
/// digits played with it.
struct DigitTau(u64);

impl StrategyII for DigitTau {
    fn choose(&mut self, _: &GameParams, pos: &Position, offered: &[RationalPoint], digits: &[u64]) -> Result<RationalPoint, StrategyError> {
        let mut h = DefaultHasher::new();
        (self.0, pos.len(), pos.witness(), offered, digits).hash(&mut h);
        Ok(offered[(h.finish() % offered.len() as u64) as usize].clone())
    }
    fn name(&self) -> String {
        format!("digit-tau:{}", self.0)
    }
}

#[test]
fn selection_examples() {
    assert_eq!(linord_select(&[vec![2, 3, 1]]), Some(1));
    assert_eq!(linord_select(&[vec![1, 2, 3], vec![3, 2, 1]]), Some(1));
    let same = vec![4, 1, 3, 2];
    assert_eq!(linord_select(&[same.clone(), same.clone(), same]), Some(0));
    assert_eq!(linord_select(&[]), None);
}

#[test]
fn rank_profile_examples() {
    let p = harmonic(10);
    let one = vec![p1(int(5))];
    assert_eq!(rank_order(&mut LeastII, &p, &Position::new(), &one, &[]).unwrap(), vec![1]);

    let offered: Vec<RationalPoint> = (0..5).map(|k| p1(rat(k, 4))).collect();
    assert_eq!(rank_order(&mut LeastII, &p, &Position::new(), &offered, &[]).unwrap(), vec![5, 4, 3, 2, 1]);

    let mut tau = HashedII { salt: 9 };
    let ranks = rank_order(&mut tau, &p, &Position::new(), &offered, &[]).unwrap();
    let first = tau.choose(&p, &Position::new(), &offered, &[]).unwrap();
    assert_eq!(offered[ranks.iter().position(|&r| r == 5).unwrap()], first);
}

#[test]
fn extension_examples() {
    let p = harmonic(10);
    let offered: Vec<RationalPoint> = (0..6).map(|k| p1(rat(k, 7))).collect();

    let mut tau = HashedII { salt: 2 };
    let ext = extwit_extend(&mut tau, &p, &SimulationState::fresh(), &offered, &[vec![]]).unwrap();
    assert_eq!(offered[ext.chosen], tau.choose(&p, &Position::new(), &offered, &[]).unwrap());
    assert_eq!(ext.kept, vec![(0..6).collect::<Vec<_>>()]);

    // τ ignores witnesses: both orders coincide and nothing is lost
    let mut two = SimulationState::fresh();
    two.entries.push(two.entries[0].clone());
    let ext = extwit_extend(&mut LeastII, &p, &two, &offered, &[vec![], vec![1]]).unwrap();
    assert_eq!(ext.chosen, 0);
    assert_eq!(ext.kept[0].len(), 6);
    assert_eq!(ext.kept[0], ext.kept[1]);
}

#[test]
fn transfer_trigger_rounds() {
    let p = harmonic(40);
    let t = TransferStrategy::new(Box::new(LeastII), rat(1, 10), rat(3, 5), 2).unwrap();
    assert_eq!(t.gap(), rat(1, 2));
    assert_eq!(t.trigger_round(&p, 2), Some(2));
    assert_eq!(t.trigger_round(&p, 3), Some(7));
    assert_eq!(t.trigger_round(&p, 4), Some(14));
    assert!(TransferStrategy::new(Box::new(LeastII), rat(3, 5), rat(1, 2), 2).is_err());
}

fn transfer_run(salt: u64, seed: u64, rounds: usize) -> (GameParams, RunTranscript, TransferStrategy) {
    let p = harmonic(60);
    let mut transfer = TransferStrategy::new(Box::new(DigitTau(salt)), rat(1, 10), rat(3, 5), 2).unwrap();
    let mut sigma = RandomLegalI::new(seed, 6);
    let t = play(&p, &mut sigma, &mut transfer, &TargetSet::parse("empty").unwrap(), &PlayConfig::folded(rounds, seed));
    (p, t, transfer)
}

#[test]
fn transfer_passes_picks_through_before_the_first_trigger() {
    for salt in 0..6 {
        let (p, t, _) = transfer_run(salt, salt + 100, 6);
        let sim_params = p.with_delta(0.1).unwrap();
        let pos = t.position();
        for n in 0..2 {
            let r = &pos.rounds()[n];
            let direct = DigitTau(salt).choose(&sim_params, &pos.truncated(n), &r.offered, &[]).unwrap();
            assert_eq!(direct, r.chosen, "salt {salt} round {n}");
        }
    }
}

#[test]
fn transfer_bookkeeping_holds_every_round() {
    for salt in 0..3 {
        let (p, t, transfer) = transfer_run(salt, salt, 20);
        assert!(!t.verdict.outcome.is_forfeit());
        let audit = transfer.audit();
        assert_eq!(audit.len(), 20);
        assert!(audit.iter().all(AuditRound::all_ok));
        let added: Vec<usize> = audit.iter().filter(|r| r.added.is_some()).map(|r| r.round).collect();
        assert_eq!(added, vec![2, 7, 14]);

        // recompute both ledgers from the transcript and the final simulations
        let pos = t.position();
        let real = pos.rounds();
        for entry in &transfer.simulation().entries {
            let sim = entry.position.rounds();
            assert_eq!(sim.len(), real.len());
            let (mut s_real, mut s_sim) = (0.0, 0.0);
            for (i, (e, f)) in sim.iter().zip(real).enumerate() {
                let beta = p.beta(i);
                assert_eq!(e.chosen, f.chosen);
                assert!(e.offered.iter().all(|y| f.offered.contains(y)));
                assert!(e.offered.len() as f64 >= to_f64(&beta).sqrt() * f.offered.len() as f64 - 1e-12);
                s_real = budget_step(s_real, f.offered.len(), &beta, 0.6);
                s_sim = budget_step(s_sim, e.offered.len(), &beta, 0.1);
                assert!(s_sim <= s_real + 1e-9);
            }
            assert!(replays(&mut DigitTau(salt), &p.with_delta(0.1).unwrap(), &entry.position).unwrap());
        }
    }
}

#[test]
fn witness_enumeration_lists_prefixes_first() {
    for cap in 1..=4 {
        let e = WitnessEnumeration::new(cap);
        for i in 0..300u64.min(if cap == 1 { 30 } else { 300 }) {
            let w = e.get(i);
            assert_eq!(e.index_of(&w), Some(i));
            for len in 0..w.len() {
                assert!(e.index_of(&w[..len]).unwrap() < i);
            }
        }
        assert_eq!(e.index_of(&[cap]), None);
    }
    let binary = WitnessEnumeration::new(2);
    assert_eq!((0..7).map(|i| binary.get(i)).collect::<Vec<_>>(), vec![vec![], vec![0], vec![1], vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
}

#[test]
fn uniformization_of_the_ifs_player() {
    let p = harmonic(20);
    let player = IfsPlayerI::new(cantor(), 0.5).unwrap().unfolded();
    let check = ifs_address_check(&player, &p);

    let report = uniformization_extract(&mut player.clone(), &p, 0, 100_000, Some(&check)).unwrap();
    assert_eq!(report.modulus, vec![0]);
    assert!(report.table.iter().all(|e| e.emitted.is_empty()));

    let report = uniformization_extract(&mut player.clone(), &p, 6, 200_000, Some(&check)).unwrap();
    assert!(report.passed(), "{:?}", report.mismatches);
    assert!(report.monotone && report.continuity);
    assert_eq!(report.modulus.len(), 7);
    assert!(report.modulus.windows(2).all(|w| w[0] <= w[1]));
}

fn permutation(len: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..len).collect::<Vec<usize>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn selection_meets_the_guarantee(orders in (1usize..=7, 1usize..=4).prop_flat_map(|(m, n)| prop::collection::vec(permutation(m), n))) {
        // orders[i] lists the elements from least to greatest
        let m = orders[0].len();
        let n = orders.len();
        let ranks: Vec<Vec<usize>> = orders
            .iter()
            .map(|o| {
                let mut r = vec![0; m];
                for (pos, &a) in o.iter().enumerate() {
                    r[a] = pos + 1;
                }
                r
            })
            .collect();
        let a = linord_select(&ranks).unwrap();
        for o in &orders {
            let at_or_below = o.iter().position(|&b| b == a).unwrap() + 1;
            prop_assert!(at_or_below * n >= m);
        }
    }

    #[test]
    fn extensions_keep_every_simulation_consistent(
        salt in any::<u64>(),
        size in 1usize..=8,
        entries in 1usize..=3,
        warmup in any::<bool>(),
    ) {
        let p = harmonic(10);
        let mut tau = DigitTau(salt);
        let mut sim = SimulationState::fresh();
        if warmup {
            let first: Vec<RationalPoint> = (0..4).map(|k| p1(int(3 * k))).collect();
            let ext = extwit_extend(&mut tau, &p, &sim, &first, &[vec![]]).unwrap();
            sim.advance(&ext, &first, &[vec![]]);
        }
        for _ in 1..entries {
            sim.entries.push(sim.entries[0].clone());
        }
        let digits: Vec<Vec<u64>> = (0..entries).map(|i| if i == 0 { vec![] } else { vec![i as u64] }).collect();
        let base = sim.entries[0].position.last_chosen().cloned().unwrap_or_else(|| p1(int(0)));
        let offered: Vec<RationalPoint> = (0..size as i64).map(|k| base.add(&p1(rat(k - 3, 90)))).collect();
        let ext = extwit_extend(&mut tau, &p, &sim, &offered, &digits).unwrap();
        let x = &offered[ext.chosen];
        for (i, kept) in ext.kept.iter().enumerate() {
            prop_assert!(kept.len() * entries >= size);
            let e: Vec<RationalPoint> = kept.iter().map(|&k| offered[k].clone()).collect();
            prop_assert_eq!(&tau.choose(&p, &sim.entries[i].position, &e, &digits[i]).unwrap(), x);
        }
        sim.advance(&ext, &offered, &digits);
        prop_assert!(sim.consistency(&mut tau, &p).unwrap().into_iter().all(|ok| ok));
    }
}
