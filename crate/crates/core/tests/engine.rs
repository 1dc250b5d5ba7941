use hdgame::engine::*;
use hdgame::geometry::{Ball, RationalPoint};
use hdgame::rational::{int, ln_rational, rat, to_f64, Rational};
use hdgame::strategies::{IfsPlayerI, LeastII, RandomII, RandomLegalI, StayI};
use hdgame::targets::{cantor, TargetSet};
use num_traits::{One, Pow};
use proptest::prelude::*;

fn p1(x: Rational) -> RationalPoint {
    RationalPoint::scalar(x)
}

fn params_with(schedule: &str, rho0: Rational, delta: f64, horizon: usize) -> GameParams {
    GameParams::new(GameSettings { schedule: schedule.into(), rho0, delta, horizon, ..GameSettings::default() }).unwrap()
}

fn harmonic(horizon: usize) -> GameParams {
    params_with("harmonic", int(1), 0.5, horizon)
}

fn round(offered: Vec<RationalPoint>, chosen: RationalPoint) -> Round {
    Round { offered, digits: Vec::new(), chosen }
}

#[test]
fn harmonic_schedule_passes_the_speed_condition_early() {
    let audit = validate_params(&harmonic(100)).unwrap();
    assert!(audit.n0 <= 5, "n0 = {}", audit.n0);
    assert_eq!(audit.horizon, 100);
}

#[test]
fn bad_schedules_are_reported_with_their_rule() {
    let constant = params_with("constant:1/3", int(1), 0.5, 40);
    assert!(matches!(validate_params(&constant), Err(ScheduleViolation::NoLimitZero { .. })));
    let big_start = params_with("prefix:2/3|harmonic", int(1), 0.5, 40);
    assert!(matches!(validate_params(&big_start), Err(ScheduleViolation::NotBelowHalf { index: 0, .. })));
}

#[test]
fn radii_are_exact_products() {
    let p = harmonic(10);
    assert_eq!(p.rho(0), int(1));
    assert_eq!(p.rho(2), rat(1, 12));
    let q = params_with("harmonic", int(2), 0.5, 10);
    assert_eq!(q.rho(0), int(2));
    assert_eq!(q.rho(1), rat(2, 3));
}

#[test]
fn move_validation_examples() {
    let p = harmonic(10);
    let empty = Position::new();
    assert!(validate_move_i(&p, &empty, &[p1(int(0)), p1(int(4)), p1(int(8))]).is_ok());
    assert!(matches!(validate_move_i(&p, &empty, &[p1(int(0)), p1(int(1))]), Err(MoveViolation::NotSeparated { .. })));
    assert!(matches!(validate_move_i(&p, &empty, &[]), Err(MoveViolation::Empty)));

    let after = Position::from_rounds(vec![round(vec![p1(int(0))], p1(int(0)))]);
    assert!(matches!(validate_move_i(&p, &after, &[p1(rat(9, 10))]), Err(MoveViolation::OutsideBall { .. })));
    // the containment ball is open: 2/3 itself is out, anything closer is in
    assert!(validate_move_i(&p, &after, &[p1(rat(2, 3))]).is_err());
    assert!(validate_move_i(&p, &after, &[p1(rat(13, 20))]).is_ok());
}

#[test]
fn budget_examples() {
    let mut ledger = BudgetLedger::default();
    ledger.update(3, &rat(1, 3), 1.0);
    ledger.update(4, &rat(1, 4), 1.0);
    assert!(ledger.current().abs() < 1e-12);

    let s1 = budget_step(0.0, 1, &rat(1, 3), 1.0);
    assert!((s1 - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn ceiling_sized_moves_never_raise_the_budget() {
    let p = harmonic(200);
    for delta in [0.1, 0.3, 0.5, 0.63, 0.9, 1.0] {
        let mut ledger = BudgetLedger::default();
        for i in 0..200 {
            let beta = p.beta(i);
            let size = (1.0 / to_f64(&beta)).powf(delta).ceil() as usize;
            ledger.update(size, &beta, delta);
        }
        assert!(ledger.max <= 1e-12, "delta {delta}: max S = {}", ledger.max);
    }
}

struct CrowdedI;

impl StrategyI for CrowdedI {
    fn next_move(&mut self, _: &GameParams, _: &Position) -> Result<MoveI, StrategyError> {
        Ok(MoveI::points(vec![p1(int(0)), p1(int(1))]))
    }
    fn name(&self) -> String {
        "crowded".into()
    }
}

struct WanderingII;

impl StrategyII for WanderingII {
    fn choose(&mut self, _: &GameParams, _: &Position, offered: &[RationalPoint], _: &[u64]) -> Result<RationalPoint, StrategyError> {
        Ok(offered[0].add(&p1(int(100))))
    }
    fn name(&self) -> String {
        "wandering".into()
    }
}

struct FailingII;

impl StrategyII for FailingII {
    fn choose(&mut self, _: &GameParams, _: &Position, _: &[RationalPoint], _: &[u64]) -> Result<RationalPoint, StrategyError> {
        Err(StrategyError::new("out of ideas"))
    }
    fn name(&self) -> String {
        "failing".into()
    }
}

#[test]
fn forfeits_and_aborts_end_the_run() {
    let p = harmonic(20);
    let target = TargetSet::parse("cantor").unwrap();

    let t = play(&p, &mut CrowdedI, &mut LeastII, &target, &PlayConfig::folded(10, 0));
    assert!(matches!(t.verdict.outcome, Outcome::IForfeits { round: 0, violation: MoveViolation::NotSeparated { .. } }));
    assert_eq!(t.records.len(), 1);
    assert_eq!(t.records[0].offered.len(), 2);

    let t = play(&p, &mut StayI, &mut WanderingII, &target, &PlayConfig::folded(10, 0));
    assert!(matches!(t.verdict.outcome, Outcome::IiForfeits { round: 0, .. }));
    assert_eq!(t.records[0].chosen, Some(p1(int(100))));

    let t = play(&p, &mut StayI, &mut FailingII, &target, &PlayConfig::folded(10, 0));
    assert!(matches!(t.verdict.outcome, Outcome::Aborted { player: Player::II, round: 0, .. }));
}

#[test]
fn ifs_player_against_random_has_no_violations() {
    let p = harmonic(100);
    let target = TargetSet::parse("cantor").unwrap();
    let mut sigma = IfsPlayerI::new(cantor(), 0.5).unwrap();
    let t = play(&p, &mut sigma, &mut RandomII::new(1), &target, &PlayConfig::folded(40, 3));
    assert!(matches!(t.verdict.outcome, Outcome::OpenConsistentWithI { rounds: 40 }));
    assert!(t.verdict.budget.max_s.is_finite());
    assert!(t.verdict.budget.healthy);
}

#[test]
fn limit_localization_examples() {
    let p = harmonic(10);
    assert_eq!(localize_limit(&p, &Position::new()), None);
    let pos = Position::from_rounds(vec![round(vec![p1(int(0))], p1(int(0)))]);
    assert_eq!(localize_limit(&p, &pos), Some(Ball::new(p1(int(0)), int(2)).unwrap()));

    // a run that never moves is pinned down to its single point
    let t = play(&p, &mut StayI, &mut LeastII, &TargetSet::parse("empty").unwrap(), &PlayConfig::folded(10, 0));
    let pos = t.position();
    let radii: Vec<Rational> = (1..=pos.len()).map(|n| localize_limit(&p, &pos.truncated(n)).unwrap().radius).collect();
    assert!(radii.windows(2).all(|w| w[1] < w[0]));
    assert!(radii.last().unwrap() < &rat(1, 1_000_000));
    assert!((1..=pos.len()).all(|n| localize_limit(&p, &pos.truncated(n)).unwrap().center == p1(int(0))));
}

#[test]
fn verdict_examples() {
    let quarter = params_with("harmonic", rat(1, 4), 0.5, 10);
    let at_zero = Position::from_rounds(vec![round(vec![p1(int(0))], p1(int(0)))]);
    let single = TargetSet::parse("finite:(1)").unwrap();
    assert_eq!(finite_horizon_verdict(&quarter, &at_zero, &single, None), Outcome::ILostCertified { after_rounds: 1 });

    let p = harmonic(30);
    let t = play(&p, &mut StayI, &mut LeastII, &TargetSet::parse("cantor").unwrap(), &PlayConfig::folded(30, 0));
    assert_eq!(t.verdict.outcome, Outcome::OpenConsistentWithI { rounds: 30 });

    let t = play(&p, &mut StayI, &mut LeastII, &TargetSet::parse("empty").unwrap(), &PlayConfig::folded(5, 0));
    assert_eq!(t.verdict.outcome, Outcome::ILostCertified { after_rounds: 1 });
}

#[test]
fn unfolded_runs_report_starvation() {
    let p = harmonic(40);
    let target = TargetSet::parse("cantor").unwrap();
    let t = play(&p, &mut StayI, &mut LeastII, &target, &PlayConfig::unfolded(20, 0, None));
    let starvation = t.verdict.starvation.unwrap();
    assert_eq!(starvation.digits_played, 0);
    assert!(starvation.starved);
    assert!(t.verdict.outcome == Outcome::OpenConsistentWithI { rounds: 20 });
}

/// `exp(2 S_n) = ∏ β_i^{-1} / ∏ |F_i|²` at δ = 1/2, exactly.
fn exact_exp_twice_s(p: &GameParams, sizes: &[usize]) -> Rational {
    sizes.iter().enumerate().fold(Rational::one(), |acc, (i, &k)| acc / p.beta(i) / Pow::pow(int(k as i64), 2u32))
}

fn random_transcript(seed: u64, rounds: usize, random_i: bool) -> (GameParams, RunTranscript) {
    let p = harmonic(60);
    let target = TargetSet::parse("cantor").unwrap();
    let mut tau = RandomII::new(seed);
    let t = if random_i {
        play(&p, &mut RandomLegalI::new(seed, 4), &mut tau, &target, &PlayConfig::folded(rounds, seed))
    } else {
        play(&p, &mut IfsPlayerI::new(cantor(), 0.5).unwrap(), &mut tau, &target, &PlayConfig::folded(rounds, seed))
    };
    (p, t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transcripts_round_trip_through_jsonl(seed in any::<u64>(), rounds in 1usize..25, random_i in any::<bool>()) {
        let (_, t) = random_transcript(seed, rounds, random_i);
        let text = t.to_jsonl();
        let back = RunTranscript::from_jsonl(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn replays_are_deterministic(seed in any::<u64>(), rounds in 1usize..20) {
        let (_, a) = random_transcript(seed, rounds, true);
        let (_, b) = random_transcript(seed, rounds, true);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ledger_matches_exact_products(seed in any::<u64>(), rounds in 1usize..30, random_i in any::<bool>()) {
        let (p, t) = random_transcript(seed, rounds, random_i);
        let sizes: Vec<usize> = t.records.iter().filter(|r| r.chosen.is_some()).map(|r| r.offered.len()).collect();
        for (n, s) in t.s_trace().iter().enumerate() {
            let exact = exact_exp_twice_s(&p, &sizes[..n]);
            let ln_exact = ln_rational(&exact);
            // relative error of exp(2S) is |2S − ln exact| to first order
            prop_assert!((2.0 * s - ln_exact).abs() < 1e-9 * ln_exact.abs().max(1.0), "round {}: {} vs {}", n, 2.0 * s, ln_exact);
        }
    }

    #[test]
    fn unforfeited_transcripts_revalidate(seed in any::<u64>(), rounds in 1usize..25, random_i in any::<bool>()) {
        let (p, t) = random_transcript(seed, rounds, random_i);
        prop_assert!(!t.verdict.outcome.is_forfeit());
        let pos = t.position();
        prop_assert_eq!(pos.len(), t.records.len());
        for n in 0..pos.len() {
            let r = &pos.rounds()[n];
            prop_assert!(validate_move_i(&p, &pos.truncated(n), &r.offered).is_ok());
            prop_assert!(r.offered.contains(&r.chosen));
        }
    }

    #[test]
    fn later_choices_stay_in_every_localization_ball(seed in any::<u64>(), rounds in 2usize..25, random_i in any::<bool>()) {
        let (p, t) = random_transcript(seed, rounds, random_i);
        let pos = t.position();
        let xs: Vec<&RationalPoint> = pos.chosen().collect();
        for n in 1..=pos.len() {
            let ball = localize_limit(&p, &pos.truncated(n)).unwrap();
            for x in &xs[n..] {
                prop_assert!(ball.contains_open(x));
            }
            if n < pos.len() {
                let next = localize_limit(&p, &pos.truncated(n + 1)).unwrap();
                let widened = Ball::new(ball.center.clone(), int(3) * p.rho(n - 1)).unwrap();
                prop_assert!(next.inside(&widened));
            }
        }
    }
}
