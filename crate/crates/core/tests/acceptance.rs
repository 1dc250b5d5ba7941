//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINED` are reported like the others but
//! do not fail the process; any other failure does.

use std::time::{Duration, Instant};

use hdgame::checks::{check_extension, check_linord, check_packing};
use hdgame::dimension::{box_count, exponent_summary, strategy_tree};
use hdgame::engine::*;
use hdgame::rational::{int, rat, to_f64, Rational};
use hdgame::strategies::*;
use hdgame::targets::{cantor, TargetSet};
use hdgame::unfolding::*;
use itertools::Itertools;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_UNATTAINED: &[&str] = &["A2"];

struct Check {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Check {
    Check { pass, detail: detail.into() }
}

fn harmonic(delta: f64, horizon: usize) -> GameParams {
    GameParams::new(GameSettings { delta, horizon, ..GameSettings::default() }).unwrap()
}

fn a1() -> Check {
    let start = Instant::now();
    let p = harmonic(0.5, 100);
    let bound = ifs_budget_bound(&cantor(), &p, 40, 0.5).unwrap();
    let target = TargetSet::parse("cantor").unwrap();
    let mut violations = 0;
    let mut max_s = f64::NEG_INFINITY;
    for seed in 0..20 {
        let mut sigma = IfsPlayerI::new(cantor(), 0.5).unwrap();
        let t = play(&p, &mut sigma, &mut RandomII::new(seed), &target, &PlayConfig::folded(40, seed));
        if !matches!(t.verdict.outcome, Outcome::OpenConsistentWithI { rounds: 40 }) {
            violations += 1;
        }
        max_s = max_s.max(t.verdict.budget.max_s);
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && max_s <= bound.max && elapsed < Duration::from_secs(10),
        format!("violations {violations}, max S {max_s:.4} vs bound B(0.5) {:.4}, {:.2}s", bound.max, elapsed.as_secs_f64()),
    )
}

fn a2() -> Check {
    let start = Instant::now();
    let p = harmonic(0.6, 40);
    let depth = 10;
    let tm = strategy_tree(&mut IfsPlayerI::new(cantor(), 0.6).unwrap(), &p, depth, 2_000_000).unwrap();
    let median = exponent_summary(&tm, 1..=depth).median.unwrap_or(f64::NAN);
    let elapsed = start.elapsed();
    outcome(
        (0.5..=0.75).contains(&median) && elapsed < Duration::from_secs(60),
        format!("depth {depth}, {} nodes, median exponent {median:.4} (window [0.5, 0.75]), {:.2}s", tm.nodes().len(), elapsed.as_secs_f64()),
    )
}

fn a3() -> Check {
    let c = box_count(&TargetSet::parse("cantor").unwrap(), 10).unwrap().exponent;
    let k = box_count(&TargetSet::parse("carpet").unwrap(), 10).unwrap().exponent;
    let (ec, ek) = (2f64.ln() / 3f64.ln(), 8f64.ln() / 3f64.ln());
    outcome(
        (c - ec).abs() <= 0.02 && (k - ek).abs() <= 0.02,
        format!("cantor {c:.5} (expected {ec:.5}), carpet {k:.5} (expected {ek:.5})"),
    )
}

/// `|{b ⪯ a}|` read off an order listed from least to greatest.
fn at_or_below(order: &[usize], a: usize) -> usize {
    order.iter().position(|&b| b == a).unwrap() + 1
}

fn a4() -> Check {
    let start = Instant::now();
    let check = check_linord(6, 3, 10_000, 1);
    // independent pass: select, then count below the choice in every order
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut selector_failures = 0;
    let mut tuples = 0;
    for m in 1..=6usize {
        for n in 1..=3usize {
            let perms: Vec<Vec<usize>> = (0..m).permutations(m).collect();
            let all = perms.len().pow(n as u32);
            let tuple_list: Vec<Vec<Vec<usize>>> = if all <= 10_000 {
                (0..n).map(|_| perms.iter().cloned()).multi_cartesian_product().collect()
            } else {
                (0..10_000)
                    .map(|_| {
                        (0..n)
                            .map(|_| {
                                let mut o: Vec<usize> = (0..m).collect();
                                o.shuffle(&mut rng);
                                o
                            })
                            .collect()
                    })
                    .collect()
            };
            for orders in tuple_list {
                let ranks: Vec<Vec<usize>> = orders
                    .iter()
                    .map(|o| {
                        let mut r = vec![0; m];
                        o.iter().enumerate().for_each(|(i, &a)| r[a] = i + 1);
                        r
                    })
                    .collect();
                match linord_select(&ranks) {
                    Some(a) if orders.iter().all(|o| at_or_below(o, a) * n >= m) => {}
                    _ => selector_failures += 1,
                }
                tuples += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let no_witness: usize = check.cases.iter().map(|c| c.no_witness).sum();
    outcome(
        check.counterexamples() == 0 && selector_failures == 0 && elapsed < Duration::from_secs(30),
        format!(
            "{} cases, {} counterexamples, {no_witness} without a witness; independent pass {selector_failures}/{tuples} failures; {:.2}s",
            check.cases.len(),
            check.counterexamples(),
            elapsed.as_secs_f64()
        ),
    )
}

fn a5() -> Check {
    let check = check_extension(1000, 8, 3, 2);
    outcome(
        check.passed() && check.consistent == check.entries && check.size_ok == check.entries,
        format!(
            "{} instances, {} entries: consistent {}, |E| ≥ |F|/(n+1) {}",
            check.instances, check.entries, check.consistent, check.size_ok
        ),
    )
}

fn a6() -> Check {
    let (delta, s) = (rat(1, 10), rat(3, 5));
    let p = harmonic(to_f64(&s), 30);
    let target = TargetSet::parse("finite:(0)").unwrap();
    let tau = Box::new(AvoidII::new(target.clone()));
    let mut transfer = TransferStrategy::new(tau, delta.clone(), s.clone(), 2).unwrap();
    let mut sigma = IfsPlayerI::new(cantor(), 0.6).unwrap();
    let t = play(&p, &mut sigma, &mut transfer, &target, &PlayConfig::folded(30, 0));
    let audit = transfer.audit();
    let first = audit.iter().find(|r| r.added.is_some()).map(|r| r.round);

    // recompute the size bound and both budget ledgers from the final simulations
    let gap = to_f64(&(&s - &delta));
    let real = t.position();
    let (mut size_failures, mut chain_failures, mut checked) = (0, 0, 0);
    for entry in &transfer.simulation().entries {
        let (mut s_real, mut s_sim) = (0.0, 0.0);
        for (i, (e, f)) in entry.position.rounds().iter().zip(real.rounds()).enumerate() {
            let beta = p.beta(i);
            if (e.offered.len() as f64) < to_f64(&beta).powf(gap) * f.offered.len() as f64 * (1.0 - 1e-9) {
                size_failures += 1;
            }
            s_real = budget_step(s_real, f.offered.len(), &beta, to_f64(&s));
            s_sim = budget_step(s_sim, e.offered.len(), &beta, to_f64(&delta));
            if s_sim > s_real + 1e-9 * s_real.abs().max(1.0) {
                chain_failures += 1;
            }
            checked += 1;
        }
    }
    let audit_ok = audit.iter().all(AuditRound::all_ok);
    outcome(
        first == Some(2) && audit_ok && audit.len() == 30 && size_failures == 0 && chain_failures == 0 && !t.verdict.outcome.is_forfeit(),
        format!(
            "first witness added in round {first:?}, audit ok {audit_ok}, {} entries; {checked} entry-rounds rechecked: size failures {size_failures}, ledger failures {chain_failures}; outcome {}",
            transfer.simulation().len(),
            t.verdict.outcome.label()
        ),
    )
}

fn a7() -> Check {
    let check = check_packing(1000, 3, 3);
    outcome(
        check.counterexamples() == 0,
        format!(
            "{} instances, {} nets: packing violations {}, class violations {}, max packing ratio {:.3}, max classes {:?} vs bounds {:?}",
            check.instances,
            check.nets,
            check.packing_violations.len(),
            check.class_violations.len(),
            check.max_packing_ratio,
            check.max_classes,
            check.class_bounds
        ),
    )
}

fn a8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut certified = 0;
    let runs = 100;
    let mut latest = 0;
    for seed in 0..runs {
        let dim = rng.gen_range(1..=2usize);
        let count = rng.gen_range(1..=3);
        let points: Vec<String> = (0..count)
            .map(|_| (0..dim).map(|_| format!("{}/{}", rng.gen_range(-40..=40), rng.gen_range(1..=20))).join(","))
            .collect();
        let target = TargetSet::parse(&format!("finite:({})", points.join(";"))).unwrap();
        let p = GameParams::new(GameSettings { dim, horizon: 100, ..GameSettings::default() }).unwrap();
        let mut sigma = RandomLegalI::new(seed, rng.gen_range(1..=6));
        let t = play(&p, &mut sigma, &mut AvoidII::new(target.clone()), &target, &PlayConfig::folded(30, seed));
        if let Outcome::ILostCertified { after_rounds } = t.verdict.outcome {
            certified += 1;
            latest = latest.max(after_rounds);
        }
    }
    outcome(certified == runs, format!("{certified}/{runs} certified losses for I, latest after {latest} rounds"))
}

fn a9() -> Check {
    let p = harmonic(0.5, 40);
    let player = IfsPlayerI::new(cantor(), 0.5).unwrap().unfolded();
    let check = ifs_address_check(&player, &p);
    let report = uniformization_extract(&mut player.clone(), &p, 10, 2_000_000, Some(&check)).unwrap();
    outcome(
        report.passed(),
        format!(
            "{} nodes, mismatches {}, modulus {:?} (nondecreasing {}), continuity {}",
            report.table.len(),
            report.mismatches.len(),
            report.modulus,
            report.monotone,
            report.continuity
        ),
    )
}

/// Re-derives every harness mass from its parent and checks the lower bound
/// `μ ≥ c j^{−2} μ_parent` with `c = 1/(ℓ π²/6)`.
fn recheck_harness(tree: &HarnessTree) -> (usize, usize, usize) {
    let nodes = &tree.nodes;
    let c = 1.0 / (tree.report.ell as f64 * std::f64::consts::PI.powi(2) / 6.0);
    let (mut recursion, mut sums, mut lower) = (0, 0, 0);
    let mut child_sum = vec![Rational::zero(); nodes.len()];
    for node in nodes {
        let Some(parent) = node.parent else { continue };
        let &(_, j) = node.code.last().unwrap();
        let parent_mass = nodes[parent].mass.clone().unwrap();
        let h: Rational = (1..=node.k_u).map(|jj| Rational::one() / int((jj * jj) as i64)).sum();
        let expected = &parent_mass / (int(node.ell_u as i64) * int((j * j) as i64) * h);
        let mass = node.mass.clone().unwrap();
        if mass != expected {
            recursion += 1;
        }
        if to_f64(&mass) < c / (j * j) as f64 * to_f64(&parent_mass) * (1.0 - 1e-12) {
            lower += 1;
        }
        child_sum[parent] += mass;
    }
    for (id, sum) in child_sum.iter().enumerate() {
        if sum > nodes[id].mass.as_ref().unwrap() {
            sums += 1;
        }
    }
    (recursion, sums, lower)
}

fn a10() -> Check {
    let p = harmonic(0.5, 20);
    let config = HarnessConfig { epsilon: int(1), depth: 4, ..HarnessConfig::default() };
    let empty = TargetSet::parse("empty").unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for spec in ["nearest:0", "least"] {
        let mut tau = parse_strategy_ii(spec, &empty).unwrap();
        let tree = harness_build(tau.as_mut(), &p, &config).unwrap();
        let (recursion, sums, lower) = recheck_harness(&tree);
        let ok = tree.report.passed() && recursion == 0 && sums == 0 && lower == 0;
        pass &= ok;
        details.push(format!(
            "{spec}: {} nodes, ℓ = {}, recursion mismatches {recursion}, sum violations {sums}, lower-bound violations {lower}",
            tree.nodes.len(),
            tree.report.ell
        ));
    }
    outcome(pass, details.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] =
        [("A1", a1), ("A2", a2), ("A3", a3), ("A4", a4), ("A5", a5), ("A6", a6), ("A7", a7), ("A8", a8), ("A9", a9), ("A10", a10)];
    let mut unexpected = Vec::new();
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && KNOWN_UNATTAINED.contains(&name) { " [known unattained]" } else { "" };
        println!("{name} {status}{note}: {} ({:.1}s)", o.detail, start.elapsed().as_secs_f64());
        if !o.pass && note.is_empty() {
            unexpected.push(name);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
