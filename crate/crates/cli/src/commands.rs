use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use hdgame::checks::{check_extension, check_linord, check_packing};
use hdgame::dimension::{box_count, exponent_summary, strategy_tree};
use hdgame::engine::{play, GameParams, GameSettings, Outcome, PlayConfig, RunTranscript};
use hdgame::rational::{format_rational, parse_rational, to_f64, Rational};
use hdgame::strategies::{harness_build, parse_strategy_i, parse_strategy_ii, HarnessConfig};
use hdgame::targets::{coded_branch_relation, TargetSet};
use hdgame::unfolding::TransferStrategy;

use crate::config::{usage_error, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_I_FORFEIT: i32 = 3;
pub const EXIT_II_FORFEIT: i32 = 4;
pub const EXIT_ABORT: i32 = 5;

/// A command's failure: bad input (usage, exit 2) or anything else (exit 1).
pub enum CommandError {
    Usage(String),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for CommandError {
    fn from(e: anyhow::Error) -> Self {
        CommandError::Internal(e)
    }
}

impl CommandError {
    pub fn exit(self) -> ! {
        match self {
            CommandError::Usage(msg) => usage_error(&msg).exit(),
            CommandError::Internal(e) => {
                eprintln!("error: {e:#}");
                std::process::exit(EXIT_FAILURE)
            }
        }
    }
}

type CmdResult = std::result::Result<i32, CommandError>;

fn usage(msg: impl Into<String>) -> CommandError {
    CommandError::Usage(msg.into())
}

pub fn outcome_code(outcome: &Outcome) -> i32 {
    match outcome {
        Outcome::IForfeits { .. } => EXIT_I_FORFEIT,
        Outcome::IiForfeits { .. } => EXIT_II_FORFEIT,
        Outcome::Aborted { .. } => EXIT_ABORT,
        Outcome::ILostCertified { .. } | Outcome::OpenConsistentWithI { .. } => EXIT_OK,
    }
}

fn rational(name: &str, text: &str) -> std::result::Result<Rational, CommandError> {
    parse_rational(text).map_err(|e| usage(format!("--{name}: {e}")))
}

fn required<'a>(value: &'a Option<String>, name: &str) -> std::result::Result<&'a str, CommandError> {
    value.as_deref().ok_or_else(|| usage(format!("missing required --{name}")))
}

fn target(cfg: &RunConfig, default: &str) -> std::result::Result<TargetSet, CommandError> {
    let spec = cfg.target.as_deref().unwrap_or(default);
    TargetSet::parse(spec).map_err(|e| usage(format!("--target: {e}")))
}

fn params(cfg: &RunConfig, delta: f64, rounds: usize) -> std::result::Result<GameParams, CommandError> {
    let defaults = GameSettings::default();
    let settings = GameSettings {
        dim: cfg.dim.unwrap_or(defaults.dim),
        rho0: match &cfg.rho0 {
            Some(r) => rational("rho0", r)?,
            None => defaults.rho0,
        },
        delta,
        schedule: cfg.schedule.clone().unwrap_or(defaults.schedule),
        budget_c: cfg.budget_c.unwrap_or(defaults.budget_c),
        eta: cfg.eta.unwrap_or(defaults.eta),
        horizon: cfg.horizon.unwrap_or(rounds.max(defaults.horizon)),
        start_ball: None,
    };
    if settings.horizon < rounds {
        return Err(usage(format!("--horizon {} is shorter than --rounds {rounds}", settings.horizon)));
    }
    GameParams::new(settings).map_err(|e| usage(e.to_string()))
}

/// Writes a report with the resolved settings under `config`.
fn write_report(cfg: &RunConfig, path: Option<&Path>, mut report: Value) -> Result<()> {
    if let Value::Object(map) = &mut report {
        map.insert("config".into(), json!(cfg.to_map()));
    }
    write_json(path, &report)
}

fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.context("writing to stdout"),
        },
    }
}

/// `runs.jsonl` → `runs-<seed>.jsonl` when several seeds share one path.
fn seeded_path(path: &Path, seed: u64) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{seed}"),
    };
    path.with_file_name(name)
}

fn verdict_report(t: &RunTranscript) -> Value {
    json!({
        "seed": t.seed,
        "outcome": t.verdict.outcome.label(),
        "rounds_played": t.records.len(),
        "players": t.players,
        "target": t.target,
        "verdict": t.verdict,
    })
}

pub fn cmd_play(cfg: &RunConfig) -> CmdResult {
    let delta_text = required(&cfg.delta, "delta")?;
    let delta = to_f64(&rational("delta", delta_text)?);
    let rounds = cfg.rounds.unwrap_or(40);
    let params = params(cfg, delta, rounds)?;
    let target = target(cfg, "cantor")?;
    let spec_i = cfg.player_i.clone().unwrap_or_else(|| "ifs".into());
    let spec_ii = cfg.player_ii.clone().unwrap_or_else(|| "random".into());
    parse_strategy_i(&spec_i, &target, delta).map_err(|e| usage(e.to_string()))?;
    parse_strategy_ii(&spec_ii, &target).map_err(|e| usage(e.to_string()))?;
    let unfolded = cfg.unfolded.unwrap_or(false);
    let first = cfg.seed.unwrap_or(0);
    let repeat = cfg.repeat.unwrap_or(1).max(1);

    let run = |seed: u64| -> Result<RunTranscript> {
        let mut sigma = parse_strategy_i(&spec_i, &target, delta)?;
        let mut tau = parse_strategy_ii(&spec_ii, &target)?;
        let config = if unfolded {
            PlayConfig::unfolded(rounds, seed, target.as_ifs().map(coded_branch_relation))
        } else {
            PlayConfig::folded(rounds, seed)
        };
        let transcript = play(&params, sigma.as_mut(), tau.as_mut(), &target, &config);
        if let Some(out) = &cfg.out {
            let path = if repeat > 1 { seeded_path(out, seed) } else { out.clone() };
            fs::write(&path, transcript.to_jsonl()).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(transcript)
    };
    let seeds: Vec<u64> = (0..repeat as u64).map(|k| first + k).collect();
    let transcripts: Vec<RunTranscript> = seeds.par_iter().map(|&s| run(s)).collect::<Result<_>>()?;

    let code = transcripts.iter().map(|t| outcome_code(&t.verdict.outcome)).find(|&c| c != EXIT_OK).unwrap_or(EXIT_OK);
    if repeat == 1 {
        write_report(cfg, cfg.report.as_deref(), verdict_report(&transcripts[0]))?;
    } else {
        let runs: Vec<Value> = transcripts.iter().map(verdict_report).collect();
        write_report(cfg, cfg.report.as_deref(), json!({ "runs": runs }))?;
    }
    Ok(code)
}

pub fn cmd_transfer(cfg: &RunConfig) -> CmdResult {
    let delta = rational("delta", required(&cfg.delta, "delta")?)?;
    let s = rational("s", required(&cfg.s, "s")?)?;
    let rounds = cfg.rounds.unwrap_or(30);
    let params = params(cfg, to_f64(&s), rounds)?;
    let target = target(cfg, "finite:(0)")?;
    let spec_tau = cfg.tau.clone().unwrap_or_else(|| "avoid".into());
    let spec_i = cfg.player_i.clone().unwrap_or_else(|| "ifs:cantor:0.6".into());
    let tau = parse_strategy_ii(&spec_tau, &target).map_err(|e| usage(e.to_string()))?;
    let mut sigma = parse_strategy_i(&spec_i, &target, to_f64(&s)).map_err(|e| usage(e.to_string()))?;
    let mut transfer = TransferStrategy::new(tau, delta, s, cfg.digit_cap.unwrap_or(2)).map_err(|e| usage(e.to_string()))?;
    let triggers: Vec<Option<usize>> = (1..=4).map(|m| transfer.trigger_round(&params, m)).collect();
    let transcript = play(&params, sigma.as_mut(), &mut transfer, &target, &PlayConfig::folded(rounds, cfg.seed.unwrap_or(0)));
    let audit = transfer.audit();
    let all_ok = audit.iter().all(|r| r.all_ok());
    let first_witness_round = audit.iter().find(|r| r.added.is_some()).map(|r| r.round);
    let report = json!({
        "transfer": hdgame::engine::StrategyII::name(&transfer),
        "gap": format_rational(&transfer.gap()),
        "trigger_rounds": triggers,
        "first_witness_round": first_witness_round,
        "all_ok": all_ok,
        "outcome": transcript.verdict.outcome.label(),
        "verdict": transcript.verdict,
        "rounds": audit,
    });
    write_report(cfg, cfg.out.as_deref(), report)?;
    let code = outcome_code(&transcript.verdict.outcome);
    Ok(if code != EXIT_OK {
        code
    } else if all_ok {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

pub fn cmd_harness(cfg: &RunConfig) -> CmdResult {
    let depth = cfg.depth.unwrap_or(4);
    let delta = match &cfg.delta {
        Some(d) => to_f64(&rational("delta", d)?),
        None => 0.5,
    };
    let params = params(cfg, delta, depth)?;
    let target = target(cfg, "empty")?;
    let spec_tau = cfg.tau.clone().unwrap_or_else(|| "nearest:0".into());
    let mut tau = parse_strategy_ii(&spec_tau, &target).map_err(|e| usage(e.to_string()))?;
    let epsilon = rational("epsilon", cfg.epsilon.as_deref().unwrap_or("1"))?;
    let config = HarnessConfig { epsilon, depth, ..HarnessConfig::default() };
    let tree = harness_build(tau.as_mut(), &params, &config).map_err(|e| anyhow!(e.to_string()))?;
    write_report(cfg, cfg.out.as_deref(), serde_json::to_value(&tree.report).map_err(anyhow::Error::from)?)?;
    Ok(if tree.report.passed() { EXIT_OK } else { EXIT_FAILURE })
}

pub fn cmd_estimate(cfg: &RunConfig) -> CmdResult {
    let target = target(cfg, "cantor")?;
    match cfg.method.as_deref().unwrap_or("box") {
        "box" => {
            let scales = cfg.scales.unwrap_or(10);
            let estimate = box_count(&target, scales).ok_or_else(|| usage("box counting needs an IFS target"))?;
            write_report(cfg, cfg.out.as_deref(), serde_json::to_value(&estimate).map_err(anyhow::Error::from)?)?;
        }
        "tree" => {
            let delta_text = required(&cfg.delta, "delta")?;
            let delta = to_f64(&rational("delta", delta_text)?);
            let depth = cfg.depth.unwrap_or(10);
            let params = params(cfg, delta, depth)?;
            let spec_i = cfg.player_i.clone().unwrap_or_else(|| "ifs".into());
            let mut sigma = parse_strategy_i(&spec_i, &target, delta).map_err(|e| usage(e.to_string()))?;
            let tm = strategy_tree(sigma.as_mut(), &params, depth, cfg.max_nodes.unwrap_or(2_000_000)).map_err(|e| anyhow!(e.to_string()))?;
            let estimate = exponent_summary(&tm, 1..=depth);
            write_report(cfg, cfg.out.as_deref(), json!({ "nodes": tm.nodes().len(), "leaves": tm.leaves().count(), "estimate": estimate }))?;
        }
        other => return Err(usage(format!("--method must be `box` or `tree`, got `{other}`"))),
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify_lemmas(cfg: &RunConfig) -> CmdResult {
    let seed = cfg.seed.unwrap_or(0);
    let instances = cfg.instances.unwrap_or(1000);
    let linord = check_linord(cfg.max_set.unwrap_or(6), cfg.max_orders.unwrap_or(3), cfg.samples.unwrap_or(10_000), seed);
    let extension = check_extension(instances, 8, 3, seed);
    let packing = check_packing(instances, cfg.dim.unwrap_or(3), seed);
    let counterexamples = linord.counterexamples() + (extension.entries - extension.consistent.min(extension.size_ok)) + extension.failures.len() + packing.counterexamples();
    write_report(
        cfg,
        cfg.out.as_deref(),
        json!({
            "counterexamples": counterexamples,
            "linord": linord,
            "extension": extension,
            "packing": packing,
        }),
    )?;
    Ok(if counterexamples == 0 { EXIT_OK } else { EXIT_FAILURE })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hdgame::engine::{MoveViolation, Player};
    use hdgame::geometry::RationalPoint;

    #[test]
    fn every_outcome_has_its_own_exit_code() {
        let codes = [
            outcome_code(&Outcome::IForfeits { round: 0, violation: MoveViolation::Empty }),
            outcome_code(&Outcome::IiForfeits { round: 0, point: RationalPoint::origin(1) }),
            outcome_code(&Outcome::Aborted { player: Player::II, round: 0, message: String::new() }),
            outcome_code(&Outcome::ILostCertified { after_rounds: 1 }),
            outcome_code(&Outcome::OpenConsistentWithI { rounds: 1 }),
        ];
        assert_eq!(codes, [EXIT_I_FORFEIT, EXIT_II_FORFEIT, EXIT_ABORT, EXIT_OK, EXIT_OK]);
    }

    #[test]
    fn seeded_paths_keep_the_extension() {
        assert_eq!(seeded_path(Path::new("out/runs.jsonl"), 4), PathBuf::from("out/runs-4.jsonl"));
        assert_eq!(seeded_path(Path::new("runs"), 0), PathBuf::from("runs-0"));
    }
}
