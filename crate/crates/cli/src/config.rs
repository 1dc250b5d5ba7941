use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "hdgame", version, about = "Play, transfer and measure the Hausdorff dimension game")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run games between two strategies and write transcripts and verdicts.
    #[command(args_override_self = true)]
    Play(RunConfig),
    /// Play the transferred strategy built from a δ-game strategy for II and
    /// dump the per-round audit.
    #[command(args_override_self = true)]
    Transfer(RunConfig),
    /// Build the challenge tree for a player II strategy and check its masses.
    #[command(args_override_self = true)]
    Harness(RunConfig),
    /// Estimate a dimension by box counting or from a strategy's tree measure.
    #[command(args_override_self = true)]
    Estimate(RunConfig),
    /// Check the order selector, the simulation extension and the packing
    /// and partition bounds on random and exhaustive instances.
    #[command(args_override_self = true)]
    VerifyLemmas(RunConfig),
}

impl Command {
    pub fn config(&self) -> &RunConfig {
        match self {
            Command::Play(c) | Command::Transfer(c) | Command::Harness(c) | Command::Estimate(c) | Command::VerifyLemmas(c) => c,
        }
    }
}

/// Every setting a subcommand may read. Unset fields fall back to the
/// config file, then to the subcommand's defaults.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct RunConfig {
    /// Flat `key = value` file; keys are the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub rho0: Option<String>,
    /// Dimension parameter δ of the game (a decimal or `p/q`).
    #[arg(long)]
    pub delta: Option<String>,
    /// Target dimension `s > δ` of a transfer.
    #[arg(long)]
    pub s: Option<String>,
    /// β schedule, e.g. `harmonic:offset=3` or `constant:1/4`.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub budget_c: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<String>,
    /// `cantor`, `carpet`, `finite:(x1;x2;…)` or `empty`.
    #[arg(long)]
    pub target: Option<String>,
    /// Player I strategy.
    #[arg(long = "I")]
    pub player_i: Option<String>,
    /// Player II strategy.
    #[arg(long = "II")]
    pub player_ii: Option<String>,
    /// Player II strategy of the δ-game (transfer) or the one under test (harness).
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Transcript path for `play`, report path otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Verdict report path for `play`; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Number of consecutive seeds to run in parallel.
    #[arg(long)]
    pub repeat: Option<usize>,
    /// Play the unfolded game.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub unfolded: Option<bool>,
    /// `box` or `tree`.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub scales: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub max_nodes: Option<usize>,
    /// Witness digits range over `0..digit_cap`.
    #[arg(long)]
    pub digit_cap: Option<u64>,
    #[arg(long)]
    pub max_set: Option<usize>,
    #[arg(long)]
    pub max_orders: Option<usize>,
    /// Random order tuples per size once exhaustive enumeration is too large.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Random instances for the extension and packing checks.
    #[arg(long)]
    pub instances: Option<usize>,
}

macro_rules! config_fields {
    ($m:ident) => {
        $m!(
            dim: "dim",
            rho0: "rho0",
            delta: "delta",
            s: "s",
            schedule: "schedule",
            rounds: "rounds",
            horizon: "horizon",
            budget_c: "budget-c",
            eta: "eta",
            epsilon: "epsilon",
            target: "target",
            player_i: "I",
            player_ii: "II",
            tau: "tau",
            seed: "seed",
            out: "out",
            report: "report",
            repeat: "repeat",
            unfolded: "unfolded",
            method: "method",
            scales: "scales",
            depth: "depth",
            max_nodes: "max-nodes",
            digit_cap: "digit-cap",
            max_set: "max-set",
            max_orders: "max-orders",
            samples: "samples",
            instances: "instances"
        )
    };
}

impl RunConfig {
    /// Set fields as `key → value`, keyed by long flag name.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        macro_rules! put {
            ($($field:ident: $key:literal),*) => {
                $(
                    if let Some(v) = &self.$field {
                        map.insert($key.to_string(), Stringify::stringify(v));
                    }
                )*
            };
        }
        config_fields!(put);
        map
    }

    /// Text in the config-file format; `parse_config_text` reads it back.
    #[cfg(test)]
    pub fn to_config_text(&self) -> String {
        self.to_map().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn known_key(key: &str) -> bool {
        macro_rules! keys {
            ($($field:ident: $key:literal),*) => { [$($key),*] };
        }
        config_fields!(keys).contains(&key)
    }
}

trait Stringify {
    fn stringify(&self) -> String;
}

impl Stringify for String {
    fn stringify(&self) -> String {
        self.clone()
    }
}

impl Stringify for PathBuf {
    fn stringify(&self) -> String {
        self.display().to_string()
    }
}

macro_rules! stringify_display {
    ($($t:ty),*) => { $(impl Stringify for $t { fn stringify(&self) -> String { self.to_string() } })* };
}
stringify_display!(usize, u64, f64, bool);

/// Reads `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else { bail!("config line {}: expected `key = value`", n + 1) };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        let key = match key.as_str() {
            "i" => "I".to_string(),
            "ii" => "II".to_string(),
            _ => key,
        };
        if !RunConfig::known_key(&key) {
            bail!("config line {}: unknown key `{}`", n + 1, k.trim());
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Command-line arguments with the config file's settings spliced in
/// ahead of the user's flags, so that flags win.
pub fn merged_args(args: &[String], file: &BTreeMap<String, String>) -> Vec<String> {
    let (head, tail) = args.split_at(2.min(args.len()));
    let mut out: Vec<String> = head.to_vec();
    for (k, v) in file {
        out.push(format!("--{k}"));
        out.push(v.clone());
    }
    out.extend(tail.iter().cloned());
    out
}

/// Parses the command line, then re-parses with the config file applied.
pub fn parse_with_config(args: Vec<String>) -> Result<Cli, clap::Error> {
    let cli = Cli::try_parse_from(&args)?;
    let Some(path) = cli.command.config().config.clone() else { return Ok(cli) };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(|e| usage_error(&format!("{e:#}")))?;
    let file = parse_config_text(&text).map_err(|e| usage_error(&format!("{}: {e}", path.display())))?;
    Cli::try_parse_from(merged_args(&args, &file))
}

pub fn usage_error(message: &str) -> clap::Error {
    use clap::CommandFactory;
    Cli::command().error(clap::error::ErrorKind::ValueValidation, message)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        parse_with_config(args).unwrap().command.config().clone()
    }

    #[test]
    fn config_text_round_trips() {
        let cfg = parse(&[
            "hdgame", "play", "--delta", "1/2", "--target", "finite:(1;2)", "--I", "ifs", "--II", "random:3", "--rounds", "12", "--budget-c",
            "1000.5", "--unfolded", "--out", "t.jsonl",
        ]);
        let text = cfg.to_config_text();
        let map = parse_config_text(&text).unwrap();
        let again = parse(&merged_args(&["hdgame".into(), "play".into()], &map).iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(again, cfg);
    }

    #[test]
    fn later_flags_override_earlier_ones() {
        let cfg = parse(&["hdgame", "play", "--delta", "0.2", "--delta", "0.3"]);
        assert_eq!(cfg.delta.as_deref(), Some("0.3"));
    }

    #[test]
    fn config_keys_accept_underscores_and_reject_unknown_names() {
        let map = parse_config_text("# comment\nbudget_c = 5\nI = stay\n\n").unwrap();
        assert_eq!(map.get("budget-c").map(String::as_str), Some("5"));
        assert_eq!(map.get("I").map(String::as_str), Some("stay"));
        assert!(parse_config_text("colour = red").is_err());
        assert!(parse_config_text("no equals sign").is_err());
    }
}
