mod commands;
mod config;

use commands::{cmd_estimate, cmd_harness, cmd_play, cmd_transfer, cmd_verify_lemmas};
use config::{parse_with_config, Command};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let cli = parse_with_config(args).unwrap_or_else(|e| e.exit());
    let result = match &cli.command {
        Command::Play(c) => cmd_play(c),
        Command::Transfer(c) => cmd_transfer(c),
        Command::Harness(c) => cmd_harness(c),
        Command::Estimate(c) => cmd_estimate(c),
        Command::VerifyLemmas(c) => cmd_verify_lemmas(c),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => e.exit(),
    }
}
