//! Concrete strategies for both players and the challenge harness for
//! player II strategies.

mod basic;
pub mod harness;
mod ifs_player;

pub use basic::{AvoidII, HashedII, LeastII, NearestII, RandomII, RandomLegalI, StayI};
pub use harness::{harness_build, harness_build_with, trace_point, HarnessConfig, HarnessNets, HarnessNode, HarnessReport, HarnessTree, TraceResult};
pub use ifs_player::{ifs_budget_bound, BudgetBound, IfsPlayerI};

use thiserror::Error;

use crate::engine::{StrategyI, StrategyII};
use crate::geometry::RationalPoint;
use crate::rational::parse_rational;
use crate::targets::{cantor, TargetSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad strategy `{spec}`: {reason}")]
pub struct StrategySpecError {
    pub spec: String,
    pub reason: String,
}

fn spec_err(spec: &str, reason: impl Into<String>) -> StrategySpecError {
    StrategySpecError { spec: spec.into(), reason: reason.into() }
}

/// Player I from a registry name:
/// `ifs`, `ifs:<target>:<delta>[:unfolded]`, `random-legal[:<seed>[:<max>]]`, `stay`.
///
/// Bare `ifs` plays toward the game target when it is an IFS attractor and
/// toward the Cantor set otherwise; `delta` is the game's δ.
pub fn parse_strategy_i(spec: &str, target: &TargetSet, delta: f64) -> Result<Box<dyn StrategyI + Send>, StrategySpecError> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    match parts.as_slice() {
        ["ifs"] | ["ifs", "unfolded"] => {
            let ifs = target.as_ifs().cloned().unwrap_or_else(cantor);
            let p = IfsPlayerI::new(ifs, delta).map_err(|e| spec_err(spec, e.0))?;
            Ok(Box::new(if parts.len() == 2 { p.unfolded() } else { p }))
        }
        ["ifs", name, d] | ["ifs", name, d, "unfolded"] => {
            let t = TargetSet::parse(name).map_err(|e| spec_err(spec, e.to_string()))?;
            let ifs = t.as_ifs().cloned().ok_or_else(|| spec_err(spec, "target is not an IFS attractor"))?;
            let delta: f64 = d.parse().map_err(|_| spec_err(spec, "delta is not a number"))?;
            let p = IfsPlayerI::new(ifs, delta).map_err(|e| spec_err(spec, e.0))?;
            Ok(Box::new(if parts.len() == 4 { p.unfolded() } else { p }))
        }
        ["random-legal"] => Ok(Box::new(RandomLegalI::new(0, 3))),
        ["random-legal", seed] => Ok(Box::new(RandomLegalI::new(parse_seed(spec, seed)?, 3))),
        ["random-legal", seed, max] => {
            let max = max.parse().map_err(|_| spec_err(spec, "max points is not a natural number"))?;
            Ok(Box::new(RandomLegalI::new(parse_seed(spec, seed)?, max)))
        }
        ["stay"] => Ok(Box::new(StayI)),
        _ => Err(spec_err(spec, "unknown player I strategy")),
    }
}

/// Player II from a registry name:
/// `avoid`, `random[:<seed>]`, `nearest:<x1,x2,…>`, `least`, `hashed:<salt>`.
pub fn parse_strategy_ii(spec: &str, target: &TargetSet) -> Result<Box<dyn StrategyII + Send>, StrategySpecError> {
    let s = spec.trim();
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    match name {
        "avoid" if arg.is_empty() => Ok(Box::new(AvoidII::new(target.clone()))),
        "random" => Ok(Box::new(RandomII::new(if arg.is_empty() { 0 } else { parse_seed(spec, arg)? }))),
        "hashed" => Ok(Box::new(HashedII { salt: if arg.is_empty() { 0 } else { parse_seed(spec, arg)? } })),
        "least" if arg.is_empty() => Ok(Box::new(LeastII)),
        "nearest" => {
            let coords = arg.split(',').map(|c| parse_rational(c).map_err(|e| spec_err(spec, e.to_string()))).collect::<Result<Vec<_>, _>>()?;
            let point = RationalPoint::new(coords).map_err(|e| spec_err(spec, e.to_string()))?;
            Ok(Box::new(NearestII { point }))
        }
        _ => Err(spec_err(spec, "unknown player II strategy")),
    }
}

fn parse_seed(spec: &str, s: &str) -> Result<u64, StrategySpecError> {
    s.trim().parse().map_err(|_| spec_err(spec, "seed is not a natural number"))
}
