//! The referee for the plain and unfolded games.

mod params;
mod position;
mod referee;
mod transcript;

pub use params::{validate_params, GameParams, GameSettings, ParamsError, Schedule, ScheduleAudit, ScheduleParseError, ScheduleViolation};
pub use position::{budget_step, BudgetLedger, Position, Round, WitnessLog};
pub use referee::{
    budget_health, containment_ball, finite_horizon_verdict, localize_limit, play, starvation_report, validate_move_i, BudgetHealth,
    GameMode, MoveI, MoveViolation, Outcome, PlayConfig, Player, StarvationReport, StrategyError, StrategyI, StrategyII, Verdict,
};
pub use transcript::{RoundRecord, RunTranscript, TranscriptError};
