use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::params::GameParams;
use super::position::{BudgetLedger, Position, Round, WitnessLog};
use super::referee::{GameMode, Verdict};
use crate::geometry::RationalPoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    #[serde(rename = "F")]
    pub offered: Vec<RationalPoint>,
    #[serde(rename = "x")]
    pub chosen: Option<RationalPoint>,
    #[serde(rename = "digit", with = "digit_field")]
    pub digits: Vec<u64>,
    #[serde(rename = "S")]
    pub s: f64,
}

/// `null` for no digit, a bare integer for one, an array for several.
mod digit_field {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Wire {
        One(u64),
        Many(Vec<u64>),
    }

    pub fn serialize<S: Serializer>(digits: &[u64], s: S) -> Result<S::Ok, S::Error> {
        match digits {
            [] => s.serialize_none(),
            [d] => d.serialize(s),
            many => many.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u64>, D::Error> {
        Ok(match Option::<Wire>::deserialize(d)? {
            None => Vec::new(),
            Some(Wire::One(x)) => vec![x],
            Some(Wire::Many(v)) => v,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTranscript {
    pub params: GameParams,
    pub seed: u64,
    pub mode: GameMode,
    pub players: BTreeMap<String, String>,
    pub target: String,
    pub records: Vec<RoundRecord>,
    pub verdict: Verdict,
}

#[derive(Serialize, Deserialize)]
struct Header {
    params: GameParams,
    seed: u64,
    mode: GameMode,
    players: BTreeMap<String, String>,
    target: String,
}

#[derive(Serialize, Deserialize)]
struct Footer {
    verdict: Verdict,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("transcript is empty")]
    Empty,
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("transcript has no verdict footer")]
    MissingFooter,
}

impl RunTranscript {
    /// Completed legal rounds.
    pub fn position(&self) -> Position {
        let rounds = self
            .records
            .iter()
            .filter_map(|r| {
                let x = r.chosen.clone()?;
                r.offered.binary_search(&x).ok()?;
                Some(Round { offered: r.offered.clone(), digits: r.digits.clone(), chosen: x })
            })
            .collect();
        Position::from_rounds(rounds)
    }

    pub fn witness_log(&self) -> Option<WitnessLog> {
        (self.mode == GameMode::Unfolded).then(|| WitnessLog::from_position(&self.position()))
    }

    /// `S_0, S_1, …` as recorded.
    pub fn s_trace(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.records.iter().filter(|r| r.chosen.is_some()).map(|r| r.s)).collect()
    }

    /// Ledger recomputed from the recorded moves.
    pub fn recomputed_ledger(&self) -> BudgetLedger {
        let pos = self.position();
        BudgetLedger::recompute(pos.rounds().iter().map(|r| r.offered.len()), |i| self.params.beta(i), self.params.delta())
    }

    pub fn to_jsonl(&self) -> String {
        let header = Header {
            params: self.params.clone(),
            seed: self.seed,
            mode: self.mode,
            players: self.players.clone(),
            target: self.target.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&Footer { verdict: self.verdict.clone() }).expect("footer serializes"));
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TranscriptError> {
        let lines: Vec<(usize, &str)> = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).collect();
        let (&(first_no, first), rest) = lines.split_first().ok_or(TranscriptError::Empty)?;
        let header: Header = serde_json::from_str(first).map_err(|source| TranscriptError::Json { line: first_no + 1, source })?;
        let (&(last_no, last), middle) = rest.split_last().ok_or(TranscriptError::MissingFooter)?;
        let footer: Footer = serde_json::from_str(last).map_err(|source| TranscriptError::Json { line: last_no + 1, source })?;
        let records = middle
            .iter()
            .map(|&(no, l)| serde_json::from_str(l).map_err(|source| TranscriptError::Json { line: no + 1, source }))
            .collect::<Result<Vec<RoundRecord>, _>>()?;
        Ok(RunTranscript {
            params: header.params,
            seed: header.seed,
            mode: header.mode,
            players: header.players,
            target: header.target,
            records,
            verdict: footer.verdict,
        })
    }
}
