use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Ball;
use crate::rational::{format_rational, int, ln_rational, parse_rational, rat, Rational};

/// A named β-sequence generator with rational terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// `β_i = scale / (i + offset)`
    Harmonic { scale: Rational, offset: u64 },
    Constant(Rational),
    /// Explicit leading terms, then `tail` re-indexed from 0.
    Prefixed { head: Vec<Rational>, tail: Box<Schedule> },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Harmonic { scale: Rational::one(), offset: 3 }
    }
}

impl Schedule {
    pub fn beta(&self, i: usize) -> Rational {
        match self {
            Schedule::Harmonic { scale, offset } => scale / int(i as i64 + *offset as i64),
            Schedule::Constant(b) => b.clone(),
            Schedule::Prefixed { head, tail } => match head.get(i) {
                Some(b) => b.clone(),
                None => tail.beta(i - head.len()),
            },
        }
    }

    pub fn tends_to_zero(&self) -> bool {
        match self {
            Schedule::Harmonic { .. } => true,
            Schedule::Constant(b) => b.is_zero(),
            Schedule::Prefixed { tail, .. } => tail.tends_to_zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad schedule `{spec}`: {reason}")]
pub struct ScheduleParseError {
    pub spec: String,
    pub reason: String,
}

impl FromStr for Schedule {
    type Err = ScheduleParseError;

    /// `harmonic`, `harmonic:offset=3,scale=1/2`, `constant:1/3`,
    /// `prefix:2/5,1/4|harmonic:offset=5`.
    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| ScheduleParseError { spec: spec.to_string(), reason: reason.to_string() };
        let spec_t = spec.trim();
        let (name, args) = spec_t.split_once(':').unwrap_or((spec_t, ""));
        match name {
            "harmonic" => {
                let mut scale = Rational::one();
                let mut offset = 3u64;
                for kv in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (k, v) = kv.split_once('=').ok_or_else(|| err("expected key=value"))?;
                    match k.trim() {
                        "offset" => offset = v.trim().parse().map_err(|_| err("offset must be a natural number"))?,
                        "scale" => scale = parse_rational(v).map_err(|e| err(&e.to_string()))?,
                        _ => return Err(err("unknown harmonic parameter")),
                    }
                }
                if offset == 0 {
                    return Err(err("offset must be positive"));
                }
                Ok(Schedule::Harmonic { scale, offset })
            }
            "constant" => Ok(Schedule::Constant(parse_rational(args).map_err(|e| err(&e.to_string()))?)),
            "prefix" => {
                let (head, tail) = args.split_once('|').ok_or_else(|| err("expected prefix:<terms>|<schedule>"))?;
                let head = head.split(',').map(|t| parse_rational(t).map_err(|e| err(&e.to_string()))).collect::<Result<Vec<_>, _>>()?;
                Ok(Schedule::Prefixed { head, tail: Box::new(tail.parse()?) })
            }
            _ => Err(err("unknown schedule name")),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Harmonic { scale, offset } if scale.is_one() => write!(f, "harmonic:offset={offset}"),
            Schedule::Harmonic { scale, offset } => write!(f, "harmonic:offset={offset},scale={}", format_rational(scale)),
            Schedule::Constant(b) => write!(f, "constant:{}", format_rational(b)),
            Schedule::Prefixed { head, tail } => {
                let head: Vec<String> = head.iter().map(format_rational).collect();
                write!(f, "prefix:{}|{tail}", head.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("rho0 must be positive")]
    NonPositiveRho,
    #[error("delta must lie in (0, d], got {0}")]
    DeltaOutOfRange(f64),
    #[error("budget constant must be positive and finite, got {0}")]
    BadBudget(f64),
    #[error("eta must be positive and finite, got {0}")]
    BadEta(f64),
    #[error("beta_{0} is not positive")]
    NonPositiveBeta(usize),
    #[error("start ball has dimension {got}, expected {expected}")]
    StartBallDimension { got: usize, expected: usize },
    #[error(transparent)]
    Schedule(#[from] ScheduleParseError),
    #[error("bad rational: {0}")]
    Rational(String),
}

/// Serialized form of [`GameParams`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSettings {
    pub dim: usize,
    #[serde(with = "crate::rational::serde_rational")]
    pub rho0: Rational,
    pub delta: f64,
    pub schedule: String,
    pub budget_c: f64,
    pub eta: f64,
    pub horizon: usize,
    #[serde(default)]
    pub start_ball: Option<Ball>,
}

impl Default for GameSettings {
    fn default() -> Self {
        GameSettings {
            dim: 1,
            rho0: Rational::one(),
            delta: 0.5,
            schedule: Schedule::default().to_string(),
            budget_c: 1e6,
            eta: 0.5,
            horizon: 100,
            start_ball: None,
        }
    }
}

/// The tuple `(d, ρ₀, δ, β, c, η)` plus a horizon, with `β_i` and `ρ_n`
/// precomputed exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct GameParams {
    settings: GameSettings,
    schedule: Schedule,
    betas: Vec<Rational>,
    rhos: Vec<Rational>,
}

impl GameParams {
    pub fn new(settings: GameSettings) -> Result<Self, ParamsError> {
        if settings.dim == 0 {
            return Err(ParamsError::ZeroDimension);
        }
        if !settings.rho0.is_positive() {
            return Err(ParamsError::NonPositiveRho);
        }
        if !(settings.delta > 0.0 && settings.delta <= settings.dim as f64) {
            return Err(ParamsError::DeltaOutOfRange(settings.delta));
        }
        if !(settings.budget_c > 0.0 && settings.budget_c.is_finite()) {
            return Err(ParamsError::BadBudget(settings.budget_c));
        }
        if !(settings.eta > 0.0 && settings.eta.is_finite()) {
            return Err(ParamsError::BadEta(settings.eta));
        }
        if let Some(b) = &settings.start_ball {
            if b.center.dim() != settings.dim {
                return Err(ParamsError::StartBallDimension { got: b.center.dim(), expected: settings.dim });
            }
        }
        let schedule: Schedule = settings.schedule.parse()?;
        let mut betas = Vec::with_capacity(settings.horizon + 1);
        let mut rhos = Vec::with_capacity(settings.horizon + 2);
        rhos.push(settings.rho0.clone());
        for i in 0..=settings.horizon {
            let b = schedule.beta(i);
            if !b.is_positive() {
                return Err(ParamsError::NonPositiveBeta(i));
            }
            rhos.push(&rhos[i] * &b);
            betas.push(b);
        }
        let settings = GameSettings { schedule: schedule.to_string(), ..settings };
        Ok(GameParams { settings, schedule, betas, rhos })
    }

    pub fn settings(&self) -> &GameSettings {
        &self.settings
    }

    pub fn dim(&self) -> usize {
        self.settings.dim
    }

    pub fn rho0(&self) -> &Rational {
        &self.settings.rho0
    }

    pub fn delta(&self) -> f64 {
        self.settings.delta
    }

    pub fn budget_c(&self) -> f64 {
        self.settings.budget_c
    }

    pub fn eta(&self) -> f64 {
        self.settings.eta
    }

    pub fn horizon(&self) -> usize {
        self.settings.horizon
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn start_ball(&self) -> Option<&Ball> {
        self.settings.start_ball.as_ref()
    }

    pub fn beta(&self, i: usize) -> Rational {
        self.betas.get(i).cloned().unwrap_or_else(|| self.schedule.beta(i))
    }

    /// `ρ_n = (∏_{i<n} β_i) ρ₀`, exact.
    pub fn rho(&self, n: usize) -> Rational {
        match self.rhos.get(n) {
            Some(r) => r.clone(),
            None => {
                let mut r = self.rhos.last().unwrap().clone();
                for i in self.rhos.len() - 1..n {
                    r *= self.schedule.beta(i);
                }
                r
            }
        }
    }

    /// Copy with a different δ (the folded game of a transfer plays at `s`).
    pub fn with_delta(&self, delta: f64) -> Result<Self, ParamsError> {
        GameParams::new(GameSettings { delta, ..self.settings.clone() })
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        GameParams::new(GameSettings { horizon, ..self.settings.clone() }).expect("only the horizon changed")
    }

    pub fn ln_budget_c(&self) -> f64 {
        self.settings.budget_c.ln()
    }
}

impl Serialize for GameParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.settings.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GameParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let settings = GameSettings::deserialize(d)?;
        GameParams::new(settings).map_err(serde::de::Error::custom)
    }
}

/// Successful schedule audit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleAudit {
    /// Least index from which the speed condition holds through the horizon.
    pub n0: usize,
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Error)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ScheduleViolation {
    #[error("beta_{index} = {beta} is not below 1/2")]
    NotBelowHalf { index: usize, beta: String },
    #[error("beta_{index} exceeds beta_{prev}", prev = index - 1)]
    Increasing { index: usize },
    #[error("schedule `{schedule}` does not tend to zero")]
    NoLimitZero { schedule: String },
    #[error("speed condition fails at the horizon index {index} for eta = {eta}")]
    SpeedCondition { index: usize, eta: f64 },
}

/// Checks `0 < β_{i+1} ≤ β_i < ½`, `β_i → 0`, and finds the least `n₀`
/// with `β_n ≥ ∏_{i<n} β_i^η` for every `n₀ ≤ n ≤ horizon`.
pub fn validate_params(p: &GameParams) -> Result<ScheduleAudit, ScheduleViolation> {
    let half = rat(1, 2);
    let horizon = p.horizon();
    for i in 0..=horizon {
        let b = p.beta(i);
        if b >= half {
            return Err(ScheduleViolation::NotBelowHalf { index: i, beta: format_rational(&b) });
        }
        if i > 0 && b > p.beta(i - 1) {
            return Err(ScheduleViolation::Increasing { index: i });
        }
    }
    if !p.schedule().tends_to_zero() {
        return Err(ScheduleViolation::NoLimitZero { schedule: p.schedule().to_string() });
    }
    let eta = p.eta();
    let mut ln_prod = 0.0;
    let mut holds = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        let ln_b = ln_rational(&p.beta(n));
        holds.push(ln_b >= eta * ln_prod);
        ln_prod += ln_b;
    }
    if !holds[horizon] {
        return Err(ScheduleViolation::SpeedCondition { index: horizon, eta });
    }
    let n0 = holds.iter().rposition(|&ok| !ok).map_or(0, |last_bad| last_bad + 1);
    Ok(ScheduleAudit { n0, horizon })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(schedule: &str, horizon: usize) -> GameParams {
        GameParams::new(GameSettings { schedule: schedule.into(), horizon, ..GameSettings::default() }).unwrap()
    }

    #[test]
    fn rho_products() {
        let p = params("harmonic", 10);
        assert_eq!(p.rho(0), int(1));
        assert_eq!(p.rho(2), rat(1, 12));
        let q = GameParams::new(GameSettings { rho0: int(2), ..GameSettings::default() }).unwrap();
        assert_eq!(q.rho(1), rat(2, 3));
        assert_eq!(p.rho(13), p.rho(12) * rat(1, 15));
    }

    #[test]
    fn harmonic_audit() {
        let audit = validate_params(&params("harmonic", 100)).unwrap();
        assert_eq!(audit.n0, 3);
    }

    #[test]
    fn audit_failures() {
        assert!(matches!(validate_params(&params("constant:1/3", 50)), Err(ScheduleViolation::NoLimitZero { .. })));
        assert!(matches!(
            validate_params(&params("prefix:2/3|harmonic", 50)),
            Err(ScheduleViolation::NotBelowHalf { index: 0, .. })
        ));
        assert!(matches!(
            validate_params(&params("prefix:1/5|harmonic", 50)),
            Err(ScheduleViolation::Increasing { index: 1 })
        ));
    }

    #[test]
    fn schedule_strings_round_trip() {
        for s in ["harmonic:offset=3", "harmonic:offset=4,scale=1/2", "constant:1/3", "prefix:1/3,1/4|harmonic:offset=5"] {
            let parsed: Schedule = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        assert_eq!("harmonic".parse::<Schedule>().unwrap(), Schedule::default());
        assert!("zeta".parse::<Schedule>().is_err());
        assert!("harmonic:offset=0".parse::<Schedule>().is_err());
    }

    #[test]
    fn params_serde_round_trip() {
        let p = params("harmonic:offset=4", 20);
        let text = serde_json::to_string(&p).unwrap();
        let back: GameParams = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_bad_settings() {
        let bad = GameSettings { delta: 1.5, ..GameSettings::default() };
        assert!(matches!(GameParams::new(bad), Err(ParamsError::DeltaOutOfRange(_))));
        let bad = GameSettings { rho0: int(0), ..GameSettings::default() };
        assert!(matches!(GameParams::new(bad), Err(ParamsError::NonPositiveRho)));
    }
}
