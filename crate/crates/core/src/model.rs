//! Probabilistic monotonicity assessment.
//!
//! The model keeps one integer, the net count `m` of monotonicity
//! compliances minus violations observed on executed interesting
//! candidates, and maps it through the logistic function to a confidence
//! in `(0, 1)`. A proposed candidate may be skipped only when an executed,
//! not-interesting superset exists (skip enabled) and a uniform draw falls
//! below the current confidence (skip allowed).
//!
//! Draws are taken only for skip-enabled candidates, so a replayed draw
//! list lines up one-to-one with those candidates.

use std::cmp::Ordering;

use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidate::Candidate;
use crate::history::HistoryStore;
use crate::oracle::Verdict;

/// Identifier recorded in trace headers: ChaCha8 seeded through
/// `seed_from_u64`, each draw sampled from the open interval `(0, 1)`.
pub const PRNG_ID: &str = "chacha8-rand_chacha0.9-seed_from_u64-open01-f64";

const ABOVE_ZERO: f64 = f64::from_bits(1);
const BELOW_ONE: f64 = f64::from_bits(0x3FEF_FFFF_FFFF_FFFF);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("uniform draw {0} outside the open interval (0, 1)")]
    DrawOutOfRange(f64),
    #[error("replay draw list exhausted after {consumed} draws")]
    ReplayExhausted { consumed: u64 },
}

/// A logistic confidence carried together with its complement.
///
/// Near 1 an `f64` cannot tell `C(37)` from `C(50)`; the complement
/// `1 - C(m) = C(-m)` can. Comparisons use whichever side is below one
/// half, which keeps the ordering strict far beyond where `value()` alone
/// saturates.
#[derive(Debug, Clone, Copy)]
pub struct Confidence {
    value: f64,
    complement: f64,
}

impl Confidence {
    pub fn value(self) -> f64 {
        self.value
    }

    /// `1 - value()`, computed directly.
    pub fn complement(self) -> f64 {
        self.complement
    }

    /// `C > u`, evaluated without cancellation for `u` near 1.
    pub fn exceeds(self, u: f64) -> bool {
        if u < 0.5 {
            self.value > u
        } else {
            // exact for u in [0.5, 1]
            self.complement < 1.0 - u
        }
    }
}

impl PartialEq for Confidence {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Confidence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.value < 0.5 || other.value < 0.5 {
            self.value.partial_cmp(&other.value)
        } else {
            other.complement.partial_cmp(&self.complement)
        }
    }
}

fn logistic(x: f64) -> f64 {
    let raw = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    raw.clamp(ABOVE_ZERO, BELOW_ONE)
}

/// `1 / (1 + e^(-m))`, clamped strictly inside `(0, 1)`.
pub fn confidence(m: f64) -> Confidence {
    Confidence {
        value: logistic(m),
        complement: logistic(-m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonoVerdict {
    Compliant,
    Violation,
    NotApplicable,
}

/// Judges an executed candidate against the history of candidates executed
/// strictly before it. Only interesting candidates say anything about
/// monotonicity; they violate it when a not-interesting superset (equality
/// included) was executed earlier.
pub fn mono_assr(candidate: &Candidate, verdict: Verdict, history: &HistoryStore) -> MonoVerdict {
    match verdict {
        Verdict::NotInteresting => MonoVerdict::NotApplicable,
        Verdict::Interesting if history.has_failing_superset(candidate) => MonoVerdict::Violation,
        Verdict::Interesting => MonoVerdict::Compliant,
    }
}

/// True iff an executed not-interesting superset of `candidate` exists.
pub fn skip_enabled(candidate: &Candidate, history: &HistoryStore) -> bool {
    history.has_failing_superset(candidate)
}

/// `C(m) > u`. A draw outside `(0, 1)` is a caller bug.
pub fn skip_allowed(state: &ConfidenceState, u: f64) -> Result<bool, ModelError> {
    check_draw(u)?;
    Ok(state.confidence().exceeds(u))
}

fn check_draw(u: f64) -> Result<(), ModelError> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(ModelError::DrawOutOfRange(u))
    }
}

#[derive(Debug, Clone)]
enum DrawSource {
    Prng(Box<ChaCha8Rng>),
    Replay { draws: Vec<f64>, next: usize },
}

/// Net compliance counter plus the uniform draw source that feeds skip
/// decisions. One per reduction run.
#[derive(Debug, Clone)]
pub struct ConfidenceState {
    m: i64,
    rng_seed: u64,
    draws_consumed: u64,
    source: DrawSource,
}

impl ConfidenceState {
    pub fn new(seed: u64) -> Self {
        Self {
            m: 0,
            rng_seed: seed,
            draws_consumed: 0,
            source: DrawSource::Prng(Box::new(ChaCha8Rng::seed_from_u64(seed))),
        }
    }

    /// Uses `draws` in order instead of the PRNG. Every value must lie in
    /// `(0, 1)`.
    pub fn with_replay(seed: u64, draws: Vec<f64>) -> Result<Self, ModelError> {
        if let Some(bad) = draws.iter().find(|u| check_draw(**u).is_err()) {
            return Err(ModelError::DrawOutOfRange(*bad));
        }
        Ok(Self {
            m: 0,
            rng_seed: seed,
            draws_consumed: 0,
            source: DrawSource::Replay { draws, next: 0 },
        })
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn draws_consumed(&self) -> u64 {
        self.draws_consumed
    }

    pub fn is_replay(&self) -> bool {
        matches!(self.source, DrawSource::Replay { .. })
    }

    pub fn confidence(&self) -> Confidence {
        confidence(self.m as f64)
    }

    /// `m + 1` on compliance, `m - 1` on violation, unchanged otherwise.
    pub fn mono_update(&mut self, verdict: MonoVerdict) {
        match verdict {
            MonoVerdict::Compliant => self.m += 1,
            MonoVerdict::Violation => self.m -= 1,
            MonoVerdict::NotApplicable => {}
        }
    }

    fn next_draw(&mut self) -> Result<f64, ModelError> {
        let u = match &mut self.source {
            DrawSource::Prng(rng) => {
                let u: f64 = Open01.sample(rng);
                u
            }
            DrawSource::Replay { draws, next } => {
                let u = *draws.get(*next).ok_or(ModelError::ReplayExhausted {
                    consumed: self.draws_consumed,
                })?;
                *next += 1;
                u
            }
        };
        self.draws_consumed += 1;
        Ok(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Execute,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub action: Action,
    pub skip_enabled: bool,
    /// Present iff `skip_enabled`.
    pub draw: Option<f64>,
}

/// Decides whether the next proposed candidate runs. Consumes one draw
/// exactly when skipping is enabled; never touches `m` or the history.
pub fn decide(
    candidate: &Candidate,
    history: &HistoryStore,
    state: &mut ConfidenceState,
) -> Result<Decision, ModelError> {
    if !skip_enabled(candidate, history) {
        return Ok(Decision {
            action: Action::Execute,
            skip_enabled: false,
            draw: None,
        });
    }
    let u = state.next_draw()?;
    let action = if skip_allowed(state, u)? {
        Action::Skip
    } else {
        Action::Execute
    };
    Ok(Decision {
        action,
        skip_enabled: true,
        draw: Some(u),
    })
}
