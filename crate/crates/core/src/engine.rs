//! The ddmin reduction loop with an optional skip layer.
//!
//! Each round splits the current candidate `S` into `n` contiguous parts and
//! proposes, in order, every part and then (for `n > 2`) every complement
//! `S \ part`. The round stops at the first interesting candidate:
//!
//! * interesting part: `S <- part`, `n <- 2`;
//! * interesting complement: `S <- complement`, `n <- min(max(n - 1, 2), |S|)`;
//! * nothing interesting: `n <- min(2n, |S|)` if `n < |S|`, else stop.
//!
//! At `n = 2` the complements equal the parts, so they are not proposed.
//!
//! In [`Mode::Pma`] every proposal first goes through [`model::decide`].
//! Skipped candidates count as not interesting for control flow but are
//! kept out of the history and never move the compliance counter.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidate::Candidate;
use crate::history::HistoryStore;
use crate::model::{self, Action, ConfidenceState, ModelError, MonoVerdict};
use crate::oracle::{Oracle, OracleError, Verdict};
use crate::simlab::Metrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Plain ddmin; every proposed candidate is executed.
    Ddmin,
    /// ddmin with probabilistic monotonicity-based skipping.
    Pma,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ddmin => "ddmin",
            Mode::Pma => "pma",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot split {cardinality} elements into {n} parts")]
    Partition { cardinality: usize, n: usize },
}

#[derive(Debug, Clone)]
pub struct ReductionConfig {
    pub initial_granularity: usize,
    pub mode: Mode,
    /// Applied by external oracles; carried here so a run is described by
    /// one value.
    pub per_test_timeout: Duration,
    pub total_budget: Option<Duration>,
    pub seed: u64,
    pub replay_draws: Option<Vec<f64>>,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            initial_granularity: 2,
            mode: Mode::Pma,
            per_test_timeout: Duration::from_secs(60),
            total_budget: None,
            seed: 0,
            replay_draws: None,
        }
    }
}

impl ReductionConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replay(mut self, draws: Vec<f64>) -> Self {
        self.replay_draws = Some(draws);
        self
    }

    pub fn validate(&self) -> Result<(), ReduceError> {
        if self.initial_granularity < 2 {
            return Err(ReduceError::Config(format!(
                "initial granularity must be at least 2, got {}",
                self.initial_granularity
            )));
        }
        if let Some(bad) = self
            .replay_draws
            .iter()
            .flatten()
            .find(|u| !(**u > 0.0 && **u < 1.0))
        {
            return Err(ReduceError::Config(format!("replay draw {bad} outside (0, 1)")));
        }
        Ok(())
    }

    fn confidence_state(&self) -> Result<ConfidenceState, ModelError> {
        match &self.replay_draws {
            Some(draws) => ConfidenceState::with_replay(self.seed, draws.clone()),
            None => Ok(ConfidenceState::new(self.seed)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Subset,
    Complement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceDecision {
    Executed,
    Skipped,
}

/// One proposed candidate.
#[derive(Debug, Clone)]
pub struct TraceEvent {
    /// 1-based proposal ordinal.
    pub index: u64,
    /// 0-based ddmin round the proposal belongs to.
    pub round: usize,
    pub candidate: Candidate,
    pub granularity: usize,
    pub phase: Phase,
    pub decision: TraceDecision,
    pub draw: Option<f64>,
    pub confidence_before: f64,
    pub outcome: Option<Verdict>,
    pub verdict: Option<MonoVerdict>,
    pub m_after: i64,
}

#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub minimal: Candidate,
    pub metrics: Metrics,
    pub trace: Vec<TraceEvent>,
    /// The total budget ran out; `minimal` is the best candidate so far.
    pub truncated: bool,
    pub final_m: i64,
    pub final_confidence: f64,
    pub draws_consumed: u64,
    /// Executed proposals answered by the duplicate cache.
    pub cache_hits: u64,
    pub history: HistoryStore,
}

impl ReductionResult {
    pub fn executed(&self) -> impl Iterator<Item = &TraceEvent> {
        self.trace
            .iter()
            .filter(|e| e.decision == TraceDecision::Executed)
    }

    pub fn skipped_count(&self) -> usize {
        self.trace
            .iter()
            .filter(|e| e.decision == TraceDecision::Skipped)
            .count()
    }

    /// Sizes of the rounds in proposal order, e.g. `[2, 4, 3, ...]`.
    pub fn granularity_sequence(&self) -> Vec<usize> {
        let mut seq = Vec::new();
        let mut last_round = None;
        for e in &self.trace {
            if last_round != Some(e.round) {
                seq.push(e.granularity);
                last_round = Some(e.round);
            }
        }
        seq
    }
}

/// Splits `candidate` into `n` contiguous parts in universe order. Part
/// sizes differ by at most one; the first `|candidate| mod n` parts get the
/// extra element.
pub fn partition(candidate: &Candidate, n: usize) -> Result<Vec<Candidate>, ReduceError> {
    let len = candidate.cardinality();
    if n < 2 || n > len {
        return Err(ReduceError::Partition { cardinality: len, n });
    }
    let indices: Vec<usize> = candidate.indices().collect();
    let (base, extra) = (len / n, len % n);
    let mut parts = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let end = start + base + usize::from(i < extra);
        parts.push(Candidate::from_indices(
            candidate.universe_len(),
            indices[start..end].iter().copied(),
        ));
        start = end;
    }
    Ok(parts)
}

enum Step {
    Interesting,
    NotInteresting,
    OutOfBudget,
}

struct Run<'o, O: Oracle + ?Sized> {
    oracle: &'o mut O,
    mode: Mode,
    history: HistoryStore,
    state: ConfidenceState,
    trace: Vec<TraceEvent>,
    executed: u64,
    cache_hits: u64,
    started: Instant,
    budget: Option<Duration>,
}

impl<O: Oracle + ?Sized> Run<'_, O> {
    fn propose(
        &mut self,
        candidate: Candidate,
        round: usize,
        n: usize,
        phase: Phase,
    ) -> Result<Step, ReduceError> {
        if self.budget.is_some_and(|b| self.started.elapsed() >= b) {
            return Ok(Step::OutOfBudget);
        }
        let index = self.trace.len() as u64 + 1;
        let confidence_before = self.state.confidence().value();

        let (action, draw) = match self.mode {
            Mode::Ddmin => (Action::Execute, None),
            Mode::Pma => {
                let d = model::decide(&candidate, &self.history, &mut self.state)?;
                (d.action, d.draw)
            }
        };

        if action == Action::Skip {
            self.trace.push(TraceEvent {
                index,
                round,
                candidate,
                granularity: n,
                phase,
                decision: TraceDecision::Skipped,
                draw,
                confidence_before,
                outcome: None,
                verdict: None,
                m_after: self.state.m(),
            });
            return Ok(Step::NotInteresting);
        }

        let outcome = self.oracle.evaluate(&candidate)?;
        if outcome.from_cache {
            self.cache_hits += 1;
        } else {
            self.executed += 1;
        }
        let verdict = match self.mode {
            Mode::Ddmin => None,
            Mode::Pma => {
                let v = model::mono_assr(&candidate, outcome.verdict, &self.history);
                self.state.mono_update(v);
                Some(v)
            }
        };
        self.trace.push(TraceEvent {
            index,
            round,
            candidate: candidate.clone(),
            granularity: n,
            phase,
            decision: TraceDecision::Executed,
            draw,
            confidence_before,
            outcome: Some(outcome.verdict),
            verdict,
            m_after: self.state.m(),
        });
        self.history.record(candidate, outcome.verdict);
        Ok(if outcome.verdict.is_interesting() {
            Step::Interesting
        } else {
            Step::NotInteresting
        })
    }
}

/// Reduces the universe `{0, .., universe_size}` against `oracle`.
///
/// The caller guarantees the full universe is interesting; it is recorded
/// as such in the history without being executed.
pub fn reduce<O: Oracle + ?Sized>(
    universe_size: usize,
    oracle: &mut O,
    config: &ReductionConfig,
) -> Result<ReductionResult, ReduceError> {
    config.validate()?;
    if universe_size == 0 {
        return Err(ReduceError::Config("empty universe".into()));
    }
    let full = Candidate::full(universe_size);
    let mut run = Run {
        oracle,
        mode: config.mode,
        history: HistoryStore::new(),
        state: config.confidence_state()?,
        trace: Vec::new(),
        executed: 0,
        cache_hits: 0,
        started: Instant::now(),
        budget: config.total_budget,
    };
    run.history.record(full.clone(), Verdict::Interesting);

    let mut current = full;
    let mut n = config.initial_granularity;
    let mut truncated = false;
    let mut next_round = 0;

    'rounds: while current.cardinality() >= 2 {
        let round = next_round;
        next_round += 1;
        n = n.min(current.cardinality());
        let parts = partition(&current, n)?;

        for part in &parts {
            match run.propose(part.clone(), round, n, Phase::Subset)? {
                Step::Interesting => {
                    current = part.clone();
                    n = 2;
                    continue 'rounds;
                }
                Step::NotInteresting => {}
                Step::OutOfBudget => {
                    truncated = true;
                    break 'rounds;
                }
            }
        }

        if n > 2 {
            for part in &parts {
                let complement = current.difference(part);
                match run.propose(complement.clone(), round, n, Phase::Complement)? {
                    Step::Interesting => {
                        current = complement;
                        n = (n - 1).max(2).min(current.cardinality());
                        continue 'rounds;
                    }
                    Step::NotInteresting => {}
                    Step::OutOfBudget => {
                        truncated = true;
                        break 'rounds;
                    }
                }
            }
        }

        if n < current.cardinality() {
            n = (2 * n).min(current.cardinality());
        } else {
            break;
        }
    }

    let wall = run.started.elapsed();
    let skipped = run
        .trace
        .iter()
        .filter(|e| e.decision == TraceDecision::Skipped)
        .count() as u64;
    let metrics = Metrics::new(
        universe_size as u64,
        current.cardinality() as u64,
        wall.as_secs_f64(),
        run.executed,
        skipped,
    );
    Ok(ReductionResult {
        minimal: current,
        metrics,
        trace: run.trace,
        truncated,
        final_m: run.state.m(),
        final_confidence: run.state.confidence().value(),
        draws_consumed: run.state.draws_consumed(),
        cache_hits: run.cache_hits,
        history: run.history,
    })
}

/// True iff removing any single element makes `candidate` uninteresting.
/// Executes `|candidate|` oracle calls; meant for tests.
pub fn is_one_minimal<O: Oracle + ?Sized>(
    candidate: &Candidate,
    oracle: &mut O,
) -> Result<bool, OracleError> {
    for i in candidate.indices() {
        if oracle.evaluate(&candidate.without(i))?.verdict.is_interesting() {
            return Ok(false);
        }
    }
    Ok(true)
}
