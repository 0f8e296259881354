//! Reduction metrics and desk-scale simulation experiments.

use std::io;
use std::time::Instant;

use rand::distr::{Bernoulli, Distribution};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidate::Candidate;
use crate::engine::{reduce, Mode, ReduceError, ReductionConfig};
use crate::model::{confidence, ConfidenceState, MonoVerdict};
use crate::oracle::MonotoneOracle;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Size, time, and throughput of one reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub original_tokens: u64,
    pub reduced_tokens: u64,
    pub wall_seconds: f64,
    pub executed_tests: u64,
    pub skipped_tests: u64,
    /// `(original - reduced) / wall_seconds`, or 0 when no time elapsed.
    pub deletion_rate: f64,
}

impl Metrics {
    pub fn new(
        original_tokens: u64,
        reduced_tokens: u64,
        wall_seconds: f64,
        executed_tests: u64,
        skipped_tests: u64,
    ) -> Self {
        let deletion_rate = if wall_seconds > 0.0 {
            original_tokens.saturating_sub(reduced_tokens) as f64 / wall_seconds
        } else {
            0.0
        };
        Self {
            original_tokens,
            reduced_tokens,
            wall_seconds,
            executed_tests,
            skipped_tests,
            deletion_rate,
        }
    }

    pub fn deleted_tokens(&self) -> u64 {
        self.original_tokens.saturating_sub(self.reduced_tokens)
    }

    /// Recomputes `rate * seconds` against the deleted-token count.
    pub fn identity_holds(&self) -> bool {
        if self.reduced_tokens > self.original_tokens || self.deletion_rate < 0.0 {
            return false;
        }
        if self.wall_seconds <= 0.0 {
            return self.deletion_rate == 0.0;
        }
        let deleted = self.deleted_tokens() as f64;
        (self.deletion_rate * self.wall_seconds - deleted).abs() <= 1e-9 * deleted.max(1.0)
    }
}

/// Percentage by which `treated` improves on `baseline` (lower is better).
pub fn improvement_pct(baseline: f64, treated: f64) -> Result<f64, SimError> {
    if baseline.is_nan() || baseline <= 0.0 {
        return Err(SimError::Contract(format!("baseline must be positive, got {baseline}")));
    }
    Ok((baseline - treated) / baseline * 100.0)
}

/// Ratio of reduction speeds.
pub fn speedup_factor(treated_rate: f64, baseline_rate: f64) -> Result<f64, SimError> {
    if baseline_rate.is_nan() || baseline_rate <= 0.0 {
        return Err(SimError::Contract(format!(
            "baseline rate must be positive, got {baseline_rate}"
        )));
    }
    Ok(treated_rate / baseline_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplianceStreamSpec {
    /// Probability that an event is a compliance.
    pub mu: f64,
    pub n: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlnPoint {
    /// 1-based event number.
    pub event: u64,
    pub m: i64,
    pub confidence: f64,
}

/// Feeds `n` Bernoulli(`mu`) compliance verdicts through the counter update
/// and records `m` and the confidence after each event.
pub fn lln_experiment(spec: ComplianceStreamSpec) -> Result<Vec<LlnPoint>, SimError> {
    if !(0.0..=1.0).contains(&spec.mu) {
        return Err(SimError::Contract(format!("mu must lie in [0, 1], got {}", spec.mu)));
    }
    if spec.n == 0 {
        return Err(SimError::Contract("event count must be at least 1".into()));
    }
    let coin = Bernoulli::new(spec.mu).map_err(|e| SimError::Contract(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut state = ConfidenceState::new(spec.seed);
    let mut out = Vec::with_capacity(spec.n as usize);
    for event in 1..=spec.n {
        let verdict = if coin.sample(&mut rng) {
            MonoVerdict::Compliant
        } else {
            MonoVerdict::Violation
        };
        state.mono_update(verdict);
        out.push(LlnPoint {
            event,
            m: state.m(),
            confidence: confidence(state.m() as f64).value(),
        });
    }
    Ok(out)
}

/// A synthetic monotone reduction problem.
#[derive(Debug, Clone)]
pub struct Instance {
    pub size: usize,
    pub target: Candidate,
    /// Seed for the skip layer's draws.
    pub seed: u64,
}

impl Instance {
    /// Target cardinality is uniform on `1..=size`; the members are a
    /// uniform sample of that many distinct elements.
    pub fn with_size<R: Rng + ?Sized>(size: usize, seed: u64, rng: &mut R) -> Self {
        assert!(size >= 1, "instance size must be positive");
        let k = rng.random_range(1..=size);
        let target = Candidate::from_indices(size, index::sample(rng, size, k));
        Self { size, target, seed }
    }

    /// Deterministic instance for a sweep cell; both modes see the same
    /// target.
    pub fn for_cell(size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (size as u64).rotate_left(32));
        Self::with_size(size, seed, &mut rng)
    }

    pub fn oracle(&self) -> MonotoneOracle {
        MonotoneOracle::new(self.target.clone()).expect("instance targets are non-empty")
    }

    pub fn run(&self, mode: Mode) -> Result<crate::engine::ReductionResult, ReduceError> {
        let mut oracle = self.oracle();
        reduce(self.size, &mut oracle, &ReductionConfig::new(mode).with_seed(self.seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub mode: Mode,
    pub seed: u64,
    pub reduced_tokens: u64,
    pub executed_tests: u64,
    pub skipped_tests: u64,
    pub wall_seconds: f64,
    pub rate: f64,
}

/// Runs every `(size, mode, seed)` cell against a monotone oracle with a
/// random target. Rows come back in size, seed, mode order regardless of
/// how the cells were scheduled.
pub fn sweep(sizes: &[usize], modes: &[Mode], seeds: &[u64]) -> Result<Vec<SweepRow>, SimError> {
    if let Some(bad) = sizes.iter().find(|s| **s == 0) {
        return Err(SimError::Contract(format!("sweep size must be positive, got {bad}")));
    }
    let cells: Vec<(usize, u64, Mode)> = sizes
        .iter()
        .flat_map(|&size| {
            seeds
                .iter()
                .flat_map(move |&seed| modes.iter().map(move |&mode| (size, seed, mode)))
        })
        .collect();
    cells
        .par_iter()
        .map(|&(size, seed, mode)| {
            let instance = Instance::for_cell(size, seed);
            let started = Instant::now();
            let result = instance.run(mode)?;
            let wall_seconds = started.elapsed().as_secs_f64();
            let metrics = crate::simlab::Metrics::new(
                size as u64,
                result.minimal.cardinality() as u64,
                wall_seconds,
                result.metrics.executed_tests,
                result.metrics.skipped_tests,
            );
            Ok(SweepRow {
                size,
                mode,
                seed,
                reduced_tokens: metrics.reduced_tokens,
                executed_tests: metrics.executed_tests,
                skipped_tests: metrics.skipped_tests,
                wall_seconds,
                rate: metrics.deletion_rate,
            })
        })
        .collect()
}

pub const SWEEP_COLUMNS: [&str; 8] = [
    "size",
    "mode",
    "seed",
    "reduced_tokens",
    "executed_tests",
    "skipped_tests",
    "wall_seconds",
    "rate",
];

/// Writes sweep rows as CSV; the header is written even with no rows.
pub fn write_sweep_csv<W: io::Write>(rows: &[SweepRow], out: W) -> Result<(), SimError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improvement_examples() {
        let p = improvement_pct(3517.7, 3007.1).unwrap();
        assert!((p - 14.5).abs() <= 0.05, "{p}");
        let p = improvement_pct(8888.4, 4019.4).unwrap();
        assert!((p - 54.8).abs() <= 0.05, "{p}");
        assert_eq!(improvement_pct(42.0, 42.0).unwrap(), 0.0);
        assert!(improvement_pct(0.0, 1.0).is_err());
        assert!(improvement_pct(-3.0, 1.0).is_err());
    }

    #[test]
    fn speedup_examples() {
        let s = speedup_factor(8.64, 7.41).unwrap();
        assert!((s - 1.166).abs() < 5e-4, "{s}");
        assert_eq!(speedup_factor(3.0, 3.0).unwrap(), 1.0);
        // 12.53 / 0.56 = 22.375; the table prints 22.20 because its inputs
        // are themselves rounded.
        let s = speedup_factor(12.53, 0.56).unwrap();
        assert!((s - 22.375).abs() < 1e-9);
        assert!(speedup_factor(1.0, 0.0).is_err());
    }

    #[test]
    fn improvement_antisymmetry_up_to_scale() {
        for (b, t) in [(10.0, 4.0), (3517.7, 3007.1), (2.5, 9.75)] {
            let lhs = improvement_pct(b, t).unwrap();
            let rhs = -improvement_pct(t, b).unwrap() * (t / b);
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn metrics_identity() {
        let m = Metrics::new(100, 7, 3.1, 40, 12);
        assert!(m.identity_holds());
        assert!((m.deletion_rate - 93.0 / 3.1).abs() < 1e-12);
        let zero = Metrics::new(5, 5, 0.0, 0, 0);
        assert_eq!(zero.deletion_rate, 0.0);
        assert!(zero.identity_holds());
    }

    #[test]
    fn lln_all_compliant_trajectory() {
        let traj = lln_experiment(ComplianceStreamSpec { mu: 1.0, n: 4, seed: 3 }).unwrap();
        let ms: Vec<i64> = traj.iter().map(|p| p.m).collect();
        assert_eq!(ms, vec![1, 2, 3, 4]);
        let expected = [0.73, 0.88, 0.95, 0.98];
        for (p, e) in traj.iter().zip(expected) {
            assert!((p.confidence - e).abs() < 0.005, "{} vs {e}", p.confidence);
        }
        assert!(traj.windows(2).all(|w| w[0].confidence < w[1].confidence));
    }

    #[test]
    fn lln_all_violations() {
        let traj = lln_experiment(ComplianceStreamSpec { mu: 0.0, n: 25, seed: 3 }).unwrap();
        assert_eq!(traj.last().unwrap().m, -25);
        assert!(traj.windows(2).all(|w| w[0].confidence > w[1].confidence));
    }

    #[test]
    fn lln_rejects_bad_spec() {
        assert!(lln_experiment(ComplianceStreamSpec { mu: 1.5, n: 4, seed: 0 }).is_err());
        assert!(lln_experiment(ComplianceStreamSpec { mu: 0.5, n: 0, seed: 0 }).is_err());
    }

    #[test]
    fn sweep_size_one_and_empty_seeds() {
        let rows = sweep(&[1], &[Mode::Ddmin, Mode::Pma], &[0, 1]).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.reduced_tokens == 1 && r.executed_tests == 0));

        let rows = sweep(&[8, 16], &[Mode::Ddmin, Mode::Pma], &[]).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "size,mode,seed,reduced_tokens,executed_tests,skipped_tests,wall_seconds,rate\n"
        );
    }

    #[test]
    fn sweep_csv_has_lowercase_modes() {
        let rows = sweep(&[6], &[Mode::Pma], &[4]).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("6,pma,4,"));
    }

    #[test]
    fn instance_targets_are_non_empty_and_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for size in 1..40 {
            let inst = Instance::with_size(size, 0, &mut rng);
            assert!(!inst.target.is_empty());
            assert_eq!(inst.target.universe_len(), size);
        }
    }
}
