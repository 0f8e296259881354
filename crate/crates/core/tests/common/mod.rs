//! Shared fixtures: the eight-statement C example, its ddmin schedule with
//! verdicts, and the uniform draws of the worked skip trace.

#![allow(dead_code)]

use std::path::PathBuf;

use monored::oracle::{TabularOracle, Verdict};
use monored::Candidate;

pub const UNIVERSE: usize = 8;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

/// 1-based statement numbers of t1..t28 and whether each is interesting.
pub const SCHEDULE: [(&[usize], bool); 28] = [
    (&[1, 2, 3, 4], false),
    (&[5, 6, 7, 8], false),
    (&[1, 2], false),
    (&[3, 4], false),
    (&[5, 6], false),
    (&[7, 8], false),
    (&[3, 4, 5, 6, 7, 8], false),
    (&[1, 2, 5, 6, 7, 8], true),
    (&[1, 2], false),
    (&[5, 6], false),
    (&[7, 8], false),
    (&[5, 6, 7, 8], false),
    (&[1, 2, 7, 8], true),
    (&[1, 2], false),
    (&[7, 8], false),
    (&[1], false),
    (&[2], false),
    (&[7], false),
    (&[8], false),
    (&[2, 7, 8], false),
    (&[1, 7, 8], true),
    (&[1], false),
    (&[7], false),
    (&[8], false),
    (&[7, 8], false),
    (&[1, 8], true),
    (&[1], false),
    (&[8], false),
];

pub const GRANULARITIES: [usize; 7] = [2, 4, 3, 2, 4, 3, 2];

/// Candidates re-proposed after an identical earlier execution.
pub const DUPLICATES: [usize; 12] = [9, 10, 11, 12, 14, 15, 22, 23, 24, 25, 27, 28];

pub const DRAWS: [f64; 20] = [
    0.66, 0.41, 0.17, 0.81, 0.85, 0.66, 0.21, 0.49, 0.81, 0.72, 0.93, 0.73, 0.23, 0.44, 0.67,
    0.21, 0.24, 0.92, 0.79, 0.97,
];

pub const PMA_EXECUTED: [usize; 12] = [1, 2, 3, 6, 7, 8, 9, 13, 16, 20, 21, 26];

/// Confidence before each proposal, t1..t28, as printed (two decimals).
pub fn pma_confidence_rows() -> Vec<f64> {
    let mut rows = vec![0.5; 8];
    rows.extend([0.73; 5]);
    rows.extend([0.88; 8]);
    rows.extend([0.95; 5]);
    rows.extend([0.98; 2]);
    rows
}

pub fn statements(one_based: &[usize]) -> Candidate {
    Candidate::from_indices(UNIVERSE, one_based.iter().map(|s| s - 1))
}

pub fn schedule() -> Vec<(Candidate, Verdict)> {
    SCHEDULE
        .iter()
        .map(|(s, t)| (statements(s), Verdict::from_bool(*t)))
        .collect()
}

/// Truth table over every candidate the schedule proposes, plus the
/// unreduced input.
pub fn tabular_oracle() -> TabularOracle {
    let mut o: TabularOracle = schedule().into_iter().collect();
    o.insert(Candidate::full(UNIVERSE), Verdict::Interesting);
    o
}
