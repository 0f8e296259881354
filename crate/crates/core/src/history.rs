//! Executed-candidate store answering failing-superset queries.
//!
//! Failing (not interesting) records are bucketed by cardinality so a
//! superset query only scans buckets at least as large as the query.
//! Passing records are kept for diagnostics and never consulted on the
//! query path.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::candidate::Candidate;
use crate::oracle::Verdict;

#[derive(Debug, Clone, Default)]
pub struct HistoryStore {
    failing: BTreeMap<usize, Vec<Candidate>>,
    passing: Vec<Candidate>,
    failing_count: usize,
}

impl HistoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records an executed candidate. Duplicates are stored once per
    /// execution; there is no set-equality dedup on insert.
    pub fn record(&mut self, candidate: Candidate, verdict: Verdict) {
        match verdict {
            Verdict::Interesting => self.passing.push(candidate),
            Verdict::NotInteresting => {
                self.failing
                    .entry(candidate.cardinality())
                    .or_default()
                    .push(candidate);
                self.failing_count += 1;
            }
        }
    }

    pub fn executed_count(&self) -> usize {
        self.failing_count + self.passing.len()
    }

    pub fn failing_count(&self) -> usize {
        self.failing_count
    }

    pub fn passing(&self) -> &[Candidate] {
        &self.passing
    }

    /// Failing records, largest bucket first.
    pub fn failing(&self) -> impl Iterator<Item = &Candidate> {
        self.failing.values().rev().flatten()
    }

    /// True iff some executed not-interesting candidate is a superset of
    /// `candidate` (equality included).
    pub fn has_failing_superset(&self, candidate: &Candidate) -> bool {
        self.failing
            .range(candidate.cardinality()..)
            .rev()
            .flat_map(|(_, bucket)| bucket.iter())
            .any(|f| candidate.is_subset_of(f))
    }

    /// Linear scan with no pruning. Test oracle for
    /// [`HistoryStore::has_failing_superset`].
    pub fn has_failing_superset_bruteforce(&self, candidate: &Candidate) -> bool {
        let mut found = false;
        for bucket in self.failing.values() {
            for f in bucket {
                let covered = candidate
                    .indices()
                    .all(|i| f.contains(i));
                found |= covered;
            }
        }
        found
    }

    /// Writes one line per record: `<outcome> <cardinality> <hex-bitset>`.
    /// Passing records come first in execution order, then failing records
    /// from the largest bucket down.
    pub fn dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for c in &self.passing {
            writeln!(out, "interesting {} {}", c.cardinality(), c.to_hex())?;
        }
        for c in self.failing() {
            writeln!(out, "not_interesting {} {}", c.cardinality(), c.to_hex())?;
        }
        Ok(())
    }
}
