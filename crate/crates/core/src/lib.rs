//! Test-case reduction with ddmin and probabilistic monotonicity
//! assessment.
//!
//! [`engine::reduce`] runs ddmin over a universe of indexed elements. In
//! [`engine::Mode::Pma`] each proposed candidate that has an executed,
//! not-interesting superset may be skipped with probability equal to the
//! current monotonicity confidence ([`model`]). Supersets are found through
//! the cardinality-bucketed [`history::HistoryStore`].

pub mod candidate;
pub mod engine;
pub mod history;
pub mod model;
pub mod oracle;
pub mod simlab;
pub mod trace;
pub mod universe;

pub use candidate::Candidate;
pub use engine::{is_one_minimal, partition, reduce, Mode, ReductionConfig, ReductionResult};
pub use history::HistoryStore;
pub use model::{confidence, ConfidenceState, MonoVerdict};
pub use oracle::{Oracle, Outcome, Verdict};
pub use universe::{tokenize, TokenizerMode, Universe};
