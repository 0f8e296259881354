//! Tokenizing input files into a universe of elements and rendering
//! candidates back to bytes.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidate::Candidate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    /// One element per line.
    Lines,
    /// One element per run of non-whitespace bytes.
    Tokens,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UniverseError {
    #[error("input contains no elements after tokenization")]
    Empty,
}

/// Ordered elements of the input being reduced. Indices are stable for
/// the whole run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    elements: Vec<Vec<u8>>,
    mode: TokenizerMode,
    source_path: Option<PathBuf>,
}

fn is_token_space(b: &u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n')
}

/// Splits `input` into elements. Lines mode splits on `\n` and keeps the
/// remaining bytes of each line (a `\r` stays part of its line); tokens
/// mode splits on runs of space, tab and newline. Empty elements are
/// dropped either way.
pub fn tokenize(input: &[u8], mode: TokenizerMode) -> Result<Universe, UniverseError> {
    let elements: Vec<Vec<u8>> = match mode {
        TokenizerMode::Lines => input
            .split(|b| *b == b'\n')
            .filter(|l| !l.is_empty())
            .map(<[u8]>::to_vec)
            .collect(),
        TokenizerMode::Tokens => input
            .split(is_token_space)
            .filter(|t| !t.is_empty())
            .map(<[u8]>::to_vec)
            .collect(),
    };
    if elements.is_empty() {
        return Err(UniverseError::Empty);
    }
    Ok(Universe {
        elements,
        mode,
        source_path: None,
    })
}

impl Universe {
    pub fn with_source_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.source_path = Some(path.into());
        self
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn mode(&self) -> TokenizerMode {
        self.mode
    }

    pub fn source_path(&self) -> Option<&std::path::Path> {
        self.source_path.as_deref()
    }

    pub fn elements(&self) -> &[Vec<u8>] {
        &self.elements
    }

    pub fn full(&self) -> Candidate {
        Candidate::full(self.len())
    }

    /// Selected elements in index order, newline-joined with a trailing
    /// newline (lines) or space-joined (tokens). The empty candidate
    /// renders to nothing.
    pub fn render(&self, candidate: &Candidate) -> Vec<u8> {
        let (sep, trailer): (&[u8], &[u8]) = match self.mode {
            TokenizerMode::Lines => (b"\n", b"\n"),
            TokenizerMode::Tokens => (b" ", b""),
        };
        let mut out = Vec::new();
        for (k, i) in candidate.indices().enumerate() {
            if k > 0 {
                out.extend_from_slice(sep);
            }
            out.extend_from_slice(&self.elements[i]);
        }
        if !out.is_empty() || !candidate.is_empty() {
            out.extend_from_slice(trailer);
        }
        out
    }
}
