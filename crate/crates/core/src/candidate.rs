//! Fixed-width bitset over universe indices.
//!
//! A [`Candidate`] is the unit the oracle judges: a subset of the universe
//! stored as dense 64-bit words with a cached population count.

use std::fmt;

const WORD_BITS: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// An immutable subset of a universe of `universe_len` elements.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Candidate {
    words: Box<[u64]>,
    universe_len: usize,
    cardinality: usize,
}

impl Candidate {
    pub fn empty(universe_len: usize) -> Self {
        Self {
            words: vec![0; words_for(universe_len)].into_boxed_slice(),
            universe_len,
            cardinality: 0,
        }
    }

    pub fn full(universe_len: usize) -> Self {
        Self::from_indices(universe_len, 0..universe_len)
    }

    /// Builds a candidate from element indices. Indices outside the universe
    /// panic; duplicates are harmless.
    pub fn from_indices<I>(universe_len: usize, indices: I) -> Self
    where
        I: IntoIterator<Item = usize>,
    {
        let mut words = vec![0u64; words_for(universe_len)];
        for i in indices {
            assert!(
                i < universe_len,
                "index {i} outside universe of {universe_len}"
            );
            words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
        }
        Self::from_words(universe_len, words)
    }

    fn from_words(universe_len: usize, words: Vec<u64>) -> Self {
        let cardinality = words.iter().map(|w| w.count_ones() as usize).sum();
        Self {
            words: words.into_boxed_slice(),
            universe_len,
            cardinality,
        }
    }

    pub fn universe_len(&self) -> usize {
        self.universe_len
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn is_empty(&self) -> bool {
        self.cardinality == 0
    }

    pub fn contains(&self, index: usize) -> bool {
        index < self.universe_len && self.words[index / WORD_BITS] & (1 << (index % WORD_BITS)) != 0
    }

    /// Element indices in ascending universe order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD_BITS + bit)
            })
        })
    }

    /// `self ⊆ other`, equality included.
    pub fn is_subset_of(&self, other: &Candidate) -> bool {
        debug_assert_eq!(self.universe_len, other.universe_len);
        self.cardinality <= other.cardinality
            && self
                .words
                .iter()
                .zip(other.words.iter())
                .all(|(a, b)| a & b == *a)
    }

    pub fn is_superset_of(&self, other: &Candidate) -> bool {
        other.is_subset_of(self)
    }

    /// `self \ other`.
    pub fn difference(&self, other: &Candidate) -> Candidate {
        debug_assert_eq!(self.universe_len, other.universe_len);
        let words = self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| a & !b)
            .collect();
        Self::from_words(self.universe_len, words)
    }

    pub fn union(&self, other: &Candidate) -> Candidate {
        debug_assert_eq!(self.universe_len, other.universe_len);
        let words = self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| a | b)
            .collect();
        Self::from_words(self.universe_len, words)
    }

    /// Returns a copy with one element removed.
    pub fn without(&self, index: usize) -> Candidate {
        let mut words = self.words.to_vec();
        if index < self.universe_len {
            words[index / WORD_BITS] &= !(1 << (index % WORD_BITS));
        }
        Self::from_words(self.universe_len, words)
    }

    /// Lowercase hex of the bitset packed LSB-first into bytes: byte `k`
    /// holds elements `8k..8k+8`, element `8k + j` at bit `j`. The string
    /// always has `2 * ceil(universe_len / 8)` digits.
    pub fn to_hex(&self) -> String {
        let nbytes = self.universe_len.div_ceil(8);
        let mut out = String::with_capacity(nbytes * 2);
        for k in 0..nbytes {
            let byte = (self.words[k / 8] >> ((k % 8) * 8)) as u8;
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    /// Inverse of [`Candidate::to_hex`]. Returns `None` on malformed input,
    /// wrong length, or bits set beyond `universe_len`.
    pub fn from_hex(universe_len: usize, hex: &str) -> Option<Candidate> {
        let nbytes = universe_len.div_ceil(8);
        if hex.len() != nbytes * 2 || !hex.is_ascii() {
            return None;
        }
        let mut words = vec![0u64; words_for(universe_len)];
        for k in 0..nbytes {
            let byte = u8::from_str_radix(&hex[2 * k..2 * k + 2], 16).ok()?;
            words[k / 8] |= (byte as u64) << ((k % 8) * 8);
        }
        let extra = universe_len % WORD_BITS;
        if extra != 0 {
            if let Some(last) = words.last() {
                if last >> extra != 0 {
                    return None;
                }
            }
        }
        Some(Self::from_words(universe_len, words))
    }
}

impl fmt::Debug for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.indices()).finish()
    }
}
