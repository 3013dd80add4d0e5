//! Shared domain types: vocabularies, sequences, observations and run records.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest and largest supported alphabet sizes.
pub const MIN_VOCAB: usize = 2;
pub const MAX_VOCAB: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("symbol at position {0} is not in the vocabulary")]
    UnknownSymbol(usize),
    #[error("empty sequence")]
    EmptySequence,
    #[error("duplicate vocabulary symbol {0:?}")]
    DuplicateSymbol(char),
    #[error("vocabulary size {0} outside [2, 64]")]
    VocabSize(usize),
    #[error("sequence length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("token {token} at position {position} is outside a vocabulary of size {vocab_size}")]
    TokenOutOfRange {
        position: usize,
        token: u8,
        vocab_size: usize,
    },
}

/// Ordered alphabet. Symbols are indexed alphabetically (by code point).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Vocab {
    symbols: Vec<char>,
}

impl Vocab {
    pub fn new(symbols: &str) -> Result<Self, CoreError> {
        let mut chars: Vec<char> = symbols.chars().collect();
        chars.sort_unstable();
        if let Some(w) = chars.windows(2).find(|w| w[0] == w[1]) {
            return Err(CoreError::DuplicateSymbol(w[0]));
        }
        if !(MIN_VOCAB..=MAX_VOCAB).contains(&chars.len()) {
            return Err(CoreError::VocabSize(chars.len()));
        }
        Ok(Self { symbols: chars })
    }

    /// `A..Z`.
    pub fn english_upper() -> Self {
        Self::new("ABCDEFGHIJKLMNOPQRSTUVWXYZ").expect("valid alphabet")
    }

    /// The 20 standard amino-acid letters.
    pub fn amino_acids() -> Self {
        Self::new("ACDEFGHIKLMNPQRSTVWY").expect("valid alphabet")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn index_of(&self, c: char) -> Option<u8> {
        self.symbols.binary_search(&c).ok().map(|i| i as u8)
    }

    pub fn symbol(&self, index: u8) -> Option<char> {
        self.symbols.get(index as usize).copied()
    }

    /// Parses a string into token indices. Membership is case-sensitive.
    pub fn parse(&self, s: &str) -> Result<Sequence, CoreError> {
        if s.is_empty() {
            return Err(CoreError::EmptySequence);
        }
        let tokens = s
            .chars()
            .enumerate()
            .map(|(i, c)| self.index_of(c).ok_or(CoreError::UnknownSymbol(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Sequence::from_tokens(tokens))
    }

    /// Inverse of [`Vocab::parse`].
    pub fn render(&self, seq: &Sequence) -> Result<String, CoreError> {
        seq.tokens()
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                self.symbol(t).ok_or(CoreError::TokenOutOfRange {
                    position: i,
                    token: t,
                    vocab_size: self.len(),
                })
            })
            .collect()
    }
}

impl TryFrom<String> for Vocab {
    type Error = CoreError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Vocab::new(&s)
    }
}

impl From<Vocab> for String {
    fn from(v: Vocab) -> String {
        v.symbols.into_iter().collect()
    }
}

/// Parses `s` against `vocab`.
pub fn seq_from_string(s: &str, vocab: &Vocab) -> Result<Sequence, CoreError> {
    vocab.parse(s)
}

pub fn seq_to_string(seq: &Sequence, vocab: &Vocab) -> Result<String, CoreError> {
    vocab.render(seq)
}

/// A design point: a fixed-length vector of token indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sequence {
    tokens: Vec<u8>,
}

impl Sequence {
    pub fn from_tokens(tokens: Vec<u8>) -> Self {
        Self { tokens }
    }

    pub fn tokens(&self) -> &[u8] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn into_tokens(self) -> Vec<u8> {
        self.tokens
    }

    /// Checks length and token range against a task's shape.
    pub fn validate(&self, length: usize, vocab_size: usize) -> Result<(), CoreError> {
        if self.tokens.len() != length {
            return Err(CoreError::LengthMismatch {
                expected: length,
                found: self.tokens.len(),
            });
        }
        match self
            .tokens
            .iter()
            .enumerate()
            .find(|(_, &t)| t as usize >= vocab_size)
        {
            Some((position, &token)) => Err(CoreError::TokenOutOfRange {
                position,
                token,
                vocab_size,
            }),
            None => Ok(()),
        }
    }
}

/// One evaluated design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub sequence: Sequence,
    pub y: f64,
    pub round: u32,
    /// Log-density of the distribution that produced `sequence`, recorded at sampling time.
    pub proposal_logp: f64,
}

/// Append-only observation log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<Observation>,
    initial_size: usize,
}

impl Dataset {
    /// Starts a dataset from the initial design; every record is stamped round 0.
    pub fn from_initial(mut initial: Vec<Observation>) -> Self {
        for obs in &mut initial {
            obs.round = 0;
        }
        let initial_size = initial.len();
        Self {
            records: initial,
            initial_size,
        }
    }

    pub fn push(&mut self, obs: Observation) {
        self.records.push(obs);
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn initial_size(&self) -> usize {
        self.initial_size
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.y)
    }

    /// Largest observed value, `None` when empty.
    pub fn best_y(&self) -> Option<f64> {
        self.ys().fold(None, |acc, y| match acc {
            Some(b) if b >= y => Some(b),
            _ => Some(y),
        })
    }

    /// Index of the best record; the earliest wins on ties.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in self.records.iter().enumerate() {
            if best.is_none_or(|(_, b)| r.y > b) {
                best = Some((i, r.y));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Records acquired in the given round.
    pub fn round(&self, round: u32) -> impl Iterator<Item = &Observation> + '_ {
        self.records.iter().filter(move |r| r.round == round)
    }

    pub fn last_round(&self) -> u32 {
        self.records.iter().map(|r| r.round).max().unwrap_or(0)
    }
}

/// Metrics logged after each optimization round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub threshold: f64,
    pub best_y: f64,
    pub simple_regret: f64,
    pub batch_mean_u: f64,
    /// Training loss at the end of the fit; `None` for methods that do not train.
    pub final_loss: Option<f64>,
    pub n_evals: usize,
}
