//! Objective functions and the noisy observation model `y = f(x) + eps`.
//!
//! Every objective is maximized. The text task scores a sequence by its
//! negative edit distance to a target word; Ehrlich functions score motif
//! satisfaction under a banned-transition feasibility constraint.

mod ehrlich;

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{CoreError, Sequence, Vocab};

pub use ehrlich::{EhrlichConfig, EhrlichFunction, Motif};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlackBoxError {
    #[error(transparent)]
    Shape(#[from] CoreError),
    #[error("Ehrlich construction failed after {attempts} attempts")]
    ConstructionFailed { attempts: usize },
    #[error("invalid Ehrlich parameters: {0}")]
    InvalidParameters(String),
    #[error("transition mask is not strongly connected")]
    NotErgodic,
    #[error("stored certificate does not attain the optimum")]
    BadCertificate,
    #[error("noise sigma must be finite and nonnegative, got {0}")]
    NoiseSigma(f64),
}

/// Unit-cost Levenshtein distance.
pub fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0; b.len() + 1];
    for (i, &ac) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &bc) in b.iter().enumerate() {
            let cost = usize::from(ac != bc);
            cur[j + 1] = (cur[j] + 1).min(prev[j + 1] + 1).min(prev[j] + cost);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Maximize `-levenshtein(x, target)` over fixed-length strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditDistanceTask {
    vocab: Vocab,
    target: Sequence,
}

impl EditDistanceTask {
    pub fn new(vocab: Vocab, target: &str) -> Result<Self, CoreError> {
        let target = vocab.parse(target)?;
        Ok(Self { vocab, target })
    }

    /// Five-letter `ALOHA` over `A..Z`.
    pub fn aloha() -> Self {
        Self::new(Vocab::english_upper(), "ALOHA").expect("ALOHA is in A..Z")
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn target(&self) -> &Sequence {
        &self.target
    }

    pub fn length(&self) -> usize {
        self.target.len()
    }

    pub fn distance(&self, seq: &Sequence) -> Result<usize, CoreError> {
        seq.validate(self.length(), self.vocab.len())?;
        Ok(levenshtein(seq.tokens(), self.target.tokens()))
    }

    pub fn evaluate(&self, seq: &Sequence) -> Result<f64, CoreError> {
        Ok(-(self.distance(seq)? as f64))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    EditDistance(EditDistanceTask),
    Ehrlich(EhrlichFunction),
}

impl Task {
    pub fn length(&self) -> usize {
        match self {
            Task::EditDistance(t) => t.length(),
            Task::Ehrlich(f) => f.length(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            Task::EditDistance(t) => t.vocab().len(),
            Task::Ehrlich(f) => f.vocab_size(),
        }
    }

    /// Known global maximum.
    pub fn f_star(&self) -> f64 {
        match self {
            Task::EditDistance(_) => 0.0,
            Task::Ehrlich(_) => 1.0,
        }
    }

    pub fn evaluate(&self, seq: &Sequence) -> Result<f64, BlackBoxError> {
        match self {
            Task::EditDistance(t) => Ok(t.evaluate(seq)?),
            Task::Ehrlich(f) => f.evaluate(seq),
        }
    }
}

/// A task plus additive Gaussian observation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlackBox {
    task: Task,
    noise_sigma: f64,
}

impl BlackBox {
    pub fn new(task: Task, noise_sigma: f64) -> Result<Self, BlackBoxError> {
        if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
            return Err(BlackBoxError::NoiseSigma(noise_sigma));
        }
        Ok(Self { task, noise_sigma })
    }

    pub fn noiseless(task: Task) -> Self {
        Self {
            task,
            noise_sigma: 0.0,
        }
    }

    pub fn task(&self) -> &Task {
        &self.task
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn length(&self) -> usize {
        self.task.length()
    }

    pub fn vocab_size(&self) -> usize {
        self.task.vocab_size()
    }

    pub fn f_star(&self) -> f64 {
        self.task.f_star()
    }

    /// Noiseless objective value.
    pub fn evaluate(&self, seq: &Sequence) -> Result<f64, BlackBoxError> {
        self.task.evaluate(seq)
    }

    /// `f(seq)` plus one Gaussian draw; no draw is consumed when the noise is zero.
    pub fn observe<R: Rng + ?Sized>(&self, seq: &Sequence, rng: &mut R) -> Result<f64, BlackBoxError> {
        let f = self.task.evaluate(seq)?;
        if self.noise_sigma == 0.0 {
            return Ok(f);
        }
        let normal = Normal::new(0.0, self.noise_sigma).expect("sigma validated");
        Ok(f + normal.sample(rng))
    }
}
