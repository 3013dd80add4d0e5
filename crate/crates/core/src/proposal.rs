//! Mean-field categorical proposal `q(x) = prod_m softmax(logits_m)[x_m]`
//! and the reference priors it is measured against.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{exp, ln, log_sum_exp, softmax_into};
use crate::types::{Dataset, Sequence};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProposalError {
    #[error("logits must be finite and shaped {positions}x{vocab_size}")]
    BadLogits { positions: usize, vocab_size: usize },
    #[error("prior needs at least one sequence")]
    EmptyData,
    #[error("prior probability at position {position} is zero; increase smoothing")]
    ZeroProbability { position: usize },
    #[error("sequence of length {0} does not match the model")]
    LengthMismatch(usize),
}

/// Unconstrained `positions x vocab_size` logits, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldParams {
    positions: usize,
    vocab_size: usize,
    logits: Vec<f64>,
}

impl MeanFieldParams {
    pub fn zeros(positions: usize, vocab_size: usize) -> Self {
        Self {
            positions,
            vocab_size,
            logits: vec![0.0; positions * vocab_size],
        }
    }

    pub fn from_logits(positions: usize, vocab_size: usize, logits: Vec<f64>) -> Result<Self, ProposalError> {
        if logits.len() != positions * vocab_size || logits.iter().any(|x| !x.is_finite()) {
            return Err(ProposalError::BadLogits {
                positions,
                vocab_size,
            });
        }
        Ok(Self {
            positions,
            vocab_size,
            logits,
        })
    }

    /// Small-noise initial logits, i.i.d. `N(0, scale^2)`.
    pub fn random<R: Rng + ?Sized>(positions: usize, vocab_size: usize, scale: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, scale).expect("finite scale");
        Self {
            positions,
            vocab_size,
            logits: (0..positions * vocab_size).map(|_| normal.sample(rng)).collect(),
        }
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.logits[m * self.vocab_size..(m + 1) * self.vocab_size]
    }

    /// Per-position probabilities, row-major.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.logits.len()];
        for (row, o) in self
            .logits
            .chunks(self.vocab_size)
            .zip(out.chunks_mut(self.vocab_size))
        {
            softmax_into(row, o);
        }
        out
    }

    /// Per-position log-normalizers.
    pub fn log_normalizers(&self) -> Vec<f64> {
        self.logits.chunks(self.vocab_size).map(log_sum_exp).collect()
    }

    /// Exact `log q(seq)`.
    pub fn log_prob(&self, seq: &Sequence) -> f64 {
        self.log_prob_with(&self.log_normalizers(), seq)
    }

    /// `log q(seq)` reusing precomputed [`MeanFieldParams::log_normalizers`].
    pub fn log_prob_with(&self, log_norms: &[f64], seq: &Sequence) -> f64 {
        seq.tokens()
            .iter()
            .enumerate()
            .map(|(m, &t)| self.logits[m * self.vocab_size + t as usize] - log_norms[m])
            .sum()
    }

    /// `count` i.i.d. draws; position tokens are drawn independently by inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<Sequence> {
        let probs = self.probabilities();
        (0..count)
            .map(|_| {
                let tokens = probs
                    .chunks(self.vocab_size)
                    .map(|row| {
                        let u: f64 = rng.random();
                        let mut acc = 0.0;
                        for (v, &p) in row.iter().enumerate() {
                            acc += p;
                            if u < acc {
                                return v as u8;
                            }
                        }
                        // u landed in the rounding slack above the last cumulative sum
                        row.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u8
                    })
                    .collect();
                Sequence::from_tokens(tokens)
            })
            .collect()
    }

    /// `d log q(seq) / d logits`: row m is `onehot(x_m) - softmax(logits_m)`.
    pub fn grad_log_prob(&self, seq: &Sequence) -> Vec<f64> {
        let mut g = self.probabilities();
        for x in g.iter_mut() {
            *x = -*x;
        }
        for (m, &t) in seq.tokens().iter().enumerate() {
            g[m * self.vocab_size + t as usize] += 1.0;
        }
        g
    }
}

/// Reference density `p0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    Uniform {
        positions: usize,
        vocab_size: usize,
    },
    /// Independent per-position categoricals, stored as log-probabilities.
    PerPosition {
        positions: usize,
        vocab_size: usize,
        log_probs: Vec<f64>,
    },
}

pub fn prior_uniform(positions: usize, vocab_size: usize) -> Prior {
    Prior::Uniform {
        positions,
        vocab_size,
    }
}

/// Smoothed per-position frequencies `(count + alpha) / (n + alpha V)`.
pub fn prior_from_data(init: &Dataset, vocab_size: usize, alpha: f64) -> Result<Prior, ProposalError> {
    let first = init.records().first().ok_or(ProposalError::EmptyData)?;
    let positions = first.sequence.len();
    let mut counts = vec![0.0; positions * vocab_size];
    for r in init.records() {
        if r.sequence.len() != positions {
            return Err(ProposalError::LengthMismatch(r.sequence.len()));
        }
        for (m, &t) in r.sequence.tokens().iter().enumerate() {
            counts[m * vocab_size + t as usize] += 1.0;
        }
    }
    let denom = init.len() as f64 + alpha * vocab_size as f64;
    let mut log_probs = Vec::with_capacity(counts.len());
    for (i, c) in counts.into_iter().enumerate() {
        let p = (c + alpha) / denom;
        if p <= 0.0 {
            return Err(ProposalError::ZeroProbability {
                position: i / vocab_size,
            });
        }
        log_probs.push(ln(p));
    }
    Ok(Prior::PerPosition {
        positions,
        vocab_size,
        log_probs,
    })
}

impl Prior {
    pub fn positions(&self) -> usize {
        match self {
            Prior::Uniform { positions, .. } | Prior::PerPosition { positions, .. } => *positions,
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            Prior::Uniform { vocab_size, .. } | Prior::PerPosition { vocab_size, .. } => *vocab_size,
        }
    }

    pub fn log_prob(&self, seq: &Sequence) -> f64 {
        match self {
            Prior::Uniform {
                positions,
                vocab_size,
            } => -(*positions as f64) * ln(*vocab_size as f64),
            Prior::PerPosition {
                vocab_size,
                log_probs,
                ..
            } => seq
                .tokens()
                .iter()
                .enumerate()
                .map(|(m, &t)| log_probs[m * vocab_size + t as usize])
                .sum(),
        }
    }

    /// Logits whose proposal reproduces this prior exactly.
    pub fn as_params(&self) -> MeanFieldParams {
        match self {
            Prior::Uniform {
                positions,
                vocab_size,
            } => MeanFieldParams::zeros(*positions, *vocab_size),
            Prior::PerPosition {
                positions,
                vocab_size,
                log_probs,
            } => MeanFieldParams {
                positions: *positions,
                vocab_size: *vocab_size,
                logits: log_probs.clone(),
            },
        }
    }

    /// Per-position probability of token `v` at position `m`.
    pub fn prob(&self, m: usize, v: usize) -> f64 {
        match self {
            Prior::Uniform { vocab_size, .. } => 1.0 / *vocab_size as f64,
            Prior::PerPosition {
                vocab_size,
                log_probs,
                ..
            } => exp(log_probs[m * vocab_size + v]),
        }
    }
}

pub fn prior_log_prob(prior: &Prior, seq: &Sequence) -> f64 {
    prior.log_prob(seq)
}
