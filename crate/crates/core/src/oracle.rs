//! Brute-force ground truth on enumerable domains: exact target densities,
//! exhaustive maximization and total-variation distances.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::acquisition::{utility, UtilityKind};
use crate::blackbox::{BlackBoxError, Task};
use crate::math::{exp, log_sum_exp};
use crate::proposal::{MeanFieldParams, Prior};
use crate::types::Sequence;

/// Largest domain the oracle will enumerate.
pub const MAX_DOMAIN: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("domain {vocab_size}^{positions} exceeds {MAX_DOMAIN} points")]
    DomainTooLarge { positions: usize, vocab_size: usize },
    #[error("target has zero total mass")]
    AllZeroMass,
    #[error("utility {0} is negative; KL-mode targets need nonnegative utilities")]
    NegativeUtility(f64),
    #[error(transparent)]
    Task(#[from] BlackBoxError),
}

pub fn domain_size(positions: usize, vocab_size: usize) -> Option<usize> {
    let mut n: usize = 1;
    for _ in 0..positions {
        n = n.checked_mul(vocab_size)?;
        if n > MAX_DOMAIN {
            return None;
        }
    }
    Some(n)
}

/// Every sequence in lexicographic order (first position most significant).
pub fn enumerate_domain(positions: usize, vocab_size: usize) -> Result<Vec<Sequence>, OracleError> {
    let n = domain_size(positions, vocab_size).ok_or(OracleError::DomainTooLarge {
        positions,
        vocab_size,
    })?;
    let mut out = Vec::with_capacity(n);
    let mut tokens = vec![0u8; positions];
    for _ in 0..n {
        out.push(Sequence::from_tokens(tokens.clone()));
        // odometer increment from the last position
        for m in (0..positions).rev() {
            tokens[m] += 1;
            if (tokens[m] as usize) < vocab_size {
                break;
            }
            tokens[m] = 0;
        }
    }
    Ok(out)
}

fn lex_index(seq: &Sequence, vocab_size: usize) -> usize {
    seq.tokens()
        .iter()
        .fold(0usize, |acc, &t| acc * vocab_size + t as usize)
}

/// A fully tabulated distribution over `V^M`, indexed lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    positions: usize,
    vocab_size: usize,
    probs: Vec<f64>,
}

impl ExactDistribution {
    /// Normalizes log-weights given in lexicographic order.
    pub fn from_log_weights(positions: usize, vocab_size: usize, log_w: &[f64]) -> Result<Self, OracleError> {
        let lse = log_sum_exp(log_w);
        if !lse.is_finite() {
            return Err(OracleError::AllZeroMass);
        }
        Ok(Self {
            positions,
            vocab_size,
            probs: log_w.iter().map(|&l| exp(l - lse)).collect(),
        })
    }

    /// Tabulates a proposal.
    pub fn from_params(q: &MeanFieldParams) -> Result<Self, OracleError> {
        let domain = enumerate_domain(q.positions(), q.vocab_size())?;
        let norms = q.log_normalizers();
        Ok(Self {
            positions: q.positions(),
            vocab_size: q.vocab_size(),
            probs: domain.iter().map(|s| exp(q.log_prob_with(&norms, s))).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, seq: &Sequence) -> f64 {
        self.probs[lex_index(seq, self.vocab_size)]
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn tv(&self, other: &ExactDistribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Per-position marginals, row-major `positions x vocab_size`.
    pub fn marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.positions * self.vocab_size];
        let mut tokens = vec![0usize; self.positions];
        for &p in &self.probs {
            for (m, &t) in tokens.iter().enumerate() {
                out[m * self.vocab_size + t] += p;
            }
            for m in (0..self.positions).rev() {
                tokens[m] += 1;
                if tokens[m] < self.vocab_size {
                    break;
                }
                tokens[m] = 0;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMode {
    /// `p*(x) ∝ p0(x) u(f(x))`.
    Kl,
    /// `p*(x) ∝ p0(x) exp(u(f(x)) / temperature)`.
    Preference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    pub utility: UtilityKind,
    pub threshold: f64,
    pub temperature: f64,
    pub mode: TargetMode,
}

/// Exact utility-tilted target for a noiseless objective.
pub fn exact_target(
    positions: usize,
    vocab_size: usize,
    mut objective: impl FnMut(&Sequence) -> f64,
    prior: &Prior,
    spec: &TargetSpec,
) -> Result<ExactDistribution, OracleError> {
    let domain = enumerate_domain(positions, vocab_size)?;
    let mut log_w = Vec::with_capacity(domain.len());
    for s in &domain {
        let u = utility(objective(s), spec.threshold, spec.utility);
        let lp0 = prior.log_prob(s);
        log_w.push(match spec.mode {
            TargetMode::Kl => {
                if u < 0.0 {
                    return Err(OracleError::NegativeUtility(u));
                }
                lp0 + crate::math::ln(u)
            }
            TargetMode::Preference => lp0 + u / spec.temperature,
        });
    }
    ExactDistribution::from_log_weights(positions, vocab_size, &log_w)
}

/// [`exact_target`] for a task's noiseless objective.
pub fn exact_target_for_task(task: &Task, prior: &Prior, spec: &TargetSpec) -> Result<ExactDistribution, OracleError> {
    let domain = enumerate_domain(task.length(), task.vocab_size())?;
    let values = domain
        .iter()
        .map(|s| task.evaluate(s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut it = values.into_iter();
    exact_target(task.length(), task.vocab_size(), |_| it.next().unwrap_or(f64::NAN), prior, spec)
}

/// TV distance between a tabulated distribution and a proposal.
pub fn tv_distance(p: &ExactDistribution, q: &MeanFieldParams) -> Result<f64, OracleError> {
    Ok(p.tv(&ExactDistribution::from_params(q)?))
}

/// Lexicographically first maximizer and its value.
pub fn exhaustive_argmax(
    positions: usize,
    vocab_size: usize,
    mut objective: impl FnMut(&Sequence) -> f64,
) -> Result<(Sequence, f64), OracleError> {
    let mut best: Option<(Sequence, f64)> = None;
    for s in enumerate_domain(positions, vocab_size)? {
        let y = objective(&s);
        if best.as_ref().is_none_or(|(_, b)| y > *b) {
            best = Some((s, y));
        }
    }
    best.ok_or(OracleError::AllZeroMass)
}

pub fn exhaustive_argmax_task(task: &Task) -> Result<(Sequence, f64), OracleError> {
    let mut err = None;
    let out = exhaustive_argmax(task.length(), task.vocab_size(), |s| match task.evaluate(s) {
        Ok(y) => y,
        Err(e) => {
            err.get_or_insert(e);
            f64::NEG_INFINITY
        }
    })?;
    match err {
        Some(e) => Err(e.into()),
        None => Ok(out),
    }
}
