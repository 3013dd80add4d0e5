//! Ehrlich closed-form sequence test functions.
//!
//! A function is defined by a banned-transition mask over the alphabet and
//! `K` spaced motifs. Sequences containing a banned adjacent pair score -1.
//! Otherwise the score is the product over motifs of the quantized best
//! fraction of motif elements present at the prescribed spacing.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BlackBoxError;
use crate::types::Sequence;

/// One spaced motif: `elements[j]` must sit at `start + offset(j)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Motif {
    pub elements: Vec<u8>,
    /// `elements.len() - 1` positive gaps between consecutive elements.
    pub spacing: Vec<usize>,
}

impl Motif {
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.elements.len());
        let mut at = 0;
        out.push(0);
        for &g in &self.spacing {
            at += g;
            out.push(at);
        }
        out
    }

    /// Number of positions covered from first to last element.
    pub fn span(&self) -> usize {
        1 + self.spacing.iter().sum::<usize>()
    }

    /// Largest number of elements matched over all in-bounds start positions.
    pub fn best_matches(&self, tokens: &[u8]) -> usize {
        let span = self.span();
        if span > tokens.len() {
            return 0;
        }
        let offsets = self.offsets();
        (0..=tokens.len() - span)
            .map(|start| {
                offsets
                    .iter()
                    .zip(&self.elements)
                    .filter(|(&o, &e)| tokens[start + o] == e)
                    .count()
            })
            .max()
            .unwrap_or(0)
    }
}

/// Construction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EhrlichConfig {
    pub length: usize,
    pub num_motifs: usize,
    pub motif_length: usize,
    pub quantization: usize,
    pub vocab_size: usize,
    pub max_gap: usize,
    pub ban_probability: f64,
    pub retry_budget: usize,
}

impl EhrlichConfig {
    pub fn new(length: usize, num_motifs: usize, motif_length: usize, quantization: usize) -> Self {
        Self {
            length,
            num_motifs,
            motif_length,
            quantization,
            vocab_size: 20,
            max_gap: 2,
            ban_probability: 0.25,
            retry_budget: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EhrlichParts", into = "EhrlichParts")]
pub struct EhrlichFunction {
    length: usize,
    vocab_size: usize,
    /// Row-major `vocab_size x vocab_size`; `allowed[a * V + b]` permits `a -> b`.
    allowed: Vec<bool>,
    motifs: Vec<Motif>,
    quantization: usize,
    certificate: Sequence,
}

/// Serialized form, validated on the way in.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct EhrlichParts {
    length: usize,
    vocab_size: usize,
    transition_mask: Vec<Vec<bool>>,
    motifs: Vec<Motif>,
    quantization: usize,
    certificate: Sequence,
}

impl From<EhrlichFunction> for EhrlichParts {
    fn from(f: EhrlichFunction) -> Self {
        let v = f.vocab_size;
        Self {
            length: f.length,
            vocab_size: v,
            transition_mask: f.allowed.chunks(v).map(<[bool]>::to_vec).collect(),
            motifs: f.motifs,
            quantization: f.quantization,
            certificate: f.certificate,
        }
    }
}

impl TryFrom<EhrlichParts> for EhrlichFunction {
    type Error = BlackBoxError;

    fn try_from(p: EhrlichParts) -> Result<Self, Self::Error> {
        if p.transition_mask.len() != p.vocab_size
            || p.transition_mask.iter().any(|r| r.len() != p.vocab_size)
        {
            return Err(BlackBoxError::InvalidParameters(format!(
                "transition mask must be {0}x{0}",
                p.vocab_size
            )));
        }
        let allowed = p.transition_mask.concat();
        EhrlichFunction::from_parts(p.length, p.vocab_size, allowed, p.motifs, p.quantization, p.certificate)
    }
}

fn check_shape(length: usize, num_motifs: usize, motif_length: usize, quantization: usize, vocab_size: usize) -> Result<(), BlackBoxError> {
    let bad = |m: &str| Err(BlackBoxError::InvalidParameters(m.into()));
    if !(2..=64).contains(&vocab_size) {
        return bad("vocab size must be in [2, 64]");
    }
    if length == 0 || num_motifs == 0 || motif_length == 0 {
        return bad("length, motif count and motif length must be positive");
    }
    if quantization == 0 || quantization > motif_length || motif_length % quantization != 0 {
        return bad("quantization must divide the motif length");
    }
    Ok(())
}

impl EhrlichFunction {
    /// Samples a random instance that provably has a value-1 sequence.
    pub fn new<R: Rng + ?Sized>(cfg: &EhrlichConfig, rng: &mut R) -> Result<Self, BlackBoxError> {
        check_shape(cfg.length, cfg.num_motifs, cfg.motif_length, cfg.quantization, cfg.vocab_size)?;
        if cfg.max_gap == 0 || !(0.0..1.0).contains(&cfg.ban_probability) {
            return Err(BlackBoxError::InvalidParameters("max_gap must be positive and ban probability in [0, 1)".into()));
        }
        // even with unit gaps the motifs must fit side by side
        if cfg.num_motifs * cfg.motif_length > cfg.length {
            return Err(BlackBoxError::ConstructionFailed { attempts: 0 });
        }
        let v = cfg.vocab_size;
        for _ in 0..cfg.retry_budget {
            let allowed = sample_mask(v, cfg.ban_probability, rng);
            let motifs: Vec<Motif> = (0..cfg.num_motifs)
                .map(|_| Motif {
                    elements: (0..cfg.motif_length).map(|_| rng.random_range(0..v as u8)).collect(),
                    spacing: (1..cfg.motif_length).map(|_| rng.random_range(1..=cfg.max_gap)).collect(),
                })
                .collect();
            let total_span: usize = motifs.iter().map(Motif::span).sum();
            if total_span > cfg.length {
                continue;
            }
            if let Some(certificate) = place_motifs(cfg.length, v, &allowed, &motifs, rng) {
                return Ok(Self {
                    length: cfg.length,
                    vocab_size: v,
                    allowed,
                    motifs,
                    quantization: cfg.quantization,
                    certificate,
                });
            }
        }
        Err(BlackBoxError::ConstructionFailed {
            attempts: cfg.retry_budget,
        })
    }

    /// Assembles an instance from explicit parts, checking every invariant.
    pub fn from_parts(
        length: usize,
        vocab_size: usize,
        allowed: Vec<bool>,
        motifs: Vec<Motif>,
        quantization: usize,
        certificate: Sequence,
    ) -> Result<Self, BlackBoxError> {
        let motif_length = motifs.first().map_or(0, |m| m.elements.len());
        check_shape(length, motifs.len(), motif_length, quantization, vocab_size)?;
        if allowed.len() != vocab_size * vocab_size {
            return Err(BlackBoxError::InvalidParameters("mask size".into()));
        }
        for m in &motifs {
            if m.elements.len() != motif_length
                || m.spacing.len() + 1 != motif_length
                || m.spacing.contains(&0)
                || m.elements.iter().any(|&e| e as usize >= vocab_size)
            {
                return Err(BlackBoxError::InvalidParameters("malformed motif".into()));
            }
            if m.span() > length {
                return Err(BlackBoxError::InvalidParameters("motif longer than sequence".into()));
            }
        }
        if !strongly_connected(vocab_size, &allowed) {
            return Err(BlackBoxError::NotErgodic);
        }
        let f = Self {
            length,
            vocab_size,
            allowed,
            motifs,
            quantization,
            certificate,
        };
        if f.evaluate(&f.certificate)? != 1.0 {
            return Err(BlackBoxError::BadCertificate);
        }
        Ok(f)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn motifs(&self) -> &[Motif] {
        &self.motifs
    }

    pub fn quantization(&self) -> usize {
        self.quantization
    }

    /// A sequence attaining the maximum value 1.
    pub fn certificate(&self) -> &Sequence {
        &self.certificate
    }

    pub fn is_allowed(&self, from: u8, to: u8) -> bool {
        self.allowed[from as usize * self.vocab_size + to as usize]
    }

    pub fn is_feasible(&self, tokens: &[u8]) -> bool {
        tokens.windows(2).all(|w| self.is_allowed(w[0], w[1]))
    }

    /// Quantized presence `floor(q * matches / L) / q` of motif `k`.
    pub fn motif_presence(&self, k: usize, tokens: &[u8]) -> f64 {
        let motif = &self.motifs[k];
        let l = motif.elements.len();
        let steps = self.quantization * motif.best_matches(tokens) / l;
        steps as f64 / self.quantization as f64
    }

    pub fn evaluate(&self, seq: &Sequence) -> Result<f64, BlackBoxError> {
        seq.validate(self.length, self.vocab_size)?;
        let tokens = seq.tokens();
        if !self.is_feasible(tokens) {
            return Ok(-1.0);
        }
        Ok((0..self.motifs.len()).map(|k| self.motif_presence(k, tokens)).product())
    }
}

fn sample_mask<R: Rng + ?Sized>(v: usize, ban_probability: f64, rng: &mut R) -> Vec<bool> {
    let mut allowed: Vec<bool> = (0..v * v).map(|_| rng.random::<f64>() >= ban_probability).collect();
    // re-add a random Hamiltonian cycle so the mask is strongly connected
    let mut order: Vec<usize> = (0..v).collect();
    order.shuffle(rng);
    for i in 0..v {
        let (a, b) = (order[i], order[(i + 1) % v]);
        allowed[a * v + b] = true;
    }
    allowed
}

fn successors(v: usize, allowed: &[bool], a: usize) -> u64 {
    (0..v).filter(|&b| allowed[a * v + b]).fold(0u64, |m, b| m | (1 << b))
}

fn strongly_connected(v: usize, allowed: &[bool]) -> bool {
    let reach = |forward: bool| {
        let mut seen = 1u64;
        let mut stack = vec![0usize];
        while let Some(a) = stack.pop() {
            for b in 0..v {
                let edge = if forward { allowed[a * v + b] } else { allowed[b * v + a] };
                if edge && seen & (1 << b) == 0 {
                    seen |= 1 << b;
                    stack.push(b);
                }
            }
        }
        seen
    };
    let full = if v == 64 { u64::MAX } else { (1u64 << v) - 1 };
    reach(true) == full && reach(false) == full
}

fn pick_bit<R: Rng + ?Sized>(set: u64, rng: &mut R) -> u8 {
    let n = set.count_ones();
    let mut k = rng.random_range(0..n);
    let mut s = set;
    loop {
        let b = s.trailing_zeros();
        if k == 0 {
            return b as u8;
        }
        k -= 1;
        s &= s - 1;
    }
}

/// Lays the motifs out in disjoint windows and fills the free positions with
/// a random feasible completion, if one exists.
fn place_motifs<R: Rng + ?Sized>(
    length: usize,
    v: usize,
    allowed: &[bool],
    motifs: &[Motif],
    rng: &mut R,
) -> Option<Sequence> {
    let total_span: usize = motifs.iter().map(Motif::span).sum();
    let slack = length - total_span;
    // distribute slack over the K+1 gaps around the motifs
    let mut gaps = vec![0usize; motifs.len() + 1];
    for _ in 0..slack {
        let k = rng.random_range(0..gaps.len());
        gaps[k] += 1;
    }
    let mut fixed: Vec<Option<u8>> = vec![None; length];
    let mut at = 0;
    for (k, m) in motifs.iter().enumerate() {
        at += gaps[k];
        for (o, &e) in m.offsets().iter().zip(&m.elements) {
            fixed[at + o] = Some(e);
        }
        at += m.span();
    }

    let succ: Vec<u64> = (0..v).map(|a| successors(v, allowed, a)).collect();
    let all = if v == 64 { u64::MAX } else { (1u64 << v) - 1 };
    let constraint = |i: usize| fixed[i].map_or(all, |t| 1u64 << t);
    let mut reach = vec![0u64; length];
    reach[0] = constraint(0);
    for i in 1..length {
        let mut next = 0u64;
        let mut s = reach[i - 1];
        while s != 0 {
            next |= succ[s.trailing_zeros() as usize];
            s &= s - 1;
        }
        reach[i] = next & constraint(i);
        if reach[i] == 0 {
            return None;
        }
    }
    let mut tokens = vec![0u8; length];
    tokens[length - 1] = pick_bit(reach[length - 1], rng);
    for i in (0..length - 1).rev() {
        let next = tokens[i + 1] as usize;
        let preds = (0..v)
            .filter(|&a| reach[i] & (1 << a) != 0 && allowed[a * v + next])
            .fold(0u64, |m, a| m | (1 << a));
        tokens[i] = pick_bit(preds, rng);
    }
    Some(Sequence::from_tokens(tokens))
}
