//! Training losses for the proposal, each returning its value and the exact
//! gradient with respect to the logits.
//!
//! Two families are provided:
//!
//! * preference losses on pairs of points with distinct utilities: the
//!   Bradley-Terry log-sigmoid loss on prior-relative log-density differences
//!   (PL) and its label-flip debiased form (rPL);
//! * utility-weighted likelihood losses on single points: forward KL (fKL)
//!   and balanced forward KL (bfKL), which adds `q(x_i) / q_sampled(x_i)` to
//!   penalize mass on observed zero-utility points.
//!
//! Values are sums over pairs or points, not means.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{exp, ln, sigmoid, softplus};
use crate::proposal::{MeanFieldParams, Prior};
use crate::types::Sequence;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("no preference pairs with distinct utilities")]
    EmptyPairs,
    #[error("no training points")]
    EmptyData,
    #[error("p_flip must lie in [0, 0.5), got {0}")]
    InvalidFlip(f64),
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("utility {utility} of point {index} is negative")]
    NegativeUtility { index: usize, utility: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Pl,
    Rpl,
    Fkl,
    Bfkl,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Pl => "pl",
            LossKind::Rpl => "rpl",
            LossKind::Fkl => "fkl",
            LossKind::Bfkl => "bfkl",
        }
    }

    pub fn is_preference(&self) -> bool {
        matches!(self, LossKind::Pl | LossKind::Rpl)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Scale on the log-ratio difference inside the sigmoid (PL, rPL).
    pub temperature: f64,
    /// Label flip probability (rPL).
    pub p_flip: f64,
    /// Multiply fKL/bfKL terms by `p0(x) / q_sampled(x)`.
    pub use_importance_weights: bool,
}

impl LossSpec {
    pub fn new(kind: LossKind) -> Self {
        Self {
            kind,
            temperature: 1.0,
            p_flip: 0.1,
            use_importance_weights: false,
        }
    }

    pub fn validate(&self) -> Result<(), LossError> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(LossError::InvalidTemperature(self.temperature));
        }
        if !(0.0..0.5).contains(&self.p_flip) {
            return Err(LossError::InvalidFlip(self.p_flip));
        }
        Ok(())
    }
}

/// A point with its current utility and the log-density it was sampled with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPoint<'a> {
    pub sequence: &'a Sequence,
    pub utility: f64,
    pub sampling_logp: f64,
}

/// Two points with distinct utilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreferencePair<'a> {
    pub x1: &'a Sequence,
    pub x2: &'a Sequence,
    pub u1: f64,
    pub u2: f64,
}

impl PreferencePair<'_> {
    /// `sign(u1 - u2)`; never zero because ties are not paired.
    pub fn sign(&self) -> f64 {
        if self.u1 > self.u2 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            x1: self.x2,
            x2: self.x1,
            u1: self.u2,
            u2: self.u1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Shuffles the points, pairs neighbours and drops pairs with equal utility.
/// An odd trailing point is left out.
pub fn make_pairs<'a, R: Rng + ?Sized>(points: &[ScoredPoint<'a>], rng: &mut R) -> Vec<PreferencePair<'a>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(rng);
    order
        .chunks_exact(2)
        .filter_map(|c| {
            let (a, b) = (&points[c[0]], &points[c[1]]);
            (a.utility != b.utility).then_some(PreferencePair {
                x1: a.sequence,
                x2: b.sequence,
                u1: a.utility,
                u2: b.utility,
            })
        })
        .collect()
}

fn add_onehot(grad: &mut [f64], vocab_size: usize, seq: &Sequence, scale: f64) {
    for (m, &t) in seq.tokens().iter().enumerate() {
        grad[m * vocab_size + t as usize] += scale;
    }
}

/// Shared pairwise pass: `coeffs(z)` returns (loss, dloss/dz) per pair.
fn pairwise_loss(
    params: &MeanFieldParams,
    prior: &Prior,
    pairs: &[PreferencePair<'_>],
    temperature: f64,
    coeffs: impl Fn(f64) -> (f64, f64),
) -> Result<LossValue, LossError> {
    if pairs.is_empty() {
        return Err(LossError::EmptyPairs);
    }
    let v = params.vocab_size();
    let norms = params.log_normalizers();
    let mut grad = vec![0.0; params.logits().len()];
    let mut value = 0.0;
    for pair in pairs {
        let r1 = params.log_prob_with(&norms, pair.x1) - prior.log_prob(pair.x1);
        let r2 = params.log_prob_with(&norms, pair.x2) - prior.log_prob(pair.x2);
        let scale = temperature * pair.sign();
        let (loss, dz) = coeffs(scale * (r1 - r2));
        value += loss;
        // d(r1 - r2) = onehot(x1) - onehot(x2); the softmax terms cancel
        add_onehot(&mut grad, v, pair.x1, dz * scale);
        add_onehot(&mut grad, v, pair.x2, -dz * scale);
    }
    Ok(LossValue { value, grad })
}

/// Bradley-Terry preference loss `sum -log sigmoid(t * sign(du) * (r1 - r2))`
/// with `r = log q - log p0`.
pub fn pl_loss(
    params: &MeanFieldParams,
    prior: &Prior,
    pairs: &[PreferencePair<'_>],
    temperature: f64,
) -> Result<LossValue, LossError> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(LossError::InvalidTemperature(temperature));
    }
    pairwise_loss(params, prior, pairs, temperature, |z| (softplus(-z), -sigmoid(-z)))
}

/// Flip-robust preference loss
/// `[(1 - p) l(du) - p l(-du)] / (1 - 2p)` summed over pairs.
pub fn rpl_loss(
    params: &MeanFieldParams,
    prior: &Prior,
    pairs: &[PreferencePair<'_>],
    temperature: f64,
    p_flip: f64,
) -> Result<LossValue, LossError> {
    if !(0.0..0.5).contains(&p_flip) {
        return Err(LossError::InvalidFlip(p_flip));
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(LossError::InvalidTemperature(temperature));
    }
    let norm = 1.0 - 2.0 * p_flip;
    pairwise_loss(params, prior, pairs, temperature, |z| {
        // l(du) = softplus(-z), l(-du) = softplus(z)
        let value = ((1.0 - p_flip) * softplus(-z) - p_flip * softplus(z)) / norm;
        let dz = (-(1.0 - p_flip) * sigmoid(-z) - p_flip * sigmoid(z)) / norm;
        (value, dz)
    })
}

fn check_points(points: &[ScoredPoint<'_>]) -> Result<(), LossError> {
    if points.is_empty() {
        return Err(LossError::EmptyData);
    }
    match points
        .iter()
        .enumerate()
        .find(|(_, p)| !(p.utility >= 0.0))
    {
        Some((index, p)) => Err(LossError::NegativeUtility {
            index,
            utility: p.utility,
        }),
        None => Ok(()),
    }
}

fn kl_loss(
    params: &MeanFieldParams,
    points: &[ScoredPoint<'_>],
    prior: &Prior,
    use_importance_weights: bool,
    balanced: bool,
) -> Result<LossValue, LossError> {
    check_points(points)?;
    let v = params.vocab_size();
    let norms = params.log_normalizers();
    let mut grad = vec![0.0; params.logits().len()];
    let mut value = 0.0;
    // total coefficient multiplying -softmax in every row
    let mut mass = 0.0;
    for p in points {
        let logq = params.log_prob_with(&norms, p.sequence);
        let w = if use_importance_weights {
            exp(prior.log_prob(p.sequence) - p.sampling_logp)
        } else {
            1.0
        };
        let c = w * p.utility;
        if c != 0.0 {
            value -= c * logq;
            add_onehot(&mut grad, v, p.sequence, -c);
            mass -= c;
        }
        if balanced {
            let ratio = exp(logq - p.sampling_logp);
            value += ratio;
            add_onehot(&mut grad, v, p.sequence, ratio);
            mass += ratio;
        }
    }
    if mass != 0.0 {
        let probs = params.probabilities();
        for (g, p) in grad.iter_mut().zip(&probs) {
            *g -= mass * p;
        }
    }
    Ok(LossValue { value, grad })
}

/// Forward KL `sum -w_i u_i log q(x_i)`, `w_i = p0(x_i) / q_sampled(x_i)` or 1.
pub fn fkl_loss(
    params: &MeanFieldParams,
    points: &[ScoredPoint<'_>],
    prior: &Prior,
    use_importance_weights: bool,
) -> Result<LossValue, LossError> {
    kl_loss(params, points, prior, use_importance_weights, false)
}

/// Forward KL plus `sum q(x_i) / q_sampled(x_i)`.
pub fn bfkl_loss(
    params: &MeanFieldParams,
    points: &[ScoredPoint<'_>],
    prior: &Prior,
    use_importance_weights: bool,
) -> Result<LossValue, LossError> {
    kl_loss(params, points, prior, use_importance_weights, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    Quadratic,
    Exponential,
}

/// Annealed factor `lambda0 * ln(n)^2 / n`; zero at `n = 1`, vanishing as `n` grows.
pub fn reg_lambda(n: f64, lambda0: f64) -> f64 {
    let l = ln(n);
    lambda0 * l * l / n
}

/// `lambda_n ||theta - theta0||^2` or `lambda_n exp(||theta - theta0||^2)`.
pub fn regularizer(
    theta: &MeanFieldParams,
    theta0: &MeanFieldParams,
    n: f64,
    lambda0: f64,
    kind: RegularizerKind,
) -> LossValue {
    let lambda = reg_lambda(n, lambda0);
    let diff: Vec<f64> = theta
        .logits()
        .iter()
        .zip(theta0.logits())
        .map(|(a, b)| a - b)
        .collect();
    if lambda == 0.0 {
        return LossValue {
            value: 0.0,
            grad: vec![0.0; diff.len()],
        };
    }
    let sq: f64 = diff.iter().map(|d| d * d).sum();
    let (value, factor) = match kind {
        RegularizerKind::Quadratic => (lambda * sq, 2.0 * lambda),
        RegularizerKind::Exponential => {
            let e = exp(sq);
            (lambda * e, 2.0 * lambda * e)
        }
    };
    LossValue {
        value,
        grad: diff.into_iter().map(|d| factor * d).collect(),
    }
}

/// Prepared training inputs for one loss kind.
#[derive(Debug, Clone)]
pub enum TrainingData<'a> {
    Pairs(Vec<PreferencePair<'a>>),
    Points(Vec<ScoredPoint<'a>>),
}

impl<'a> TrainingData<'a> {
    /// Builds pairs for preference losses, points otherwise, and checks the
    /// inputs the loss will need.
    pub fn prepare<R: Rng + ?Sized>(
        spec: &LossSpec,
        points: Vec<ScoredPoint<'a>>,
        rng: &mut R,
    ) -> Result<Self, LossError> {
        spec.validate()?;
        if spec.kind.is_preference() {
            let pairs = make_pairs(&points, rng);
            if pairs.is_empty() {
                return Err(LossError::EmptyPairs);
            }
            Ok(TrainingData::Pairs(pairs))
        } else {
            check_points(&points)?;
            Ok(TrainingData::Points(points))
        }
    }
}

/// Dispatches to the loss named by `spec`.
pub fn evaluate(
    spec: &LossSpec,
    params: &MeanFieldParams,
    prior: &Prior,
    data: &TrainingData<'_>,
) -> Result<LossValue, LossError> {
    match (spec.kind, data) {
        (LossKind::Pl, TrainingData::Pairs(p)) => pl_loss(params, prior, p, spec.temperature),
        (LossKind::Rpl, TrainingData::Pairs(p)) => rpl_loss(params, prior, p, spec.temperature, spec.p_flip),
        (LossKind::Fkl, TrainingData::Points(p)) => fkl_loss(params, p, prior, spec.use_importance_weights),
        (LossKind::Bfkl, TrainingData::Points(p)) => bfkl_loss(params, p, prior, spec.use_importance_weights),
        (_, TrainingData::Pairs(_)) => Err(LossError::EmptyData),
        (_, TrainingData::Points(_)) => Err(LossError::EmptyPairs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proposal::prior_uniform;
    use crate::rng::rng_stream;

    fn seqs(n: usize, m: usize, v: u8, seed: u64) -> Vec<Sequence> {
        let mut rng = rng_stream(seed, "seqs", 0);
        (0..n)
            .map(|_| Sequence::from_tokens((0..m).map(|_| rng.random_range(0..v)).collect()))
            .collect()
    }

    fn points<'a>(xs: &'a [Sequence], us: &[f64]) -> Vec<ScoredPoint<'a>> {
        xs.iter()
            .zip(us)
            .map(|(s, &u)| ScoredPoint {
                sequence: s,
                utility: u,
                sampling_logp: -3.0,
            })
            .collect()
    }

    #[test]
    fn pairing_rules() {
        let xs = seqs(5, 2, 3, 0);
        let mut rng = rng_stream(0, "pairs", 0);
        assert_eq!(make_pairs(&points(&xs[..4], &[1.0, 2.0, 3.0, 4.0]), &mut rng).len(), 2);
        assert!(make_pairs(&points(&xs[..4], &[1.0; 4]), &mut rng).is_empty());
        assert_eq!(make_pairs(&points(&xs, &[1.0, 2.0, 3.0, 4.0, 5.0]), &mut rng).len(), 2);
        for p in make_pairs(&points(&xs, &[1.0, 2.0, 3.0, 4.0, 5.0]), &mut rng) {
            assert_eq!(p.sign(), if p.u1 > p.u2 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn pl_at_prior_is_n_ln2() {
        let xs = seqs(8, 3, 4, 1);
        let us = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let pts = points(&xs, &us);
        let pairs = make_pairs(&pts, &mut rng_stream(1, "p", 0));
        let prior = prior_uniform(3, 4);
        let r = pl_loss(&prior.as_params(), &prior, &pairs, 1.0).unwrap();
        assert!((r.value - 4.0 * core::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(pl_loss(&prior.as_params(), &prior, &[], 1.0), Err(LossError::EmptyPairs));
    }

    #[test]
    fn pl_is_swap_invariant() {
        let xs = seqs(10, 3, 4, 2);
        let us: Vec<f64> = (0..10).map(|i| (i * 7 % 10) as f64).collect();
        let pts = points(&xs, &us);
        let pairs = make_pairs(&pts, &mut rng_stream(1, "p", 0));
        let swapped: Vec<_> = pairs.iter().map(PreferencePair::swapped).collect();
        let params = MeanFieldParams::random(3, 4, 1.0, &mut rng_stream(5, "t", 0));
        let prior = prior_uniform(3, 4);
        let a = pl_loss(&params, &prior, &pairs, 0.7).unwrap();
        let b = pl_loss(&params, &prior, &swapped, 0.7).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
        for (x, y) in a.grad.iter().zip(&b.grad) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rpl_reduces_to_pl_and_follows_formula() {
        let xs = seqs(12, 3, 4, 3);
        let us: Vec<f64> = (0..12).map(|i| (i * 5 % 12) as f64).collect();
        let pts = points(&xs, &us);
        let pairs = make_pairs(&pts, &mut rng_stream(2, "p", 0));
        let params = MeanFieldParams::random(3, 4, 1.0, &mut rng_stream(6, "t", 0));
        let prior = prior_uniform(3, 4);
        let pl = pl_loss(&params, &prior, &pairs, 1.3).unwrap();
        let rpl0 = rpl_loss(&params, &prior, &pairs, 1.3, 0.0).unwrap();
        assert!((pl.value - rpl0.value).abs() < 1e-12);

        let rpl = rpl_loss(&params, &prior, &pairs, 1.3, 0.25).unwrap();
        let mut expect = 0.0;
        for p in &pairs {
            let fwd = pl_loss(&params, &prior, core::slice::from_ref(p), 1.3).unwrap().value;
            let rev = pl_loss(&params, &prior, &[p.swapped()], 1.3).unwrap().value;
            // reversing the preference equals swapping the pair's roles in the sign
            let flipped = PreferencePair { u1: p.u2, u2: p.u1, ..*p };
            let rev2 = pl_loss(&params, &prior, &[flipped], 1.3).unwrap().value;
            assert!((rev - fwd).abs() < 1e-12);
            expect += (0.75 * fwd - 0.25 * rev2) / 0.5;
        }
        assert!((rpl.value - expect).abs() < 1e-10);
        assert_eq!(rpl_loss(&params, &prior, &pairs, 1.0, 0.5), Err(LossError::InvalidFlip(0.5)));
    }

    #[test]
    fn zero_utility_points_are_inert_in_fkl() {
        let xs = seqs(6, 3, 4, 4);
        let params = MeanFieldParams::random(3, 4, 1.0, &mut rng_stream(7, "t", 0));
        let prior = prior_uniform(3, 4);
        let with = fkl_loss(&params, &points(&xs, &[1.0, 0.0, 2.0, 0.0, 0.5, 0.0]), &prior, false).unwrap();
        let kept: Vec<Sequence> = [0, 2, 4].iter().map(|&i| xs[i].clone()).collect();
        let without = fkl_loss(&params, &points(&kept, &[1.0, 2.0, 0.5]), &prior, false).unwrap();
        assert!((with.value - without.value).abs() < 1e-12);
        for (a, b) in with.grad.iter().zip(&without.grad) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_importance_weights_when_densities_match() {
        let xs = seqs(6, 3, 4, 5);
        let params = MeanFieldParams::random(3, 4, 1.0, &mut rng_stream(8, "t", 0));
        let prior = prior_uniform(3, 4);
        let uniform_logp = prior.log_prob(&xs[0]);
        let pts: Vec<ScoredPoint<'_>> = xs
            .iter()
            .enumerate()
            .map(|(i, s)| ScoredPoint {
                sequence: s,
                utility: i as f64,
                sampling_logp: uniform_logp,
            })
            .collect();
        let a = fkl_loss(&params, &pts, &prior, true).unwrap();
        let b = fkl_loss(&params, &pts, &prior, false).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
        let nll: f64 = pts.iter().map(|p| -p.utility * params.log_prob(p.sequence)).sum();
        assert!((a.value - nll).abs() < 1e-12);
    }

    #[test]
    fn bfkl_minus_fkl_is_density_ratio_sum() {
        let xs = seqs(9, 3, 4, 6);
        let us: Vec<f64> = (0..9).map(|i| (i % 3) as f64).collect();
        let params = MeanFieldParams::random(3, 4, 1.0, &mut rng_stream(9, "t", 0));
        let prior = prior_uniform(3, 4);
        let pts = points(&xs, &us);
        let f = fkl_loss(&params, &pts, &prior, false).unwrap();
        let b = bfkl_loss(&params, &pts, &prior, false).unwrap();
        let ratio: f64 = pts.iter().map(|p| exp(params.log_prob(p.sequence) - p.sampling_logp)).sum();
        assert!((b.value - f.value - ratio).abs() < 1e-10);
    }

    #[test]
    fn bfkl_pushes_down_zero_utility_point() {
        let xs = seqs(1, 3, 4, 7);
        let params = MeanFieldParams::random(3, 4, 1.0, &mut rng_stream(10, "t", 0));
        let prior = prior_uniform(3, 4);
        let pts = points(&xs, &[0.0]);
        let b = bfkl_loss(&params, &pts, &prior, false).unwrap();
        let f = fkl_loss(&params, &pts, &prior, false).unwrap();
        assert!(f.grad.iter().all(|&g| g == 0.0));
        // descent direction lowers log q at the point
        let dir: f64 = b
            .grad
            .iter()
            .zip(params.grad_log_prob(&xs[0]))
            .map(|(g, d)| -g * d)
            .sum();
        assert!(dir < 0.0);
    }

    #[test]
    fn negative_utility_rejected() {
        let xs = seqs(2, 3, 4, 8);
        let params = MeanFieldParams::zeros(3, 4);
        let prior = prior_uniform(3, 4);
        assert!(matches!(
            fkl_loss(&params, &points(&xs, &[1.0, -0.5]), &prior, false),
            Err(LossError::NegativeUtility { index: 1, .. })
        ));
        assert_eq!(bfkl_loss(&params, &[], &prior, false), Err(LossError::EmptyData));
    }

    #[test]
    fn kl_is_order_invariant() {
        let xs = seqs(7, 3, 4, 9);
        let us: Vec<f64> = (0..7).map(|i| i as f64 * 0.3).collect();
        let params = MeanFieldParams::random(3, 4, 1.0, &mut rng_stream(11, "t", 0));
        let prior = prior_uniform(3, 4);
        let pts = points(&xs, &us);
        let mut rev = pts.clone();
        rev.reverse();
        for balanced in [false, true] {
            let a = kl_loss(&params, &pts, &prior, true, balanced).unwrap();
            let b = kl_loss(&params, &rev, &prior, true, balanced).unwrap();
            assert!((a.value - b.value).abs() < 1e-10);
        }
    }

    #[test]
    fn regularizer_examples() {
        let theta0 = MeanFieldParams::random(2, 3, 1.0, &mut rng_stream(1, "t", 0));
        let theta = MeanFieldParams::random(2, 3, 1.0, &mut rng_stream(2, "t", 0));
        let r = regularizer(&theta, &theta0, 1.0, 0.1, RegularizerKind::Quadratic);
        assert_eq!(r.value, 0.0);
        assert!(r.grad.iter().all(|&g| g == 0.0));
        let e = core::f64::consts::E;
        assert!((reg_lambda(e, 0.1) - 0.1 / e).abs() < 1e-15);
        let r = regularizer(&theta0, &theta0, 50.0, 0.1, RegularizerKind::Exponential);
        assert!((r.value - reg_lambda(50.0, 0.1)).abs() < 1e-15);
        assert!(r.grad.iter().all(|&g| g == 0.0));
    }
}
