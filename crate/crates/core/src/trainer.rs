//! Full-batch Adam fitting of the proposal logits.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::losses::{self, LossError, LossSpec, RegularizerKind, ScoredPoint, TrainingData};
use crate::math::sqrt;
use crate::proposal::{MeanFieldParams, Prior};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("loss became non-finite at epoch {epoch} (value {value}, grad norm {grad_norm})")]
    NonFiniteLoss { epoch: usize, value: f64, grad_norm: f64 },
    #[error("invalid training config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Global gradient norm ceiling; non-positive disables clipping.
    pub grad_clip_norm: f64,
    /// Start each fit from the current logits instead of the anchor.
    pub warm_start: bool,
    pub regularizer: RegularizerKind,
    pub lambda0: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 200,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            grad_clip_norm: 10.0,
            warm_start: true,
            regularizer: RegularizerKind::Quadratic,
            lambda0: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::InvalidConfig("learning_rate must be positive"));
        }
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(TrainError::InvalidConfig("Adam betas must lie in [0, 1)"));
        }
        if !(self.adam_eps > 0.0) {
            return Err(TrainError::InvalidConfig("adam_eps must be positive"));
        }
        if !(self.lambda0.is_finite() && self.lambda0 >= 0.0) {
            return Err(TrainError::InvalidConfig("lambda0 must be nonnegative"));
        }
        Ok(())
    }
}

/// Adam first/second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u32,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamState {
    pub fn new(len: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn step_count(&self) -> u32 {
        self.step
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - libm::pow(self.beta1, t as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, t as f64);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (sqrt(v_hat) + self.eps);
        }
    }
}

/// Per-fit diagnostics exported with each round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    /// Pre-clipping gradient norm at every epoch.
    pub grad_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub params: MeanFieldParams,
    pub diagnostics: FitDiagnostics,
}

fn norm(xs: &[f64]) -> f64 {
    sqrt(xs.iter().map(|x| x * x).sum())
}

/// Loss plus regularizer at `params`.
pub fn objective(
    spec: &LossSpec,
    params: &MeanFieldParams,
    prior: &Prior,
    data: &TrainingData<'_>,
    theta0: &MeanFieldParams,
    n: f64,
    config: &TrainConfig,
) -> Result<(f64, Vec<f64>), LossError> {
    let mut loss = losses::evaluate(spec, params, prior, data)?;
    let reg = losses::regularizer(params, theta0, n, config.lambda0, config.regularizer);
    loss.value += reg.value;
    for (g, r) in loss.grad.iter_mut().zip(&reg.grad) {
        *g += r;
    }
    Ok((loss.value, loss.grad))
}

/// Fits the proposal to `spec` plus the annealed regularizer around `theta0`.
///
/// Preference pairs are drawn once from `rng` and held fixed for every epoch,
/// so each fit descends a single deterministic objective.
#[allow(clippy::too_many_arguments)]
pub fn fit<R: Rng + ?Sized>(
    params: &MeanFieldParams,
    spec: &LossSpec,
    points: Vec<ScoredPoint<'_>>,
    prior: &Prior,
    theta0: &MeanFieldParams,
    n: usize,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<FitOutcome, TrainError> {
    config.validate()?;
    let data = TrainingData::prepare(spec, points, rng)?;
    let n = n.max(1) as f64;
    let mut current = if config.warm_start { params.clone() } else { theta0.clone() };
    let mut adam = AdamState::new(current.logits().len(), config.adam_beta1, config.adam_beta2, config.adam_eps);
    let mut grad_norms = Vec::with_capacity(config.epochs);
    let mut initial_loss = f64::NAN;

    for epoch in 0..config.epochs {
        let (value, mut grad) = objective(spec, &current, prior, &data, theta0, n, config)?;
        let g_norm = norm(&grad);
        if !value.is_finite() || !g_norm.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                epoch,
                value,
                grad_norm: g_norm,
            });
        }
        if epoch == 0 {
            initial_loss = value;
        }
        grad_norms.push(g_norm);
        if config.grad_clip_norm > 0.0 && g_norm > config.grad_clip_norm {
            let s = config.grad_clip_norm / g_norm;
            grad.iter_mut().for_each(|g| *g *= s);
        }
        adam.step(current.logits_mut(), &grad, config.learning_rate);
    }

    let (final_loss, grad) = objective(spec, &current, prior, &data, theta0, n, config)?;
    let final_grad_norm = norm(&grad);
    if !final_loss.is_finite() || current.logits().iter().any(|x| !x.is_finite()) {
        return Err(TrainError::NonFiniteLoss {
            epoch: config.epochs,
            value: final_loss,
            grad_norm: final_grad_norm,
        });
    }
    Ok(FitOutcome {
        params: current,
        diagnostics: FitDiagnostics {
            initial_loss,
            final_loss,
            final_grad_norm,
            grad_norms,
        },
    })
}
