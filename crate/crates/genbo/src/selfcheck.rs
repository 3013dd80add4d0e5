//! Finite-difference gradient checks and normalization checks.

use std::io::{self, Write};

use genbo_core::losses::{
    bfkl_loss, fkl_loss, make_pairs, pl_loss, regularizer, rpl_loss, LossValue, PreferencePair, ScoredPoint,
};
use genbo_core::oracle::{enumerate_domain, exact_target, TargetMode, TargetSpec};
use genbo_core::rng::{rng_stream, RngStream};
use genbo_core::{MeanFieldParams, Prior, RegularizerKind, Sequence, UtilityKind};
use rand::Rng;

/// Signature of the log-density gradient under test.
pub type GradLogProb = fn(&MeanFieldParams, &Sequence) -> Vec<f64>;

pub const GRAD_TOLERANCE: f64 = 1e-5;
pub const INSTANCES: usize = 20;
const STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed error for the check.
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: &str, worst: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: worst.is_finite() && worst < tolerance,
            worst,
            tolerance,
        }
    }
}

/// Central-difference gradient of `f` at `x`.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + STEP;
            let up = f(&probe);
            probe[i] = x[i] - STEP;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

/// `||a - b|| / max(||a||, ||b||)`, falling back to the absolute error for
/// vanishing gradients.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(analytic).max(norm(numeric)).max(1e-8)
}

/// A random small problem: proposal, prior, anchor and scored points.
pub struct Instance {
    pub params: MeanFieldParams,
    pub theta0: MeanFieldParams,
    pub prior: Prior,
    pub sequences: Vec<Sequence>,
    pub utilities: Vec<f64>,
    pub sampling_logps: Vec<f64>,
    pub temperature: f64,
    pub p_flip: f64,
}

impl Instance {
    pub fn random(rng: &mut RngStream) -> Self {
        let m = rng.random_range(2..=4);
        let v = rng.random_range(2..=5);
        let params = MeanFieldParams::random(m, v, 1.0, rng);
        let mut theta0 = params.clone();
        for t in theta0.logits_mut() {
            *t += rng.random_range(-0.3..0.3);
        }
        let prior = if rng.random_bool(0.5) {
            let raw = MeanFieldParams::random(m, v, 1.0, rng);
            let norms = raw.log_normalizers();
            let log_probs = raw
                .logits()
                .iter()
                .enumerate()
                .map(|(i, l)| l - norms[i / v])
                .collect();
            Prior::PerPosition {
                positions: m,
                vocab_size: v,
                log_probs,
            }
        } else {
            Prior::Uniform {
                positions: m,
                vocab_size: v,
            }
        };
        let n = rng.random_range(6..=16);
        let sequences: Vec<Sequence> = (0..n)
            .map(|_| Sequence::from_tokens((0..m).map(|_| rng.random_range(0..v as u8)).collect()))
            .collect();
        let utilities = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let sampling_logps = sequences
            .iter()
            .map(|s| params.log_prob(s) + rng.random_range(-0.5..0.5))
            .collect();
        Self {
            params,
            theta0,
            prior,
            sequences,
            utilities,
            sampling_logps,
            temperature: rng.random_range(0.5..2.0),
            p_flip: rng.random_range(0.0..0.4),
        }
    }

    pub fn points(&self) -> Vec<ScoredPoint<'_>> {
        self.sequences
            .iter()
            .zip(&self.utilities)
            .zip(&self.sampling_logps)
            .map(|((s, &u), &lp)| ScoredPoint {
                sequence: s,
                utility: u,
                sampling_logp: lp,
            })
            .collect()
    }

    pub fn pairs(&self, rng: &mut RngStream) -> Vec<PreferencePair<'_>> {
        make_pairs(&self.points(), rng)
    }

    fn with_logits(&self, logits: &[f64]) -> MeanFieldParams {
        MeanFieldParams::from_logits(self.params.positions(), self.params.vocab_size(), logits.to_vec())
            .expect("finite logits")
    }
}

/// Worst relative error of `loss` against finite differences over random instances.
fn loss_gradient_error(
    seed: u64,
    tag: &str,
    instances: usize,
    loss: impl Fn(&Instance, &MeanFieldParams, &mut RngStream) -> LossValue,
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = rng_stream(seed, tag, i as u64);
        let inst = Instance::random(&mut rng);
        let pair_seed = rng.random::<u64>();
        let eval = |p: &MeanFieldParams| loss(&inst, p, &mut rng_stream(pair_seed, "pairs", 0));
        let analytic = eval(&inst.params).grad;
        let numeric = numeric_gradient(|x| eval(&inst.with_logits(x)).value, inst.params.logits());
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    worst
}

/// Finite-difference checks for the four losses and both regularizers.
pub fn loss_gradient_checks(seed: u64, instances: usize) -> Vec<CheckResult> {
    let pl = loss_gradient_error(seed, "fd-pl", instances, |inst, p, rng| {
        pl_loss(p, &inst.prior, &inst.pairs(rng), inst.temperature).expect("pairs exist")
    });
    let rpl = loss_gradient_error(seed, "fd-rpl", instances, |inst, p, rng| {
        rpl_loss(p, &inst.prior, &inst.pairs(rng), inst.temperature, inst.p_flip).expect("pairs exist")
    });
    let fkl = loss_gradient_error(seed, "fd-fkl", instances, |inst, p, rng| {
        let iw = rng.random_bool(0.5);
        fkl_loss(p, &inst.points(), &inst.prior, iw).expect("nonnegative utilities")
    });
    let bfkl = loss_gradient_error(seed, "fd-bfkl", instances, |inst, p, rng| {
        let iw = rng.random_bool(0.5);
        bfkl_loss(p, &inst.points(), &inst.prior, iw).expect("nonnegative utilities")
    });
    let reg = |kind: RegularizerKind, tag: &str| {
        loss_gradient_error(seed, tag, instances, move |inst, p, rng| {
            let n = rng.random_range(2.0..500.0);
            regularizer(p, &inst.theta0, n, 0.1, kind)
        })
    };
    vec![
        CheckResult::new("grad pl", pl, GRAD_TOLERANCE),
        CheckResult::new("grad rpl", rpl, GRAD_TOLERANCE),
        CheckResult::new("grad fkl", fkl, GRAD_TOLERANCE),
        CheckResult::new("grad bfkl", bfkl, GRAD_TOLERANCE),
        CheckResult::new("grad reg quadratic", reg(RegularizerKind::Quadratic, "fd-reg-q"), GRAD_TOLERANCE),
        CheckResult::new("grad reg exp", reg(RegularizerKind::Exponential, "fd-reg-e"), GRAD_TOLERANCE),
    ]
}

/// Finite-difference check of `grad_log_prob` plus its zero row sums.
pub fn grad_log_prob_checks(grad_log_prob: GradLogProb, seed: u64, instances: usize) -> Vec<CheckResult> {
    let mut worst_fd: f64 = 0.0;
    let mut worst_row: f64 = 0.0;
    for i in 0..instances {
        let mut rng = rng_stream(seed, "fd-logq", i as u64);
        let inst = Instance::random(&mut rng);
        let v = inst.params.vocab_size();
        for s in inst.sequences.iter().take(3) {
            let analytic = grad_log_prob(&inst.params, s);
            let numeric = numeric_gradient(|x| inst.with_logits(x).log_prob(s), inst.params.logits());
            worst_fd = worst_fd.max(relative_error(&analytic, &numeric));
            for row in analytic.chunks(v) {
                worst_row = worst_row.max(row.iter().sum::<f64>().abs());
            }
        }
    }
    vec![
        CheckResult::new("grad log_prob", worst_fd, GRAD_TOLERANCE),
        // rows sum to zero within 1e-12
        CheckResult::new("grad log_prob row sums", worst_row, 1e-12 + f64::EPSILON),
    ]
}

/// Proposal and oracle-target mass on enumerable domains.
pub fn normalization_checks(seed: u64, instances: usize) -> Vec<CheckResult> {
    let mut worst_q: f64 = 0.0;
    let mut worst_target: f64 = 0.0;
    for i in 0..instances {
        let mut rng = rng_stream(seed, "norm", i as u64);
        let inst = Instance::random(&mut rng);
        let (m, v) = (inst.params.positions(), inst.params.vocab_size());
        let domain = enumerate_domain(m, v).expect("small domain");
        let total: f64 = domain.iter().map(|s| inst.params.log_prob(s).exp()).sum();
        worst_q = worst_q.max((total - 1.0).abs());
        let weights: Vec<f64> = (0..domain.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut k = 0;
        let target = exact_target(
            m,
            v,
            |_| {
                k += 1;
                weights[k - 1]
            },
            &inst.prior,
            &TargetSpec {
                utility: UtilityKind::soft_ei(),
                threshold: 0.0,
                temperature: inst.temperature,
                mode: if i % 2 == 0 { TargetMode::Kl } else { TargetMode::Preference },
            },
        )
        .expect("positive soft utilities");
        worst_target = worst_target.max((target.probs().iter().sum::<f64>() - 1.0).abs());
    }
    vec![
        CheckResult::new("proposal mass", worst_q, 1e-8),
        CheckResult::new("target mass", worst_target, 1e-10),
    ]
}

/// rPL at zero flip rate against PL, and bfKL minus fKL against its density term.
pub fn identity_checks(seed: u64, instances: usize) -> Vec<CheckResult> {
    let mut worst_rpl: f64 = 0.0;
    let mut worst_bfkl: f64 = 0.0;
    for i in 0..instances {
        let mut rng = rng_stream(seed, "identity", i as u64);
        let inst = Instance::random(&mut rng);
        let pairs = inst.pairs(&mut rng);
        let pl = pl_loss(&inst.params, &inst.prior, &pairs, inst.temperature).expect("pairs exist");
        let rpl = rpl_loss(&inst.params, &inst.prior, &pairs, inst.temperature, 0.0).expect("pairs exist");
        worst_rpl = worst_rpl.max((pl.value - rpl.value).abs());
        for (a, b) in pl.grad.iter().zip(&rpl.grad) {
            worst_rpl = worst_rpl.max((a - b).abs());
        }
        let iw = i % 2 == 0;
        let points = inst.points();
        let f = fkl_loss(&inst.params, &points, &inst.prior, iw).expect("valid points");
        let b = bfkl_loss(&inst.params, &points, &inst.prior, iw).expect("valid points");
        let extra: f64 = points
            .iter()
            .map(|p| (inst.params.log_prob(p.sequence) - p.sampling_logp).exp())
            .sum();
        worst_bfkl = worst_bfkl.max((b.value - f.value - extra).abs());
    }
    vec![
        CheckResult::new("rpl(p=0) == pl", worst_rpl, 1e-12),
        CheckResult::new("bfkl - fkl == density term", worst_bfkl, 1e-10),
    ]
}

/// Every check, with `grad_log_prob` as the log-density gradient under test.
pub fn run_checks(grad_log_prob: GradLogProb) -> Vec<CheckResult> {
    let seed = 0x5e1f_c4ec;
    let mut out = grad_log_prob_checks(grad_log_prob, seed, INSTANCES);
    out.extend(loss_gradient_checks(seed, INSTANCES));
    out.extend(normalization_checks(seed, 50));
    out.extend(identity_checks(seed, 100));
    out
}

pub fn write_table(results: &[CheckResult], out: &mut impl Write) -> io::Result<()> {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
    writeln!(out, "{:<width$}  {:<6}  {:>10}  {:>10}", "check", "status", "worst", "tolerance")?;
    for r in results {
        let status = if r.passed { "pass" } else { "FAIL" };
        writeln!(out, "{:<width$}  {:<6}  {:>10.3e}  {:>10.1e}", r.name, status, r.worst, r.tolerance)?;
    }
    Ok(())
}

/// Runs every check, prints the table and returns the process exit code.
pub fn selfcheck_with(grad_log_prob: GradLogProb, out: &mut impl Write) -> io::Result<i32> {
    let results = run_checks(grad_log_prob);
    write_table(&results, out)?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        writeln!(out, "all {} checks passed", results.len())?;
        Ok(0)
    } else {
        writeln!(out, "{failed} of {} checks failed", results.len())?;
        Ok(1)
    }
}

pub fn selfcheck(out: &mut impl Write) -> io::Result<i32> {
    selfcheck_with(MeanFieldParams::grad_log_prob, out)
}
