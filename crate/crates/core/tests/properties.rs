use genbo_core::acquisition::{empirical_quantile, utility};
use genbo_core::blackbox::EhrlichConfig;
use genbo_core::engine::run_experiment;
use genbo_core::oracle::{enumerate_domain, ExactDistribution};
use genbo_core::rng::{rng_stream, tags};
use genbo_core::{
    BlackBox, EditDistanceTask, EhrlichFunction, ExperimentConfig, LossKind, LossSpec, MeanFieldParams, Method,
    Task, UtilityKind,
};
use proptest::prelude::*;

fn small_aloha(method: Method, loss: LossKind, utility: UtilityKind) -> ExperimentConfig {
    let bb = BlackBox::noiseless(Task::EditDistance(EditDistanceTask::aloha()));
    let mut cfg = ExperimentConfig::aloha(bb, LossSpec::new(loss), utility);
    cfg.method = method;
    cfg.rounds = 3;
    cfg.train.epochs = 20;
    cfg
}

fn small_ehrlich(instance_seed: u64) -> EhrlichFunction {
    let cfg = EhrlichConfig::new(8, 2, 3, 3);
    EhrlichFunction::new(&cfg, &mut rng_stream(instance_seed, tags::EHRLICH, 0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn utilities_are_ordered(y in -10.0f64..10.0, thr in -10.0f64..10.0, s in 0.1f64..10.0) {
        let pi = utility(y, thr, UtilityKind::Pi);
        let ei = utility(y, thr, UtilityKind::Ei);
        let sei = utility(y, thr, UtilityKind::SoftEi { sharpness: s });
        prop_assert!(pi == 0.0 || pi == 1.0);
        prop_assert!(ei >= 0.0);
        prop_assert!(sei > 0.0 && sei >= ei - 1e-12);
        prop_assert_eq!(utility(y, thr, UtilityKind::Sr), y);
    }

    #[test]
    fn quantile_is_an_observation_and_monotone(
        ys in prop::collection::vec(-100.0f64..100.0, 1..40),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let q_lo = empirical_quantile(&ys, lo).unwrap();
        let q_hi = empirical_quantile(&ys, hi).unwrap();
        prop_assert!(ys.contains(&q_lo));
        prop_assert!(q_lo <= q_hi);
    }

    #[test]
    fn proposal_sums_to_one(m in 1usize..4, v in 2usize..5, seed in any::<u64>()) {
        let q = MeanFieldParams::random(m, v, 3.0, &mut rng_stream(seed, "prop", 0));
        let total: f64 = enumerate_domain(m, v).unwrap().iter().map(|s| q.log_prob(s).exp()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        let exact = ExactDistribution::from_params(&q).unwrap();
        prop_assert!((exact.probs().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ehrlich_values_are_quantized(instance in 0u64..20, seed in any::<u64>()) {
        let f = small_ehrlich(instance);
        prop_assert_eq!(f.evaluate(f.certificate()).unwrap(), 1.0);
        let mut rng = rng_stream(seed, "probe", 0);
        for s in MeanFieldParams::zeros(8, 20).sample(&mut rng, 50) {
            let y = f.evaluate(&s).unwrap();
            if f.is_feasible(s.tokens()) {
                prop_assert!((0.0..=1.0).contains(&y));
                // two motifs with presence in {0, 1/3, 2/3, 1}
                prop_assert!(((y * 9.0).round() - y * 9.0).abs() < 1e-9);
            } else {
                prop_assert_eq!(y, -1.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn run_invariants(seed in 0u64..1000, genbo in any::<bool>()) {
        let method = if genbo { Method::GenBo } else { Method::RandomMutation };
        let cfg = small_aloha(method, LossKind::Rpl, UtilityKind::soft_ei());
        let r = run_experiment(&cfg, seed).unwrap();
        prop_assert_eq!(r.records.len(), 3);
        prop_assert_eq!(r.dataset.len(), cfg.init_size + 3 * cfg.batch_size);
        let mut prev = r.initial_regret;
        for (i, rec) in r.records.iter().enumerate() {
            prop_assert_eq!(rec.round as usize, i + 1);
            prop_assert_eq!(rec.n_evals, cfg.init_size + (i + 1) * cfg.batch_size);
            prop_assert!(rec.simple_regret <= prev && rec.simple_regret >= 0.0);
            prop_assert_eq!(rec.final_loss.is_some(), genbo);
            prev = rec.simple_regret;
        }
        prop_assert_eq!(r.params.is_some(), genbo);
        prop_assert_eq!(&run_experiment(&cfg, seed).unwrap(), &r);
    }
}

#[test]
fn pi_batch_utilities_are_fractions() {
    let cfg = small_aloha(Method::GenBo, LossKind::Fkl, UtilityKind::Pi);
    let r = run_experiment(&cfg, 3).unwrap();
    for rec in &r.records {
        let k = rec.batch_mean_u * cfg.batch_size as f64;
        assert!((k - k.round()).abs() < 1e-9 && (0.0..=1.0).contains(&rec.batch_mean_u));
    }
}

#[test]
fn mutation_children_are_near_some_earlier_point() {
    let cfg = small_aloha(Method::RandomMutation, LossKind::Rpl, UtilityKind::soft_ei());
    let r = run_experiment(&cfg, 11).unwrap();
    let recs = r.dataset.records();
    for (i, child) in recs.iter().enumerate().skip(cfg.init_size) {
        let near = recs[..i].iter().any(|p| {
            p.round < child.round
                && p.sequence.tokens().iter().zip(child.sequence.tokens()).filter(|(a, b)| a != b).count() <= cfg.mutations
        });
        assert!(near, "child {i} is more than {} substitutions from every parent", cfg.mutations);
    }
}

#[test]
fn cbas_first_round_matches_full_history() {
    let mut full = small_aloha(Method::GenBo, LossKind::Fkl, UtilityKind::Ei);
    full.rounds = 1;
    let mut last = full.clone();
    last.cbas_last_batch_only = true;
    assert_eq!(run_experiment(&full, 5).unwrap().records, run_experiment(&last, 5).unwrap().records);
}

#[test]
fn ehrlich_run_spends_its_budget() {
    let f = small_ehrlich(1);
    let bb = BlackBox::noiseless(Task::Ehrlich(f));
    let mut cfg = ExperimentConfig::ehrlich(bb, LossSpec::new(LossKind::Rpl), UtilityKind::soft_ei());
    cfg.rounds = 4;
    cfg.batch_size = 32;
    cfg.init_size = 32;
    cfg.train.epochs = 30;
    let r = run_experiment(&cfg, 0).unwrap();
    assert_eq!(r.dataset.len(), 32 + 4 * 32);
    assert!(r.records.iter().all(|rec| rec.best_y <= 1.0 && rec.simple_regret >= 0.0));
}
