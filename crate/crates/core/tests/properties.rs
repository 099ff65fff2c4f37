use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pruneobs::estimation::{decode, solve_weighted_l1, weighted_observer, WeightVector};
use pruneobs::experiments::{gen_random_system, run_trial, sweep_with_workers, SweepConfig};
use pruneobs::fdia::{random_support, synthesize_fdia};
use pruneobs::linalg::select_entries;
use pruneobs::pruning::Strategy;
use pruneobs::{build_horizon, HorizonModel, Vector};

fn model(seed: u64, m: usize, n: usize, t: usize) -> HorizonModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sys = gen_random_system(m, n, 0.9, &mut rng).unwrap();
    build_horizon(&sys, t).unwrap()
}

fn weighted_objective(model: &HorizonModel, y: &Vector, x: &Vector, w: &[f64]) -> f64 {
    model.residual(y, x).iter().zip(w).map(|(r, wi)| wi * r.abs()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn estimate_never_worse_than_truth(
        seed in 0u64..1000,
        x in prop::collection::vec(-5.0f64..5.0, 3),
        e in prop::collection::vec(-3.0f64..3.0, 8),
        safe in prop::collection::btree_set(0usize..8, 0..6),
    ) {
        let model = model(seed, 8, 3, 1);
        let x = Vector::from_vec(x);
        let y = model.h() * &x + Vector::from_vec(e);
        let safe: Vec<usize> = safe.into_iter().collect();
        let w = WeightVector::from_trusted(8, &safe, 0.01).unwrap();
        let est = solve_weighted_l1(&model, &y, &w).unwrap();
        let at_truth = weighted_objective(&model, &y, &x, w.as_slice());
        let at_hat = weighted_objective(&model, &y, &est.x_hat, w.as_slice());
        prop_assert!((at_hat - est.objective).abs() <= 1e-8 * (1.0 + at_hat));
        prop_assert!(at_hat <= at_truth + 1e-9 * (1.0 + at_truth));
    }

    #[test]
    fn synthesized_attacks_stay_stealthy(seed in 0u64..1000, frac in 0.1f64..0.6, eps in 0.01f64..2.0) {
        let model = model(seed, 10, 4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
        let support = random_support(model.rows(), frac, &mut rng).unwrap();
        prop_assume!(!support.is_empty());
        let plan = synthesize_fdia(&model, &support, eps).unwrap();
        let x = Vector::from_fn(4, |i, _| i as f64 - 1.5);
        let y = plan.apply(&model, &x);
        let est = decode(&model, &y).unwrap().with_detector(eps);
        prop_assert_eq!(est.detector_flag, Some(false));
        prop_assert!(est.residual_l1 <= eps + 1e-9);
        let outside: Vec<usize> = (0..model.rows()).filter(|i| !support.contains(i)).collect();
        prop_assert!(select_entries(&plan.e_t, &outside).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn uniform_weights_reduce_to_plain_decoder() {
    let model = model(3, 12, 4, 2);
    let x = Vector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
    let mut y = model.h() * &x;
    y[0] += 4.0;
    y[7] -= 2.5;
    let plain = decode(&model, &y).unwrap();
    let uniform = solve_weighted_l1(&model, &y, &WeightVector::uniform(model.rows())).unwrap();
    assert!((plain.objective - uniform.objective).abs() < 1e-10);
    assert!((&plain.x_hat - &uniform.x_hat).norm() < 1e-8);
    let all_trusted: Vec<usize> = (0..model.rows()).collect();
    let trusted = weighted_observer(&model, &y, &all_trusted, 0.3).unwrap();
    assert!((trusted.objective - plain.objective).abs() < 1e-10);
}

#[test]
fn trials_are_reproducible_and_worker_independent() {
    let cfg = SweepConfig { attack_grid: vec![0.2, 0.4], trials: 12, master_seed: 99, ..SweepConfig::default() };
    assert_eq!(run_trial(&cfg, 0.2, 5).unwrap(), run_trial(&cfg, 0.2, 5).unwrap());
    let serial = sweep_with_workers(&cfg, Some(1)).unwrap();
    let parallel = sweep_with_workers(&cfg, Some(3)).unwrap();
    assert_eq!(serial.to_csv().unwrap(), parallel.to_csv().unwrap());
    assert_eq!(serial.rows.len(), 2 * Strategy::ALL.len());
}
