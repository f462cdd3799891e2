mod common;

use common::{is_nonincreasing, planted_rank_one, random_sparse, rng};
use srcd::{full_objective, init_factors, mu_factorize, mu_iterate, MuState, NmfConfig, RegConfig};

#[test]
fn planted_rank_one_fits_closely() {
    let mut rng = rng(31);
    let (v, _) = planted_rank_one(&mut rng, 30, 50);
    let vt = v.transpose();
    let mut state = MuState::new(init_factors(30, 50, 1, v.mean(), 2));
    for _ in 0..200 {
        mu_iterate(&v, &vt, &mut state, 1).unwrap();
    }
    let kl = full_objective(&v, &state.factors, &RegConfig::default(), 1e-16)
        .unwrap()
        .kl;
    assert!(kl <= 1e-4 * v.nnz() as f64, "{kl}");
}

#[test]
fn iterations_are_monotone_and_strictly_positive() {
    let mut rng = rng(32);
    let v = random_sparse(&mut rng, 25, 40, 0.15);
    let vt = v.transpose();
    let mut state = MuState::new(init_factors(25, 40, 4, v.mean(), 3));
    let mut objective = vec![full_objective(&v, &state.factors, &RegConfig::default(), 1e-16)
        .unwrap()
        .kl];
    for _ in 0..100 {
        mu_iterate(&v, &vt, &mut state, 2).unwrap();
        assert!(state.factors.w.values().iter().all(|&x| x > 0.0));
        assert!(state.factors.f.values().iter().all(|&x| x > 0.0));
        objective.push(
            full_objective(&v, &state.factors, &RegConfig::default(), 1e-16)
                .unwrap()
                .kl,
        );
    }
    assert!(is_nonincreasing(&objective, 1e-8), "{objective:?}");
}

#[test]
fn factor_sparsity_is_always_zero() {
    let mut rng = rng(33);
    let v = random_sparse(&mut rng, 30, 30, 0.05);
    let cfg = NmfConfig {
        rank: 5,
        max_outer_iters: 40,
        rel_obj_tol: 0.0,
        ..NmfConfig::default()
    };
    let res = mu_factorize(&v, &cfg).unwrap();
    assert_eq!(res.log.len(), 40);
    for rec in res.log.records() {
        assert_eq!(rec.sparsity_w, 0.0);
        assert_eq!(rec.sparsity_f, 0.0);
    }
}

#[test]
fn worker_count_does_not_change_updates() {
    let mut rng = rng(34);
    let v = random_sparse(&mut rng, 40, 70, 0.1);
    let vt = v.transpose();
    let init = init_factors(40, 70, 3, v.mean(), 5);
    let run = |workers| {
        let mut s = MuState::new(init.clone());
        for _ in 0..5 {
            mu_iterate(&v, &vt, &mut s, workers).unwrap();
        }
        s.factors
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(4));
}
