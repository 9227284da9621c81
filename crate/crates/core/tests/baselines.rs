mod common;

use common::{random_matrix, random_spd};
use prune24::baselines::{
    brute_force_mask_search, fit_to_mask, simple_reg_prune, sparsegpt_prune, wanda_prune,
    wanda_scores, DEFAULT_DAMP,
};
use prune24::harness::{toy_problem, Rng};
use prune24::linalg::layer_loss;
use prune24::prox::SimpleReg;
use prune24::pruner::{
    is_24_sparse, prune_prox, refine_with_masked_gd, LambdaSchedule, PruneConfig, Termination,
};
use prune24::Hessian;

fn diagonal_instance(rng: &mut Rng, rows: usize) -> (prune24::Matrix, Hessian) {
    let diag: Vec<f64> = (0..8).map(|_| 0.05 + rng.uniform()).collect();
    (random_matrix(rng, rows, 8), Hessian::from_diag(&diag).unwrap())
}

#[test]
fn wanda_is_optimal_for_diagonal_hessians() {
    let mut rng = Rng::new(31);
    for _ in 0..20 {
        let (ws, h) = diagonal_instance(&mut rng, 1);
        let (w, mask) = wanda_prune(&ws, &h).unwrap();
        let (best_mask, best) = brute_force_mask_search(&ws, &h).unwrap();
        let loss = layer_loss(&w, &ws, &h).unwrap();
        assert!((loss - best).abs() <= 1e-9, "{loss} vs {best}");
        assert_eq!(mask, best_mask);
    }
}

#[test]
fn sparsegpt_equals_wanda_on_diagonal_hessians() {
    let mut rng = Rng::new(32);
    for _ in 0..20 {
        let (ws, h) = diagonal_instance(&mut rng, 3);
        let (a, am) = sparsegpt_prune(&ws, &h, DEFAULT_DAMP).unwrap();
        let (b, bm) = wanda_prune(&ws, &h).unwrap();
        assert_eq!(am, bm);
        assert!(a.max_abs_diff(&b) <= 1e-12);
    }
}

#[test]
fn scores_depend_only_on_diagonal() {
    let mut rng = Rng::new(33);
    let ws = random_matrix(&mut rng, 2, 8);
    let h = Hessian::new(random_spd(&mut rng, 8, 3, 0.1)).unwrap();
    let d = Hessian::from_diag(&h.diag()).unwrap();
    assert_eq!(wanda_scores(&ws, &h).unwrap(), wanda_scores(&ws, &d).unwrap());
    assert!(wanda_scores(&ws, &h).unwrap().as_slice().iter().all(|v| *v >= 0.0));
}

#[test]
fn nothing_beats_the_exhaustive_search() {
    let mut rng = Rng::new(34);
    let cfg = PruneConfig::default();
    for _ in 0..5 {
        let ws = random_matrix(&mut rng, 2, 8);
        let h = Hessian::new(random_spd(&mut rng, 8, 4, 0.01)).unwrap();
        let (_, best) = brute_force_mask_search(&ws, &h).unwrap();
        let (wp, mp, _) = prune_prox(&ws, &h, &LambdaSchedule::default(), &cfg).unwrap();
        let (ww, wm) = wanda_prune(&ws, &h).unwrap();
        let (wg, gm) = sparsegpt_prune(&ws, &h, DEFAULT_DAMP).unwrap();
        for (w, m) in [(wp, mp), (ww, wm), (wg, gm)] {
            assert!(is_24_sparse(&w, 0.0).unwrap());
            let (_, refit) = fit_to_mask(&ws, &h, &m).unwrap();
            assert!(layer_loss(&w, &ws, &h).unwrap() >= best - 1e-9);
            assert!(refit >= best - 1e-9);
        }
    }
}

#[test]
fn masked_gd_after_baselines_never_hurts() {
    let mut rng = Rng::new(35);
    for _ in 0..5 {
        let ws = random_matrix(&mut rng, 3, 16);
        let h = Hessian::new(random_spd(&mut rng, 16, 6, 0.0)).unwrap();
        for (w, m) in [wanda_prune(&ws, &h).unwrap(), sparsegpt_prune(&ws, &h, DEFAULT_DAMP).unwrap()] {
            let before = layer_loss(&w, &ws, &h).unwrap();
            let r = refine_with_masked_gd(&w, &ws, &h, &m, 500).unwrap();
            assert!(layer_loss(&r, &ws, &h).unwrap() <= before * (1.0 + 1e-12));
            assert!(is_24_sparse(&r, 0.0).unwrap());
        }
    }
}

#[test]
fn simple_regularizers_on_toy() {
    let (ws, h) = toy_problem();
    let s = LambdaSchedule::default();
    let cfg = PruneConfig::default();
    for kind in [SimpleReg::R0, SimpleReg::R1, SimpleReg::R2] {
        let (w, _, rep) = simple_reg_prune(&ws, &h, kind, &s, &cfg).unwrap();
        assert!(is_24_sparse(&w, 0.0).unwrap());
        assert!(layer_loss(&w, &ws, &h).unwrap() >= 9.0 - 1e-9);
        if kind == SimpleReg::R2 {
            assert_eq!(rep.terminated_by, Termination::MaxIter);
            assert_eq!(rep.iterations, cfg.max_iter);
        } else {
            assert_eq!(rep.terminated_by, Termination::SparsityReached);
        }
    }
}
