//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::{random_cells, rel_close};
use prune24::baselines::{brute_force_mask_search, sparsegpt_prune, wanda_prune, DEFAULT_DAMP};
use prune24::harness::bench::{run_benchmark, BenchConfig, BenchRow, Method};
use prune24::harness::path::linspace;
use prune24::harness::{
    read_matrix, reg_path_sweep, sparsity_transition, toy_problem, write_matrix, Rng,
};
use prune24::linalg::{is_psd, layer_loss, symmetric_eigen};
use prune24::prox::{
    brute_force_prox_oracle, hessian_f, prox_enumerate, prox_full, solve_case_gd,
    solve_case_gd_traced, solve_case_ipm, CaseTag, CellCase, CELL_MAX_ITER, CELL_TOL,
};
use prune24::pruner::{prune_prox, LambdaSchedule, PruneConfig};
use prune24::{Hessian, Matrix};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn report(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    report_timed(id, name, limit, start.elapsed(), outcome)
}

fn report_timed(id: usize, name: &str, limit: Duration, took: Duration, outcome: Outcome) -> bool {
    let outcome = match outcome {
        Ok(detail) if took > limit => Err(format!("{detail}; took {took:.1?}, limit {limit:?}")),
        other => other,
    };
    let (pass, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    let line = format!(
        "{} criterion {id}: {name} [{:.2}s] {detail}\n",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64()
    );
    // bypass libtest capture so the lines always appear
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    pass
}

fn toy_reproduction() -> Outcome {
    let (ws, h) = toy_problem();
    let (w, mask, rep) =
        prune_prox(&ws, &h, &LambdaSchedule::default(), &PruneConfig::default()).map_err(|e| e.to_string())?;
    let expected_mask = [false, true, false, true, false, true, true, false];
    check(mask.as_slice() == expected_mask, format!("prox mask {:?}", mask.as_slice()))?;
    let target = Matrix::new(1, 8, vec![0.0, 5.0, 0.0, 4.0, 0.0, 5.0, 5.0, 0.0]).unwrap();
    check(w.max_abs_diff(&target) <= 1e-6, format!("prox weights {:?}", w.as_slice()))?;
    let lp = layer_loss(&w, &ws, &h).unwrap();
    check((lp - 9.0).abs() <= 1e-6, format!("prox loss {lp}"))?;

    let (ww, wm) = wanda_prune(&ws, &h).unwrap();
    check(ww.as_slice() == [0.0, 5.0, 3.0, 0.0, 0.0, 5.0, 5.0, 0.0], format!("wanda {:?}", ww.as_slice()))?;
    let lw = layer_loss(&ww, &ws, &h).unwrap();
    check((lw - 16.0).abs() <= 1e-9, format!("wanda loss {lw}"))?;

    let (wg, gm) = sparsegpt_prune(&ws, &h, DEFAULT_DAMP).unwrap();
    check(gm == wm, "sparsegpt mask differs from wanda")?;
    let lg = layer_loss(&wg, &ws, &h).unwrap();
    check((lg - 16.0).abs() <= 1e-6, format!("sparsegpt loss {lg}"))?;
    Ok(format!("prox loss {lp:.9} in {} iterations, wanda {lw}, sparsegpt {lg:.9}", rep.iterations))
}

fn wanda_diagonal_optimality() -> Outcome {
    let mut rng = Rng::new(2024);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let diag: Vec<f64> = (0..8).map(|_| 0.01 + rng.uniform()).collect();
        let ws = Matrix::new(1, 8, (0..8).map(|_| rng.normal()).collect()).unwrap();
        let h = Hessian::from_diag(&diag).unwrap();
        let (w, _) = wanda_prune(&ws, &h).unwrap();
        let loss = layer_loss(&w, &ws, &h).unwrap();
        let (_, best) = brute_force_mask_search(&ws, &h).unwrap();
        let gap = (loss - best).abs();
        worst = worst.max(gap);
        check(gap <= 1e-9, format!("instance {i}: wanda {loss} vs optimum {best}"))?;
    }
    Ok(format!("50 instances, max |wanda − optimum| = {worst:.2e}"))
}

/// Criteria 3 and 7 share their random instances.
fn prox_suite() -> (Outcome, Outcome) {
    let cells = random_cells(7, 1000);
    let mut worst_obj: f64 = 0.0;
    let mut worst_backend: f64 = 0.0;
    let mut dense = 0;
    let mut psd_exits = 0;
    let mut checked_iterates = 0;
    let mut failure = None;
    for (i, (z, lambda)) in cells.iter().enumerate() {
        let r = prox_enumerate(z, *lambda).unwrap();
        let (_, fo) = brute_force_prox_oracle(z, *lambda);
        let gap = (r.objective - fo).abs();
        let rel = if gap == 0.0 { 0.0 } else { gap / r.objective.abs().max(fo.abs()) };
        worst_obj = worst_obj.max(rel);
        if rel > 1e-6 && failure.is_none() {
            failure = Some(format!("instance {i}: objective {} vs oracle {fo}", r.objective));
        }
        for case in [CellCase::ThreeSparse, CellCase::Dense] {
            let a = solve_case_gd(z, *lambda, case, CELL_TOL, CELL_MAX_ITER).map(|s| s.w);
            let b = solve_case_ipm(z, *lambda, case, CELL_TOL).map(|s| s.w);
            let d = match (a, b) {
                (Ok(None), Ok(None)) => 0.0,
                (Ok(Some(x)), Ok(Some(y))) => {
                    x.iter().zip(&y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
                }
                _ => f64::INFINITY,
            };
            worst_backend = worst_backend.max(d);
            if d > 1e-6 && failure.is_none() {
                failure = Some(format!("instance {i} {case:?}: backends disagree"));
            }
        }
        if r.case_tag == CaseTag::Dense {
            dense += 1;
            let mut exits = 0;
            let mut n = 0;
            solve_case_gd_traced(z, *lambda, CellCase::Dense, CELL_TOL, CELL_MAX_ITER, |w| {
                n += 1;
                let h = hessian_f(w, *lambda);
                let m = Matrix::new(4, 4, h.iter().flatten().copied().collect()).unwrap();
                if !is_psd(&m, 1e-9) {
                    exits += 1;
                }
            })
            .unwrap();
            psd_exits += exits;
            checked_iterates += n;
        }
    }
    let c3 = match failure {
        Some(f) => Err(f),
        None => Ok(format!(
            "1000 instances, max rel objective gap {worst_obj:.2e}, max backend distance {worst_backend:.2e}"
        )),
    };
    let c7 = if dense == 0 {
        Err("no instance with a dense optimum".to_string())
    } else if psd_exits > 0 {
        Err(format!("{psd_exits} iterates outside the PSD region"))
    } else {
        Ok(format!("{dense} dense optima, {checked_iterates} GD iterates, 0 PSD exits"))
    };
    (c3, c7)
}

fn threshold_property() -> Outcome {
    let grid = linspace(0.0, 4.0, 801);
    let inputs = [
        [1.6, 1.1, 0.8, 0.5],
        [1.6, 1.11, 1.1, 1.09],
        [1.6, 1.59, 1.58, 1.09],
        [1.6, 1.59, 1.58, 1.57],
    ];
    for z in &inputs {
        let p = reg_path_sweep(z, &grid).map_err(|e| e.to_string())?;
        let l2 = p.lambda2_star.unwrap();
        if let Some(r) = p.rows.iter().find(|r| r.lambda < l2 && r.case_tag == CaseTag::TwoSparse) {
            return Err(format!("z={z:?}: two_sparse at λ={} < λ₂*={l2}", r.lambda));
        }
    }
    let easy = sparsity_transition(&inputs[0], 10.0, 1e-9).map_err(|e| e.to_string())?.ok_or("no transition")?;
    check(easy >= 0.454545, format!("easy-input transition {easy}"))?;
    Ok(format!("4 paths × 801 λ clean; easy-input transition at λ ≈ {easy:.6}"))
}

fn losses(rows: &[BenchRow], alpha: f64, m: Method) -> Vec<f64> {
    rows.iter().filter(|r| r.alpha == alpha && r.method == m).map(|r| r.loss).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn benchmark_direction(rows: &[BenchRow]) -> Outcome {
    let prox1 = losses(rows, 1.0, Method::Prox);
    check(prox1.len() == 5, "missing alpha = 1 rows")?;
    let mut worst: f64 = 0.0;
    for m in Method::ALL {
        for (a, b) in losses(rows, 1.0, m).iter().zip(&prox1) {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
            check(rel_close(*a, *b, 1e-6), format!("alpha=1 {m}: {a} vs prox {b}"))?;
        }
    }
    let mut detail = format!("alpha=1 max rel spread {worst:.1e}");
    for alpha in [0.5, 0.3] {
        let p = mean(&losses(rows, alpha, Method::Prox));
        let w = mean(&losses(rows, alpha, Method::WandaGd));
        let s = mean(&losses(rows, alpha, Method::SparseGptGd));
        check(p <= 1.01 * w && p <= 1.01 * s, format!("alpha={alpha}: prox {p} wanda+gd {w} sparsegpt+gd {s}"))?;
        detail.push_str(&format!("; alpha={alpha}: prox {p:.3}, wanda+gd {w:.3}, sparsegpt+gd {s:.3}"));
    }
    Ok(detail)
}

fn masked_gd_improvement(rows: &[BenchRow]) -> Outcome {
    let alphas: Vec<f64> = {
        let mut a: Vec<f64> = rows.iter().map(|r| r.alpha).filter(|a| *a < 1.0).collect();
        a.dedup();
        a
    };
    let (mut strict, mut total) = (0, 0);
    for &alpha in &alphas {
        for (base, refined) in [(Method::Wanda, Method::WandaGd), (Method::SparseGpt, Method::SparseGptGd)] {
            for (b, r) in losses(rows, alpha, base).iter().zip(losses(rows, alpha, refined)) {
                check(r <= *b, format!("alpha={alpha} {refined}: {r} > {b}"))?;
                if alpha <= 0.5 {
                    total += 1;
                    strict += usize::from(r < *b);
                }
            }
        }
    }
    check(total > 0, "no instances with alpha <= 0.5")?;
    check(5 * strict >= 4 * total, format!("strict improvement on {strict}/{total}"))?;
    Ok(format!("never worse on alphas {alphas:?}; strict improvement on {strict}/{total} at alpha <= 0.5"))
}

fn psd_spectrum_bound() -> Outcome {
    let mut rng = Rng::new(88);
    let (mut psd, mut worst) = (0, f64::NEG_INFINITY);
    for _ in 0..10_000 {
        let scale = rng.uniform();
        let w = [0; 4].map(|_| scale * rng.uniform());
        let lambda = 3.0 * rng.uniform();
        let h = hessian_f(&w, lambda);
        let m = Matrix::new(4, 4, h.iter().flatten().copied().collect()).unwrap();
        if is_psd(&m, 0.0) {
            psd += 1;
            let (vals, _) = symmetric_eigen(4, m.as_slice());
            worst = worst.max(vals[3]);
            check(vals[3] <= 4.0 + 1e-9, format!("w={w:?} λ={lambda}: largest eigenvalue {}", vals[3]))?;
        }
    }
    check(psd > 0, "no PSD samples drawn")?;
    Ok(format!("{psd}/10000 samples PSD, largest eigenvalue {worst:.6}"))
}

fn equivariance_and_format() -> Outcome {
    let mut rng = Rng::new(99);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let z = [0; 4].map(|_| 4.0 * rng.uniform() - 2.0);
        let lambda = 3.0 * rng.uniform();
        let mut perm = [0usize, 1, 2, 3];
        for k in (1..4).rev() {
            let j = (rng.uniform() * (k + 1) as f64) as usize;
            perm.swap(k, j.min(k));
        }
        let signs = [0; 4].map(|_| if rng.uniform() < 0.5 { -1.0 } else { 1.0 });
        let base = prox_full(&z, lambda).map_err(|e| e.to_string())?;
        let tz: [f64; 4] = std::array::from_fn(|k| signs[k] * z[perm[k]]);
        let got = prox_full(&tz, lambda).map_err(|e| e.to_string())?;
        for k in 0..4 {
            let d = (got[k] - signs[k] * base[perm[k]]).abs();
            worst = worst.max(d);
            check(d <= 1e-12, format!("check {i}: z={z:?} perm={perm:?}"))?;
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let m = Matrix::new(3, 8, (0..24).map(|_| rng.normal()).collect()).unwrap();
    let path = dir.path().join("m.bin");
    write_matrix(&path, &m).map_err(|e| e.to_string())?;
    let back = read_matrix(&path).map_err(|e| e.to_string())?;
    let exact = back.shape() == m.shape()
        && back.as_slice().iter().zip(m.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
    check(exact, "matrix roundtrip not bit-exact")?;
    Ok(format!("100 checks, max deviation {worst:.1e}; 3x8 roundtrip bit-exact"))
}

#[test]
fn acceptance() {
    let mut all = true;
    all &= report(1, "toy reproduction", Duration::from_secs(5), toy_reproduction);
    all &= report(2, "wanda optimal on diagonal hessians", Duration::from_secs(30), wanda_diagonal_optimality);

    let start = Instant::now();
    let (c3, c7) = prox_suite();
    let took = start.elapsed();
    all &= report_timed(3, "prox vs oracle and GD vs IPM", Duration::from_secs(300), took, c3);
    all &= report_timed(7, "GD iterates stay in the PSD region", Duration::MAX, took, c7);

    all &= report(4, "two-sparse threshold along paths", Duration::from_secs(60), threshold_property);

    let start = Instant::now();
    let rows = run_benchmark(
        &[1.0, 0.9, 0.7, 0.5, 0.3],
        128,
        &[0, 1, 2, 3, 4],
        &Method::ALL,
        &BenchConfig::default(),
    );
    let rows = rows.expect("benchmark runs");
    let c5 = benchmark_direction(&rows);
    let took = start.elapsed();
    all &= report_timed(5, "synthetic benchmark direction", Duration::from_secs(600), took, c5);
    all &= report_timed(6, "masked GD improves baselines", Duration::MAX, took, masked_gd_improvement(&rows));
    all &= report(8, "PSD hessians have spectrum <= 4", Duration::from_secs(60), psd_spectrum_bound);
    all &= report(9, "equivariance and file format", Duration::from_secs(60), equivariance_and_format);
    assert!(all, "acceptance criteria failed");
}
