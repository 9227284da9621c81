use super::objective::{f_value, gradient};
use super::{
    inv_pos_sort, pos_sort, solve_case_gd, solve_case_ipm, CaseSolution, CaseTag, CellCase,
    KktReport, ProxResult, SortedCell, CELL_MAX_ITER, CELL_TOL,
};
use crate::error::{Error, Result};

/// Solver used for the 3-sparse and dense cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Projected GD with gradient-growth abort; falls back to the barrier
    /// solver for a case that runs out of iterations.
    #[default]
    Gd,
    /// Log-barrier interior point method.
    Ipm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxOptions {
    pub backend: Backend,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ProxOptions {
    fn default() -> Self {
        Self { backend: Backend::Gd, tol: CELL_TOL, max_iter: CELL_MAX_ITER }
    }
}

fn solve_case(
    z: &SortedCell,
    lambda: f64,
    case: CellCase,
    opts: &ProxOptions,
) -> Result<(CaseSolution, bool)> {
    match opts.backend {
        Backend::Ipm => Ok((solve_case_ipm(z, lambda, case, opts.tol)?, false)),
        Backend::Gd => match solve_case_gd(z, lambda, case, opts.tol, opts.max_iter) {
            Ok(s) => Ok((s, false)),
            Err(Error::SolverNotConverged { .. }) => {
                Ok((solve_case_ipm(z, lambda, case, opts.tol)?, true))
            }
            Err(e) => Err(e),
        },
    }
}

/// Exact prox of `λ r_{2:4}` on a sorted nonnegative cell with default
/// options.
pub fn prox_enumerate(z: &SortedCell, lambda: f64) -> Result<ProxResult> {
    prox_enumerate_with(z, lambda, &ProxOptions::default())
}

/// Evaluates the 2-sparse, 3-sparse and dense candidates and keeps the one
/// with the smallest objective; ties go to the sparser candidate.
pub fn prox_enumerate_with(z: &SortedCell, lambda: f64, opts: &ProxOptions) -> Result<ProxResult> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let zv = z.values();
    let two = [zv[0], zv[1], 0.0, 0.0];
    let f_two = f_value(&two, &zv, lambda);
    let mut out = ProxResult {
        w: two,
        case_tag: CaseTag::TwoSparse,
        objective: f_two,
        three_sparse_aborted: false,
        dense_aborted: false,
        three_sparse_iterations: 0,
        dense_iterations: 0,
        used_fallback: false,
    };
    // f ≥ 0 on the orthant, so a zero-cost 2-sparse point is optimal
    if f_two == 0.0 {
        return Ok(out);
    }
    if lambda == 0.0 {
        out.w = zv;
        out.objective = 0.0;
        out.case_tag = if zv[3] > 0.0 { CaseTag::Dense } else { CaseTag::ThreeSparse };
        return Ok(out);
    }

    let (three, fb3) = solve_case(z, lambda, CellCase::ThreeSparse, opts)?;
    out.three_sparse_aborted = three.aborted;
    out.three_sparse_iterations = three.iterations;
    out.used_fallback |= fb3;
    if let Some(w) = three.w {
        let f = f_value(&w, &zv, lambda);
        if f < out.objective {
            out.w = w;
            out.objective = f;
            out.case_tag = CaseTag::ThreeSparse;
        }
    }

    let (dense, fb4) = solve_case(z, lambda, CellCase::Dense, opts)?;
    out.dense_aborted = dense.aborted;
    out.dense_iterations = dense.iterations;
    out.used_fallback |= fb4;
    if let Some(w) = dense.w {
        let f = f_value(&w, &zv, lambda);
        if f < out.objective {
            out.w = w;
            out.objective = f;
            out.case_tag = CaseTag::Dense;
        }
    }
    Ok(out)
}

/// Prox of `λ r_{2:4}` on an arbitrary cell.
pub fn prox_full(z: &[f64; 4], lambda: f64) -> Result<[f64; 4]> {
    prox_full_with(z, lambda, &ProxOptions::default()).map(|(w, _)| w)
}

/// Prox on an arbitrary cell, also returning the sorted-problem result.
pub fn prox_full_with(
    z: &[f64; 4],
    lambda: f64,
    opts: &ProxOptions,
) -> Result<([f64; 4], ProxResult)> {
    let (sorted, sp) = pos_sort(z);
    let res = prox_enumerate_with(&sorted, lambda, opts)?;
    Ok((inv_pos_sort(&res.w, &sp), res))
}

/// Necessary thresholds on `λ`: `λ₂* = z₃/(z₁z₂)` for a 2-sparse optimum
/// and, given the 3-sparse solution `w123`, `λ₃* = z₄/(w₁w₂ + w₂w₃ + w₁w₃)`.
pub fn lambda_thresholds(z: &SortedCell, w123: Option<[f64; 3]>) -> Result<(f64, Option<f64>)> {
    let [z1, z2, z3, z4] = z.values();
    if z1 * z2 == 0.0 {
        return Err(Error::InvalidArgument("lambda thresholds need z1 * z2 > 0".into()));
    }
    let two = z3 / (z1 * z2);
    let three = w123.map(|w| z4 / (w[0] * w[1] + w[1] * w[2] + w[0] * w[2]));
    Ok((two, three))
}

/// Checks the KKT conditions of the nonnegative sorted problem at `w`.
pub fn kkt_check(w: &[f64; 4], z: &SortedCell, lambda: f64, tol: f64) -> KktReport {
    let nu = gradient(w, &z.values(), lambda);
    let primal_feasible = w.iter().all(|&v| v >= 0.0);
    let dual_feasible = nu.iter().all(|&v| v >= -tol);
    let complementary_slack = nu.iter().zip(w).all(|(n, x)| (n * x).abs() <= tol);
    let stationarity_residual = nu
        .iter()
        .zip(w)
        .filter(|(_, x)| **x > 0.0)
        .fold(0.0f64, |a, (n, _)| a.max(n.abs()));
    KktReport {
        stationarity_residual,
        dual_multipliers: nu,
        primal_feasible,
        dual_feasible,
        complementary_slack,
        tol,
    }
}
