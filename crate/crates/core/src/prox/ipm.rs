//! Barrier-method backend for the case problems.
//!
//! Minimizes `t·obj(w) − Σ log w_i − log det ∇²obj(w)` for an increasing
//! sequence of `t`. The Hessian of the objective is affine in `w`,
//! `A(w) = I + λ Σ_k w_k B_k` with `(B_k)_ij = 1` for `i ≠ j` and
//! `k ∉ {i, j}`, so the log-det barrier has closed-form derivatives.
//! Slower than GD but with no convexity assumption on the iterates.

use super::objective::{gradient, hessian, objective};
use super::{CaseSolution, CellCase, SortedCell};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, spd_inverse};

const T_START: f64 = 1.0;
const T_FACTOR: f64 = 10.0;
const NEWTON_MAX: usize = 200;
const ARMIJO: f64 = 0.25;

fn flat<const N: usize>(m: &[[f64; N]; N]) -> Vec<f64> {
    m.iter().flat_map(|r| r.iter().copied()).collect()
}

fn strictly_feasible<const N: usize>(w: &[f64; N], lambda: f64) -> bool {
    w.iter().all(|&v| v > 0.0) && cholesky(N, &flat(&hessian(w, lambda))).is_some()
}

/// Barrier value, or `None` outside the domain.
fn barrier<const N: usize>(w: &[f64; N], z: &[f64; N], lambda: f64, t: f64) -> Option<f64> {
    if w.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let l = cholesky(N, &flat(&hessian(w, lambda)))?;
    let logdet: f64 = (0..N).map(|i| 2.0 * l[i * N + i].ln()).sum();
    let logw: f64 = w.iter().map(|v| v.ln()).sum();
    Some(t * objective(w, z, lambda) - logw - logdet)
}

/// Gradient and Hessian of the barrier function at a strictly feasible point.
fn barrier_derivatives<const N: usize>(
    w: &[f64; N],
    z: &[f64; N],
    lambda: f64,
    t: f64,
) -> Option<([f64; N], Vec<f64>)> {
    let a = hessian(w, lambda);
    let ainv = spd_inverse(N, &flat(&a))?;
    // C_k = A⁻¹ B_k
    let mut c = vec![vec![0.0; N * N]; N];
    for (k, ck) in c.iter_mut().enumerate() {
        for r in 0..N {
            for j in 0..N {
                let mut s = 0.0;
                for i in 0..N {
                    if i != j && i != k && j != k {
                        s += ainv[r * N + i];
                    }
                }
                ck[r * N + j] = s;
            }
        }
    }
    let g_obj = gradient(w, z, lambda);
    let mut grad = [0.0; N];
    for k in 0..N {
        let tr: f64 = (0..N).map(|i| c[k][i * N + i]).sum();
        grad[k] = t * g_obj[k] - 1.0 / w[k] - lambda * tr;
    }
    let mut h = vec![0.0; N * N];
    for k in 0..N {
        for l in 0..N {
            let mut tr = 0.0;
            for a_ in 0..N {
                for b in 0..N {
                    tr += c[k][a_ * N + b] * c[l][b * N + a_];
                }
            }
            h[k * N + l] = t * a[k][l] + lambda * lambda * tr;
        }
        h[k * N + k] += 1.0 / (w[k] * w[k]);
    }
    Some((grad, h))
}

fn centering<const N: usize>(
    w: &mut [f64; N],
    z: &[f64; N],
    lambda: f64,
    t: f64,
) -> Result<usize> {
    let mut steps = 0;
    for _ in 0..NEWTON_MAX {
        let Some((g, h)) = barrier_derivatives(w, z, lambda, t) else {
            return Err(Error::InfeasibleStart(lambda));
        };
        let Some(l) = cholesky(N, &h) else {
            return Err(Error::Singular("barrier Newton system".into()));
        };
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let dir = cholesky_solve(N, &l, &neg_g);
        let decrement: f64 = -g.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>();
        steps += 1;
        if decrement * 0.5 <= 1e-14 {
            break;
        }
        let f0 = barrier(w, z, lambda, t).ok_or(Error::InfeasibleStart(lambda))?;
        let mut s = 1.0;
        loop {
            let mut trial = *w;
            for i in 0..N {
                trial[i] += s * dir[i];
            }
            if let Some(f1) = barrier(&trial, z, lambda, t) {
                if f1 <= f0 - ARMIJO * s * decrement {
                    *w = trial;
                    break;
                }
            }
            s *= 0.5;
            if s < 1e-16 {
                // no further progress possible at this t
                return Ok(steps);
            }
        }
    }
    Ok(steps)
}

fn run<const N: usize>(
    z: &[f64; N],
    lambda: f64,
    floor: f64,
    tol: f64,
) -> Result<(Option<[f64; N]>, usize)> {
    let mut w = [0.0; N];
    for i in 0..N {
        w[i] = z[i].min(0.1);
    }
    if !strictly_feasible(&w, lambda) {
        // Gershgorin: 2(N−1)λε < 1 keeps ∇² positive definite
        let eps = (0.1f64).min(0.25 / (lambda.max(1e-300) * (N as f64)));
        w = [eps; N];
        if !strictly_feasible(&w, lambda) {
            return Err(Error::InfeasibleStart(lambda));
        }
    }
    // duality-gap bound of the barrier: 2N / t
    let m = 2.0 * N as f64;
    let gap = (tol * 1e-2).max(1e-14);
    let mut t = T_START;
    let mut newton = 0;
    loop {
        newton += centering(&mut w, z, lambda, t)?;
        if m / t <= gap {
            break;
        }
        t *= T_FACTOR;
    }
    let g = gradient(&w, z, lambda);
    let scale = z.iter().fold(1.0f64, |a, v| a.max(*v));
    let stationary = g.iter().all(|v| v.abs() <= 1e-6 * scale);
    let positive = w.iter().all(|&v| v > floor);
    Ok(((stationary && positive).then_some(w), newton))
}

/// Solves one case of the sorted prox problem with a log-barrier method.
///
/// Returns `w: None` when the minimizer of the convexified problem is not a
/// zero-gradient point of the case objective, i.e. the case does not
/// produce a local minimum.
pub fn solve_case_ipm(
    z: &SortedCell,
    lambda: f64,
    case: CellCase,
    tol: f64,
) -> Result<CaseSolution> {
    let floor = z.positivity_floor();
    match case {
        CellCase::Dense => {
            let (w, iterations) = run(&z.values(), lambda, floor, tol)?;
            Ok(CaseSolution { w, iterations, aborted: false })
        }
        CellCase::ThreeSparse => {
            let (w, iterations) = run(&z.head3(), lambda, floor, tol)?;
            Ok(CaseSolution {
                w: w.map(|w| [w[0], w[1], w[2], 0.0]),
                iterations,
                aborted: false,
            })
        }
    }
}
