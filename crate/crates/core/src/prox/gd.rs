//! Projected gradient descent for the 3-sparse and dense case problems.
//!
//! Starts at zero with constant step 1/4 and clamps to the nonnegative
//! orthant after every step. The PSD constraint of the convexified problems
//! is never enforced; instead the run is abandoned as soon as the
//! gradient-mapping norm grows, which cannot happen while the iterates stay
//! in the region where the objective is convex. A step that raises the
//! objective is treated the same way; inside the convex region a 1/4 step
//! always descends, and this also catches exact 2-cycles whose
//! gradient-mapping norms tie.

use super::objective::{gradient, objective};
use super::{CaseSolution, CellCase, SortedCell, GD_STEP};
use crate::error::{Error, Result};

/// Relative guard on the abort comparison.
const ABORT_GUARD: f64 = 1e-12;

/// `‖(w − max(w − η∇, 0)) / η‖₂`, and the projected next iterate.
#[inline]
fn mapping<const N: usize>(w: &[f64; N], g: &[f64; N]) -> (f64, [f64; N]) {
    let mut next = [0.0; N];
    let mut norm = 0.0;
    for i in 0..N {
        next[i] = (w[i] - GD_STEP * g[i]).max(0.0);
        let d = (w[i] - next[i]) / GD_STEP;
        norm += d * d;
    }
    (norm.sqrt(), next)
}

fn run<const N: usize>(
    z: &[f64; N],
    lambda: f64,
    floor: f64,
    tol: f64,
    max_iter: usize,
    observe: &mut dyn FnMut(&[f64; N]),
) -> Result<(Option<[f64; N]>, usize, bool)> {
    let mut w = [0.0; N];
    observe(&w);
    let (mut norm, mut next) = mapping(&w, &gradient(&w, z, lambda));
    let mut value = objective(&w, z, lambda);
    for it in 0..max_iter {
        if norm <= tol {
            let ok = w.iter().all(|&v| v > floor);
            return Ok((ok.then_some(w), it, false));
        }
        let g_next = gradient(&next, z, lambda);
        let (norm_next, after) = mapping(&next, &g_next);
        let value_next = objective(&next, z, lambda);
        if norm_next > norm * (1.0 + ABORT_GUARD)
            || value_next > value + ABORT_GUARD * value.abs()
        {
            return Ok((None, it + 1, true));
        }
        w = next;
        observe(&w);
        norm = norm_next;
        value = value_next;
        next = after;
    }
    if norm <= tol {
        let ok = w.iter().all(|&v| v > floor);
        return Ok((ok.then_some(w), max_iter, false));
    }
    let mut last = [0.0; 4];
    last[..N].copy_from_slice(&w);
    Err(Error::SolverNotConverged { iterations: max_iter, residual: norm, last })
}

/// Solves one case of the sorted prox problem by projected GD.
///
/// Returns `w: None` when the run aborts on a growing gradient or when it
/// converges to a point with a zero coordinate (a sparser case then holds the
/// optimum). Hitting `max_iter` is an error carrying the last iterate.
pub fn solve_case_gd(
    z: &SortedCell,
    lambda: f64,
    case: CellCase,
    tol: f64,
    max_iter: usize,
) -> Result<CaseSolution> {
    solve_case_gd_traced(z, lambda, case, tol, max_iter, |_| {})
}

/// Like [`solve_case_gd`] but reports every iterate `w⁰, w¹, …` (padded to
/// four entries for the 3-sparse case) to `observe`.
pub fn solve_case_gd_traced(
    z: &SortedCell,
    lambda: f64,
    case: CellCase,
    tol: f64,
    max_iter: usize,
    mut observe: impl FnMut(&[f64; 4]),
) -> Result<CaseSolution> {
    let floor = z.positivity_floor();
    match case {
        CellCase::Dense => {
            let (w, iterations, aborted) =
                run(&z.values(), lambda, floor, tol, max_iter, &mut |w: &[f64; 4]| observe(w))?;
            Ok(CaseSolution { w, iterations, aborted })
        }
        CellCase::ThreeSparse => {
            let mut obs = |w: &[f64; 3]| observe(&[w[0], w[1], w[2], 0.0]);
            let (w, iterations, aborted) = run(&z.head3(), lambda, floor, tol, max_iter, &mut obs)?;
            Ok(CaseSolution { w: w.map(|w| [w[0], w[1], w[2], 0.0]), iterations, aborted })
        }
    }
}
