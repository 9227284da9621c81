//! Reference pruners: WandA, an OBS-style column-block pruner in the manner of
//! SparseGPT, proximal pruning with the separable R0/R1/R2 regularizers, and
//! an exhaustive mask search for tiny instances.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, cholesky_solve, precondition, symmetric_eigen, unprecondition, Hessian, Matrix,
};
use crate::prox::{inv_pos_sort, pos_sort, prox_simple, SimpleReg};
use crate::pruner::{
    finish, proximal_phase, LambdaSchedule, PruneConfig, PruneMask, PruneReport,
};

/// Default OBS damping, as a fraction of the mean diagonal of the
/// preconditioned Hessian.
pub const DEFAULT_DAMP: f64 = 0.01;

/// Largest number of cells per row accepted by [`brute_force_mask_search`].
pub const MAX_SEARCH_CELLS: usize = 8;

fn check_problem(w_star: &Matrix, h: &Hessian) -> Result<()> {
    if !w_star.cols().is_multiple_of(4) {
        return Err(Error::NotCellAligned(w_star.cols()));
    }
    if h.dim() != w_star.cols() {
        return Err(Error::ShapeMismatch {
            expected: format!("hessian of dim {}", w_star.cols()),
            got: format!("hessian of dim {}", h.dim()),
        });
    }
    Ok(())
}

/// Indices of the two entries to prune: smallest scores, lower index first
/// among ties.
fn two_smallest(scores: &[f64]) -> [usize; 2] {
    let mut idx = [0usize, 1, 2, 3];
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    [idx[0], idx[1]]
}

/// WandA scores `S_ij = |W*_ij| H_jj^{1/2}`.
pub fn wanda_scores(w_star: &Matrix, h: &Hessian) -> Result<Matrix> {
    check_problem(w_star, h)?;
    let roots: Vec<f64> = h.diag().iter().map(|d| d.max(0.0).sqrt()).collect();
    let cols = w_star.cols();
    let data = w_star
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, v)| v.abs() * roots[i % cols])
        .collect();
    Matrix::new(w_star.rows(), cols, data)
}

/// Zeroes the two lowest-scoring weights of every cell; survivors keep their
/// dense values.
pub fn wanda_prune(w_star: &Matrix, h: &Hessian) -> Result<(Matrix, PruneMask)> {
    let scores = wanda_scores(w_star, h)?;
    let mut keep = vec![true; w_star.rows() * w_star.cols()];
    for (cell, s) in keep.chunks_mut(4).zip(scores.as_slice().chunks(4)) {
        for p in two_smallest(s) {
            cell[p] = false;
        }
    }
    let mask = PruneMask::new(w_star.rows(), w_star.cols(), keep)?;
    let w = mask.apply(w_star)?;
    Ok((w, mask))
}

/// OBS-style pruning in 4-column blocks from left to right.
///
/// Works in preconditioned coordinates on `H̃ + damp·mean(diag H̃)·I`; the
/// OBS scores and updates are invariant to the diagonal scaling, so only the
/// damping sees it. For each block the two columns per row
/// with the smallest `w_q² / [H_F⁻¹]_qq` are pruned, where `F` is the set of
/// columns not yet processed; every pruned weight's error is pushed onto the
/// still-unprocessed weights of its row through the inverse Hessian, and the
/// inverse is downdated as each column is frozen.
pub fn sparsegpt_prune(w_star: &Matrix, h: &Hessian, damp: f64) -> Result<(Matrix, PruneMask)> {
    check_problem(w_star, h)?;
    let (ws, hs, state) = precondition(w_star, h)?;
    let n = hs.dim();
    let shift = damp * hs.diag().iter().sum::<f64>() / n as f64;
    let mut hd = hs.matrix().as_slice().to_vec();
    for i in 0..n {
        hd[i * n + i] += shift;
    }
    let mut hinv = crate::linalg::spd_inverse(n, &hd)
        .ok_or_else(|| Error::Singular(format!("damped hessian (damp = {damp})")))?;

    let rows = ws.rows();
    let mut w = ws.into_vec();
    let mut keep = vec![true; rows * n];
    for block in (0..n).step_by(4) {
        // mask selection for the whole block from the current inverse
        w.par_chunks(n)
            .zip(keep.par_chunks_mut(n))
            .for_each(|(wr, kr)| {
                let scores: Vec<f64> =
                    (block..block + 4).map(|q| wr[q] * wr[q] / hinv[q * n + q]).collect();
                for p in two_smallest(&scores) {
                    kr[block + p] = false;
                }
            });
        for q in block..block + 4 {
            let d = hinv[q * n + q];
            let col: Vec<f64> = (0..n).map(|j| hinv[j * n + q]).collect();
            w.par_chunks_mut(n)
                .zip(keep.par_chunks(n))
                .for_each(|(wr, kr)| {
                    if !kr[q] {
                        let e = wr[q] / d;
                        for j in (q + 1)..n {
                            wr[j] -= e * col[j];
                        }
                        wr[q] = 0.0;
                    }
                });
            // remove q from the remaining set
            for i in q..n {
                for j in q..n {
                    hinv[i * n + j] -= col[i] * col[j] / d;
                }
            }
        }
    }
    let out = unprecondition(&Matrix::new(rows, n, w)?, &state)?;
    let mask = PruneMask::new(rows, n, keep)?;
    Ok((out, mask))
}

/// Proximal-gradient pruning with one of the separable regularizers in place
/// of the exact 2:4 prox. R2 never produces exact zeros, so it always runs to
/// `cfg.max_iter` and is then clamped.
pub fn simple_reg_prune(
    w_star: &Matrix,
    h: &Hessian,
    kind: SimpleReg,
    schedule: &LambdaSchedule,
    cfg: &PruneConfig,
) -> Result<(Matrix, PruneMask, PruneReport)> {
    check_problem(w_star, h)?;
    let (ws, hs, state) = precondition(w_star, h)?;
    let run = proximal_phase(&ws, &hs, schedule, cfg, |c, lambda| {
        let (sorted, sp) = pos_sort(c);
        Ok((inv_pos_sort(&prox_simple(&sorted, lambda, kind), &sp), false))
    })?;
    finish(run, &ws, &hs, &state, cfg)
}

/// The six ways to keep two of four positions, in lexicographic order.
const PAIRS: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Minimum of the row loss over weights supported on `kept`, and the
/// minimizing row. Uses a pseudo-inverse when `H_KK` is singular.
fn fit_row(w_star: &[f64], h: &Hessian, kept: &[usize], pruned: &[usize]) -> (f64, Vec<f64>) {
    let nk = kept.len();
    // δ_P = −w*_P; b = H_KP δ_P
    let dp: Vec<f64> = pruned.iter().map(|&p| -w_star[p]).collect();
    let b: Vec<f64> = kept
        .iter()
        .map(|&k| pruned.iter().zip(&dp).map(|(&p, d)| h.get(k, p) * d).sum())
        .collect();
    let mut hkk = vec![0.0; nk * nk];
    for (a, &i) in kept.iter().enumerate() {
        for (c, &j) in kept.iter().enumerate() {
            hkk[a * nk + c] = h.get(i, j);
        }
    }
    let x = match cholesky(nk, &hkk) {
        Some(l) => cholesky_solve(nk, &l, &b),
        None => {
            let (vals, vecs) = symmetric_eigen(nk, &hkk);
            let cut = vals.last().copied().unwrap_or(0.0).abs() * 1e-12;
            let mut x = vec![0.0; nk];
            for (e, &lam) in vals.iter().enumerate() {
                if lam <= cut {
                    continue;
                }
                let proj: f64 = (0..nk).map(|r| vecs[r * nk + e] * b[r]).sum::<f64>() / lam;
                for r in 0..nk {
                    x[r] += proj * vecs[r * nk + e];
                }
            }
            x
        }
    };
    let mut pp = 0.0;
    for (a, &i) in pruned.iter().enumerate() {
        for (c, &j) in pruned.iter().enumerate() {
            pp += dp[a] * h.get(i, j) * dp[c];
        }
    }
    let bx: f64 = b.iter().zip(&x).map(|(p, q)| p * q).sum();
    let mut row = vec![0.0; w_star.len()];
    for (a, &k) in kept.iter().enumerate() {
        row[k] = w_star[k] - x[a];
    }
    ((pp - bx).max(0.0), row)
}

/// Best weights on a fixed mask: each row solves its least-squares problem
/// restricted to the kept coordinates exactly.
pub fn fit_to_mask(w_star: &Matrix, h: &Hessian, mask: &PruneMask) -> Result<(Matrix, f64)> {
    check_problem(w_star, h)?;
    let n = w_star.cols();
    let mut data = Vec::with_capacity(w_star.rows() * n);
    let mut total = 0.0;
    for r in 0..w_star.rows() {
        let kept: Vec<usize> = (0..n).filter(|&c| mask.keep(r, c)).collect();
        let pruned: Vec<usize> = (0..n).filter(|&c| !mask.keep(r, c)).collect();
        let (loss, row) = fit_row(w_star.row(r), h, &kept, &pruned);
        total += loss;
        data.extend(row);
    }
    Ok((Matrix::new(w_star.rows(), n, data)?, total))
}

/// Exhaustive search over all 2:4 masks (`6^{cells}` per row), refitting the
/// kept weights exactly for each. Returns the best mask and its loss.
pub fn brute_force_mask_search(w_star: &Matrix, h: &Hessian) -> Result<(PruneMask, f64)> {
    check_problem(w_star, h)?;
    let n = w_star.cols();
    let cells = n / 4;
    if cells > MAX_SEARCH_CELLS {
        return Err(Error::TooLarge(cells));
    }
    let total = 6usize.pow(cells as u32);
    let per_row: Vec<(f64, Vec<bool>)> = (0..w_star.rows())
        .into_par_iter()
        .map(|r| {
            let row = w_star.row(r);
            let mut best = (f64::INFINITY, vec![false; n]);
            for code in 0..total {
                let mut keep = vec![false; n];
                let mut c = code;
                for cell in 0..cells {
                    for p in PAIRS[c % 6] {
                        keep[cell * 4 + p] = true;
                    }
                    c /= 6;
                }
                let kept: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
                let pruned: Vec<usize> = (0..n).filter(|&i| !keep[i]).collect();
                let (loss, _) = fit_row(row, h, &kept, &pruned);
                if loss < best.0 {
                    best = (loss, keep);
                }
            }
            best
        })
        .collect();
    let loss = per_row.iter().map(|(l, _)| l).sum();
    let keep = per_row.into_iter().flat_map(|(_, k)| k).collect();
    Ok((PruneMask::new(w_star.rows(), n, keep)?, loss))
}
