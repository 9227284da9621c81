//! Matrix-level 2:4 pruning by proximal gradient.
//!
//! Each outer iteration takes one gradient step on the layer loss and then
//! applies the cell prox with an exponentially growing `λ_k` to every aligned
//! group of four weights. Once every cell is 2-sparse the support is frozen
//! and the surviving weights are refit by masked gradient descent. All of this
//! runs on diagonally preconditioned weights and Hessian.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    gradient_step, layer_loss, precondition, times_h, unprecondition, Hessian, Matrix,
};
use crate::prox::{inv_pos_sort, pos_sort, prox_enumerate_with, ProxOptions};

pub const DEFAULT_LAMBDA0: f64 = 0.01;
pub const DEFAULT_BETA: f64 = 1.01;
pub const DEFAULT_GD_STEPS: usize = 1000;
pub const DEFAULT_MAX_ITER: usize = 5000;

/// Exponential regularization schedule `λ_k = λ₀ β^k`.
///
/// With `adaptive` set, `λ₀` is replaced by `lambda0_tilde / mean(|W*|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSchedule {
    pub lambda0: f64,
    pub beta: f64,
    pub adaptive: bool,
    pub lambda0_tilde: f64,
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        Self { lambda0: DEFAULT_LAMBDA0, beta: DEFAULT_BETA, adaptive: false, lambda0_tilde: 1e-3 }
    }
}

impl LambdaSchedule {
    pub fn new(lambda0: f64, beta: f64) -> Result<Self> {
        let s = Self { lambda0, beta, ..Default::default() };
        s.validate()?;
        Ok(s)
    }

    pub fn adaptive(lambda0_tilde: f64, beta: f64) -> Result<Self> {
        let s = Self { lambda0: DEFAULT_LAMBDA0, beta, adaptive: true, lambda0_tilde };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let start = if self.adaptive { self.lambda0_tilde } else { self.lambda0 };
        if !(start > 0.0 && start.is_finite()) {
            return Err(Error::InvalidArgument(format!("initial lambda must be > 0, got {start}")));
        }
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be > 1, got {}", self.beta)));
        }
        Ok(())
    }

    /// The effective `λ₀` for a given reference matrix.
    pub fn base(&self, w_star: &Matrix) -> Result<f64> {
        if !self.adaptive {
            return Ok(self.lambda0);
        }
        let mean = w_star.mean_abs();
        if mean == 0.0 {
            return Err(Error::ZeroMeanWeights);
        }
        Ok(self.lambda0_tilde / mean)
    }
}

/// `λ_k` of the schedule for reference weights `w_star`.
pub fn schedule_lambda(s: &LambdaSchedule, k: usize, w_star: &Matrix) -> Result<f64> {
    Ok(s.base(w_star)? * s.beta.powi(k as i32))
}

/// Binary keep-mask satisfying the 2:4 constraint on every cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneMask {
    rows: usize,
    cols: usize,
    keep: Vec<bool>,
}

impl PruneMask {
    pub fn new(rows: usize, cols: usize, keep: Vec<bool>) -> Result<Self> {
        if !cols.is_multiple_of(4) {
            return Err(Error::NotCellAligned(cols));
        }
        if keep.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{} mask entries", rows * cols),
                got: format!("{}", keep.len()),
            });
        }
        if let Some(c) = keep.chunks(4).position(|c| c.iter().filter(|k| **k).count() > 2) {
            return Err(Error::InvalidData(format!("cell {c} keeps more than 2 entries")));
        }
        Ok(Self { rows, cols, keep })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn keep(&self, r: usize, c: usize) -> bool {
        self.keep[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.keep
    }

    /// The mask as a 0/1 matrix.
    pub fn to_matrix(&self) -> Matrix {
        let data = self.keep.iter().map(|&k| if k { 1.0 } else { 0.0 }).collect();
        Matrix::new(self.rows, self.cols, data).expect("mask shape is valid")
    }

    /// `W ⊙ M`.
    pub fn apply(&self, w: &Matrix) -> Result<Matrix> {
        if w.shape() != self.shape() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                got: format!("{}x{}", w.rows(), w.cols()),
            });
        }
        let data = w
            .as_slice()
            .iter()
            .zip(&self.keep)
            .map(|(&v, &k)| if k { v } else { 0.0 })
            .collect();
        Matrix::new(w.rows(), w.cols(), data)
    }

    pub fn pruned_count(&self) -> usize {
        self.keep.iter().filter(|k| !**k).count()
    }
}

fn check_aligned(w: &Matrix) -> Result<()> {
    if !w.cols().is_multiple_of(4) {
        return Err(Error::NotCellAligned(w.cols()));
    }
    Ok(())
}

/// True iff every aligned cell has at most two entries with `|w| > eps`.
pub fn is_24_sparse(w: &Matrix, eps: f64) -> Result<bool> {
    check_aligned(w)?;
    Ok(w.as_slice().chunks(4).all(|c| c.iter().filter(|v| v.abs() > eps).count() <= 2))
}

/// Marks entries with `|w| > eps`; fails if a cell has more than two.
pub fn mask_of(w: &Matrix, eps: f64) -> Result<PruneMask> {
    check_aligned(w)?;
    let keep = w.as_slice().iter().map(|v| v.abs() > eps).collect();
    PruneMask::new(w.rows(), w.cols(), keep)
}

/// Keeps the two largest-magnitude entries of every cell (earlier position
/// wins ties).
pub fn clamp_to_24(w: &Matrix) -> Result<Matrix> {
    check_aligned(w)?;
    let mut out = w.clone();
    for cell in out.as_mut_slice().chunks_mut(4) {
        let c: [f64; 4] = (&*cell).try_into().expect("cell of four");
        let (_, sp) = pos_sort(&c);
        cell[sp.perm[2]] = 0.0;
        cell[sp.perm[3]] = 0.0;
    }
    Ok(out)
}

/// Why the proximal loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    SparsityReached,
    /// The iteration cap was hit; each cell was clamped to its two largest
    /// entries before masked GD.
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Proximal,
    MaskedGd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossPoint {
    pub phase: Phase,
    pub iteration: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneReport {
    pub iterations: usize,
    pub final_lambda: f64,
    pub loss_trace: Vec<LossPoint>,
    pub terminated_by: Termination,
    /// Cell solves that needed the barrier fallback.
    pub fallback_cells: usize,
}

impl PruneReport {
    /// Loss after the last masked-GD step.
    pub fn final_loss(&self) -> f64 {
        self.loss_trace.last().map(|p| p.loss).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneConfig {
    pub max_iter: usize,
    pub gd_steps: usize,
    /// Record the loss every this many proximal iterations / GD steps.
    pub trace_every: usize,
    pub prox: ProxOptions,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            gd_steps: DEFAULT_GD_STEPS,
            trace_every: 10,
            prox: ProxOptions::default(),
        }
    }
}

fn step_size(h: &Hessian) -> f64 {
    let g = h.gamma_max();
    if g > 0.0 {
        1.0 / (2.0 * g)
    } else {
        0.0
    }
}

fn check_problem(w_star: &Matrix, h: &Hessian) -> Result<()> {
    check_aligned(w_star)?;
    if h.dim() != w_star.cols() {
        return Err(Error::ShapeMismatch {
            expected: format!("hessian of dim {}", w_star.cols()),
            got: format!("hessian of dim {}", h.dim()),
        });
    }
    Ok(())
}

/// Outcome of the proximal phase on preconditioned quantities.
pub(crate) struct ProximalRun {
    pub w: Matrix,
    pub iterations: usize,
    pub final_lambda: f64,
    pub terminated_by: Termination,
    pub trace: Vec<LossPoint>,
    pub fallback_cells: usize,
}

/// Runs gradient step + cellwise prox until every cell is 2-sparse or the
/// cap is hit. `cell_prox` maps a raw cell and `λ` to the new cell and a
/// fallback flag.
pub(crate) fn proximal_phase<F>(
    w_star: &Matrix,
    h: &Hessian,
    schedule: &LambdaSchedule,
    cfg: &PruneConfig,
    cell_prox: F,
) -> Result<ProximalRun>
where
    F: Fn(&[f64; 4], f64) -> Result<([f64; 4], bool)> + Sync,
{
    let eta = step_size(h);
    let base = schedule.base(w_star)?;
    let w_star_h = times_h(w_star, h);
    let every = cfg.trace_every.max(1);
    let mut w = w_star.clone();
    let mut trace = vec![LossPoint { phase: Phase::Proximal, iteration: 0, loss: 0.0 }];
    let mut k = 0;
    let mut lambda = base;
    let mut fallback_cells = 0;
    let terminated_by = loop {
        if is_24_sparse(&w, 0.0)? {
            break Termination::SparsityReached;
        }
        if k >= cfg.max_iter {
            break Termination::MaxIter;
        }
        lambda = base * schedule.beta.powi(k as i32);
        gradient_step(&mut w, &w_star_h, h, eta, None);
        let fallbacks: usize = w
            .as_mut_slice()
            .par_chunks_mut(w_star.cols())
            .map(|row| -> Result<usize> {
                let mut n = 0;
                for cell in row.chunks_mut(4) {
                    let c: [f64; 4] = (&*cell).try_into().expect("cell of four");
                    let (out, fb) = cell_prox(&c, lambda)?;
                    cell.copy_from_slice(&out);
                    n += usize::from(fb);
                }
                Ok(n)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();
        fallback_cells += fallbacks;
        k += 1;
        if k % every == 0 {
            trace.push(LossPoint {
                phase: Phase::Proximal,
                iteration: k,
                loss: layer_loss(&w, w_star, h)?,
            });
        }
    };
    if terminated_by == Termination::MaxIter {
        w = clamp_to_24(&w)?;
    }
    if trace.last().map(|p| p.iteration) != Some(k) || k == 0 {
        trace.push(LossPoint { phase: Phase::Proximal, iteration: k, loss: layer_loss(&w, w_star, h)? });
    }
    trace.remove(0);
    Ok(ProximalRun { w, iterations: k, final_lambda: lambda, terminated_by, trace, fallback_cells })
}

/// Masked GD on already-matching quantities, appending to `trace`.
fn masked_gd_inner(
    mut w: Matrix,
    w_star: &Matrix,
    h: &Hessian,
    mask: &PruneMask,
    steps: usize,
    every: usize,
    trace: &mut Vec<LossPoint>,
) -> Result<Matrix> {
    let eta = step_size(h);
    let w_star_h = times_h(w_star, h);
    trace.push(LossPoint { phase: Phase::MaskedGd, iteration: 0, loss: layer_loss(&w, w_star, h)? });
    for s in 1..=steps {
        gradient_step(&mut w, &w_star_h, h, eta, Some(mask.as_slice()));
        if s % every == 0 || s == steps {
            trace.push(LossPoint {
                phase: Phase::MaskedGd,
                iteration: s,
                loss: layer_loss(&w, w_star, h)?,
            });
        }
    }
    Ok(w)
}

fn check_mask(w: &Matrix, mask: &PruneMask) -> Result<()> {
    if w.shape() != mask.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", mask.rows(), mask.cols()),
            got: format!("{}x{}", w.rows(), w.cols()),
        });
    }
    if w.as_slice().iter().zip(mask.as_slice()).any(|(v, k)| !k && *v != 0.0) {
        return Err(Error::InvalidArgument("weights do not respect the mask".into()));
    }
    Ok(())
}

/// `steps` updates `W ← W − η · 2 M ⊙ (W H − W* H)` with `η = 1/(2 γ_max(H))`.
/// Entries outside the mask stay exactly zero.
pub fn masked_gd(
    w: &Matrix,
    w_star: &Matrix,
    h: &Hessian,
    mask: &PruneMask,
    steps: usize,
) -> Result<Matrix> {
    masked_gd_traced(w, w_star, h, mask, steps, usize::MAX).map(|(w, _)| w)
}

/// [`masked_gd`] that also returns `(step, loss)` every `every` steps
/// (always including the start and the end).
pub fn masked_gd_traced(
    w: &Matrix,
    w_star: &Matrix,
    h: &Hessian,
    mask: &PruneMask,
    steps: usize,
    every: usize,
) -> Result<(Matrix, Vec<LossPoint>)> {
    check_problem(w_star, h)?;
    check_mask(w, mask)?;
    let mut trace = Vec::new();
    let out = masked_gd_inner(w.clone(), w_star, h, mask, steps, every.max(1), &mut trace)?;
    Ok((out, trace))
}

/// Masked GD in the diagonally preconditioned coordinates, as used for every
/// pruner's "+GD" refinement.
pub fn refine_with_masked_gd(
    w: &Matrix,
    w_star: &Matrix,
    h: &Hessian,
    mask: &PruneMask,
    steps: usize,
) -> Result<Matrix> {
    check_problem(w_star, h)?;
    check_mask(w, mask)?;
    let (ws, hs, state) = precondition(w_star, h)?;
    let scaled = Matrix::new(
        w.rows(),
        w.cols(),
        w.as_slice()
            .iter()
            .enumerate()
            .map(|(i, v)| v * state.diag_scales[i % w.cols()])
            .collect(),
    )?;
    let mut trace = Vec::new();
    let out = masked_gd_inner(scaled, &ws, &hs, mask, steps, usize::MAX, &mut trace)?;
    unprecondition(&out, &state)
}

/// Shared tail of the proximal pruners: freeze the mask, refit, undo the
/// preconditioning.
pub(crate) fn finish(
    run: ProximalRun,
    w_star_pre: &Matrix,
    h_pre: &Hessian,
    state: &crate::linalg::PrecondState,
    cfg: &PruneConfig,
) -> Result<(Matrix, PruneMask, PruneReport)> {
    let ProximalRun { w, iterations, final_lambda, terminated_by, mut trace, fallback_cells } = run;
    let mask = mask_of(&w, 0.0)?;
    let w = masked_gd_inner(w, w_star_pre, h_pre, &mask, cfg.gd_steps, cfg.trace_every.max(1) * 10, &mut trace)?;
    let w = unprecondition(&w, state)?;
    // unpreconditioning is a positive column scaling; zeros stay exact
    let report = PruneReport { iterations, final_lambda, loss_trace: trace, terminated_by, fallback_cells };
    Ok((w, mask, report))
}

/// Prunes `W*` to 2:4 sparsity by proximal gradient on the layer loss.
pub fn prune_prox(
    w_star: &Matrix,
    h: &Hessian,
    schedule: &LambdaSchedule,
    cfg: &PruneConfig,
) -> Result<(Matrix, PruneMask, PruneReport)> {
    check_problem(w_star, h)?;
    let (ws, hs, state) = precondition(w_star, h)?;
    let opts = cfg.prox;
    let run = proximal_phase(&ws, &hs, schedule, cfg, |c, lambda| {
        let (sorted, sp) = pos_sort(c);
        let r = prox_enumerate_with(&sorted, lambda, &opts)?;
        Ok((inv_pos_sort(&r.w, &sp), r.used_fallback))
    })?;
    finish(run, &ws, &hs, &state, cfg)
}
