//! Dense matrix primitives, the layerwise reconstruction loss and its
//! gradient, spectral step sizes and the diagonal preconditioning transform.
//!
//! Everything is 64-bit and row-major. Row-parallel work always reduces in
//! row order so results do not depend on the thread count.

use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default relative tolerance for the cached largest eigenvalue.
pub const GAMMA_TOL: f64 = 1e-6;
/// Iteration cap for power iteration.
pub const POWER_MAX_ITER: usize = 1000;
/// Diagonal entries at or below this value are clamped before preconditioning.
pub const PRECOND_EPS: f64 = 1e-8;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting bad lengths and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidData(format!("empty shape {rows}x{cols}")));
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or(Error::DimensionOverflow { rows: rows as u64, cols: cols as u64 })?;
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected} entries"),
                got: format!("{} entries", data.len()),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite entry at index {pos}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Builds a matrix from a slice of equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::ShapeMismatch {
                    expected: format!("{cols} columns"),
                    got: format!("{} columns", r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// Elementwise map producing a new matrix of the same shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn mean_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                got: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(())
    }
}

/// Symmetric positive semidefinite layer Hessian `X Xᵀ / n` with a lazily
/// cached largest eigenvalue.
#[derive(Clone)]
pub struct Hessian {
    m: Matrix,
    gamma_max: OnceLock<f64>,
}

impl fmt::Debug for Hessian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hessian")
            .field("dim", &self.dim())
            .field("gamma_max", &self.gamma_max.get())
            .field("data", &self.m)
            .finish()
    }
}

impl Hessian {
    /// Wraps a square matrix, checking symmetry to 1e-12 relative to the
    /// largest entry.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::ShapeMismatch {
                expected: "square matrix".into(),
                got: format!("{}x{}", m.rows, m.cols),
            });
        }
        let n = m.rows;
        let scale = m.data.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        for i in 0..n {
            for j in (i + 1)..n {
                if (m.get(i, j) - m.get(j, i)).abs() > 1e-12 * scale {
                    return Err(Error::InvalidData(format!("hessian not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { m, gamma_max: OnceLock::new() })
    }

    pub fn identity(n: usize) -> Self {
        Self { m: Matrix::identity(n), gamma_max: OnceLock::new() }
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::new(diag.len(), diag.len(), Matrix::from_diag(diag).data)?)
    }

    pub fn dim(&self) -> usize {
        self.m.rows
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m.get(i, j)
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// Largest eigenvalue, computed once by power iteration at [`GAMMA_TOL`].
    ///
    /// If power iteration hits its cap the best Rayleigh-quotient estimate is
    /// cached instead; it is a lower bound within the convergence gap, which
    /// keeps `1 / (2 gamma)` a stable gradient step.
    pub fn gamma_max(&self) -> f64 {
        *self.gamma_max.get_or_init(|| match max_eigenvalue(self, GAMMA_TOL) {
            Ok(g) => g,
            Err(Error::EigenNotConverged { estimate, .. }) => estimate,
            Err(_) => unreachable!("power iteration only fails by non-convergence"),
        })
    }

    /// Returns the cached eigenvalue if it has been computed.
    pub fn cached_gamma_max(&self) -> Option<f64> {
        self.gamma_max.get().copied()
    }
}

/// Per-column scales `sqrt(H_jj)` of the diagonal preconditioner.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecondState {
    pub diag_scales: Vec<f64>,
}

/// `H = X Xᵀ / n` for `X` of shape `d_i × n`.
pub fn hessian_from_data(x: &Matrix) -> Result<Hessian> {
    let (d, n) = x.shape();
    if n == 0 || d == 0 {
        return Err(Error::NoSamples);
    }
    let mut h = Matrix::zeros(d, d);
    let inv_n = 1.0 / n as f64;
    for i in 0..d {
        let xi = x.row(i);
        for j in i..d {
            let xj = x.row(j);
            let s: f64 = xi.iter().zip(xj).map(|(a, b)| a * b).sum::<f64>() * inv_n;
            h.set(i, j, s);
            h.set(j, i, s);
        }
    }
    Hessian::new(h)
}

fn check_loss_shapes(w: &Matrix, w_star: &Matrix, h: &Hessian) -> Result<()> {
    w.check_same_shape(w_star)?;
    if h.dim() != w.cols {
        return Err(Error::ShapeMismatch {
            expected: format!("hessian of dim {}", w.cols),
            got: format!("hessian of dim {}", h.dim()),
        });
    }
    Ok(())
}

/// Row vector times symmetric matrix: `out = v H`.
fn row_times_h(v: &[f64], h: &Matrix, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (k, &vk) in v.iter().enumerate() {
        if vk == 0.0 {
            continue;
        }
        for (o, &hk) in out.iter_mut().zip(h.row(k)) {
            *o += vk * hk;
        }
    }
}

/// Quadratic form `v H vᵀ` for one row.
pub(crate) fn quad_form(v: &[f64], h: &Matrix) -> f64 {
    let mut tmp = vec![0.0; v.len()];
    row_times_h(v, h, &mut tmp);
    v.iter().zip(&tmp).map(|(a, b)| a * b).sum()
}

/// `Tr((W − W*) H (W − W*)ᵀ)`.
pub fn layer_loss(w: &Matrix, w_star: &Matrix, h: &Hessian) -> Result<f64> {
    check_loss_shapes(w, w_star, h)?;
    let cols = w.cols;
    let per_row: Vec<f64> = w
        .data
        .par_chunks(cols)
        .zip(w_star.data.par_chunks(cols))
        .map(|(wr, sr)| {
            let delta: Vec<f64> = wr.iter().zip(sr).map(|(a, b)| a - b).collect();
            quad_form(&delta, &h.m)
        })
        .collect();
    // fixed reduction order
    Ok(per_row.iter().sum())
}

/// `2 (W − W*) H`.
pub fn loss_gradient(w: &Matrix, w_star: &Matrix, h: &Hessian) -> Result<Matrix> {
    check_loss_shapes(w, w_star, h)?;
    let cols = w.cols;
    let mut g = Matrix::zeros(w.rows, cols);
    g.data
        .par_chunks_mut(cols)
        .zip(w.data.par_chunks(cols).zip(w_star.data.par_chunks(cols)))
        .for_each(|(gr, (wr, sr))| {
            let delta: Vec<f64> = wr.iter().zip(sr).map(|(a, b)| a - b).collect();
            row_times_h(&delta, &h.m, gr);
            gr.iter_mut().for_each(|v| *v *= 2.0);
        });
    Ok(g)
}

/// In-place gradient step `W ← W − η · 2 (W H − W* H)`, optionally restricted
/// to a 0/1 mask. `w_star_h` is the precomputed `W* H`.
pub(crate) fn gradient_step(
    w: &mut Matrix,
    w_star_h: &Matrix,
    h: &Hessian,
    eta: f64,
    mask: Option<&[bool]>,
) {
    let cols = w.cols;
    let hm = &h.m;
    w.data
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(r, wr)| {
            let mut wh = vec![0.0; cols];
            row_times_h(wr, hm, &mut wh);
            let sh = w_star_h.row(r);
            match mask {
                Some(m) => {
                    let mr = &m[r * cols..(r + 1) * cols];
                    for j in 0..cols {
                        if mr[j] {
                            wr[j] -= eta * 2.0 * (wh[j] - sh[j]);
                        }
                    }
                }
                None => {
                    for j in 0..cols {
                        wr[j] -= eta * 2.0 * (wh[j] - sh[j]);
                    }
                }
            }
        });
}

/// `W H` for a full matrix.
pub(crate) fn times_h(w: &Matrix, h: &Hessian) -> Matrix {
    let cols = w.cols;
    let mut out = Matrix::zeros(w.rows, cols);
    out.data
        .par_chunks_mut(cols)
        .zip(w.data.par_chunks(cols))
        .for_each(|(o, wr)| row_times_h(wr, &h.m, o));
    out
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// Starts from the normalized all-ones vector and stops once the eigen
/// residual `‖Hv − ρv‖` drops below `tol · ρ`. After [`POWER_MAX_ITER`]
/// iterations the best estimate is returned inside the error.
pub fn max_eigenvalue(h: &Hessian, tol: f64) -> Result<f64> {
    max_eigenvalue_capped(h, tol, POWER_MAX_ITER)
}

pub fn max_eigenvalue_capped(h: &Hessian, tol: f64, max_iter: usize) -> Result<f64> {
    let n = h.dim();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut hv = vec![0.0; n];
    let mut rho = 0.0;
    for _ in 0..max_iter {
        row_times_h(&v, &h.m, &mut hv);
        rho = v.iter().zip(&hv).map(|(a, b)| a * b).sum::<f64>();
        let norm = hv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            // v lies in the null space; for a PSD matrix with all-ones start
            // this only happens for the zero matrix
            return Ok(0.0);
        }
        let resid = v
            .iter()
            .zip(&hv)
            .map(|(a, b)| (b - rho * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if resid <= tol * rho.abs() {
            return Ok(rho);
        }
        for (vi, hi) in v.iter_mut().zip(&hv) {
            *vi = hi / norm;
        }
    }
    Err(Error::EigenNotConverged { iterations: max_iter, estimate: rho })
}

/// Diagonal preconditioning: `W*_ij ↦ W*_ij s_j`, `H_ij ↦ H_ij / (s_i s_j)`
/// with `s_j = sqrt(max(H_jj, ε))`.
pub fn precondition(w_star: &Matrix, h: &Hessian) -> Result<(Matrix, Hessian, PrecondState)> {
    check_loss_shapes(w_star, w_star, h)?;
    let n = h.dim();
    let scales: Vec<f64> = (0..n).map(|j| h.get(j, j).max(PRECOND_EPS).sqrt()).collect();
    let mut w = w_star.clone();
    for row in w.data.chunks_mut(n) {
        for (x, s) in row.iter_mut().zip(&scales) {
            *x *= s;
        }
    }
    let mut hm = h.m.clone();
    for i in 0..n {
        for j in 0..n {
            let v = h.get(i, j) / (scales[i] * scales[j]);
            hm.set(i, j, v);
        }
    }
    Ok((w, Hessian { m: hm, gamma_max: OnceLock::new() }, PrecondState { diag_scales: scales }))
}

/// Reverses [`precondition`] on a weight matrix.
pub fn unprecondition(w: &Matrix, state: &PrecondState) -> Result<Matrix> {
    if w.cols != state.diag_scales.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", state.diag_scales.len()),
            got: format!("{} columns", w.cols),
        });
    }
    let mut out = w.clone();
    for row in out.data.chunks_mut(w.cols) {
        for (x, s) in row.iter_mut().zip(&state.diag_scales) {
            *x /= s;
        }
    }
    Ok(out)
}

/// Eigenvalues (ascending) and column eigenvectors of a symmetric matrix
/// stored row-major in `a` (cyclic Jacobi rotations).
pub fn symmetric_eigen(n: usize, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = a[i * n + j] * a[i * n + j];
                total += x;
                if i != j {
                    off += x;
                }
            }
        }
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let vals = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + new_c] = v[r * n + old_c];
        }
    }
    (vals, vecs)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    let (vals, _) = symmetric_eigen(m.rows, &m.data);
    vals[0]
}

/// True iff the smallest eigenvalue of the symmetric matrix `m` is ≥ −tol.
pub fn is_psd(m: &Matrix, tol: f64) -> bool {
    m.rows == m.cols && min_eigenvalue(m) >= -tol
}

/// Lower Cholesky factor of an `n × n` SPD matrix, `None` if a pivot is not
/// strictly positive.
pub fn cholesky(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the lower factor.
pub fn cholesky_solve(n: usize, l: &[f64], b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Inverse of an SPD matrix via Cholesky.
pub fn spd_inverse(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let l = cholesky(n, a)?;
    let mut inv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for c in 0..n {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[c] = 1.0;
        let col = cholesky_solve(n, &l, &e);
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    // symmetrize away rounding
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (inv[i * n + j] + inv[j * n + i]);
            inv[i * n + j] = m;
            inv[j * n + i] = m;
        }
    }
    Some(inv)
}
