//! The smooth sorted-cell objective and its derivatives.
//!
//! On a nonnegative sorted cell the 2:4 regularizer is the third elementary
//! symmetric polynomial `e3(w)`. The same expressions cover both the dense
//! 4-vector problem `f` and the 3-vector problem `g` (fourth weight pinned to
//! zero), so everything here is generic over the length.

use crate::error::{Error, Result};

/// `r_{N:M}(w) = Σ_{|S| = N+1} Π_{j∈S} |w_j|` with `M = w.len()`.
pub fn regularizer_rnm(w: &[f64], n: usize) -> Result<f64> {
    let m = w.len();
    if n == 0 || n >= m {
        return Err(Error::InvalidPattern { n, m });
    }
    // elementary symmetric polynomials of |w| up to degree n+1
    let k = n + 1;
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &x in w {
        let a = x.abs();
        for d in (1..=k).rev() {
            e[d] += e[d - 1] * a;
        }
    }
    Ok(e[k])
}

/// `r_{2:4}` on a cell.
pub fn r24(w: &[f64; 4]) -> f64 {
    let a = w.map(f64::abs);
    a[0] * a[1] * a[2] + a[1] * a[2] * a[3] + a[2] * a[3] * a[0] + a[3] * a[0] * a[1]
}

#[inline]
pub(crate) fn e3<const N: usize>(w: &[f64; N]) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        for j in (i + 1)..N {
            for k in (j + 1)..N {
                s += w[i] * w[j] * w[k];
            }
        }
    }
    s
}

/// `½‖w − z‖² + λ e3(w)`.
#[inline]
pub fn objective<const N: usize>(w: &[f64; N], z: &[f64; N], lambda: f64) -> f64 {
    let q: f64 = w.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
    0.5 * q + lambda * e3(w)
}

/// `∇_i = w_i − z_i + λ e2(w without i)`.
#[inline]
pub fn gradient<const N: usize>(w: &[f64; N], z: &[f64; N], lambda: f64) -> [f64; N] {
    let mut g = [0.0; N];
    for i in 0..N {
        let mut e2 = 0.0;
        for j in 0..N {
            if j == i {
                continue;
            }
            for k in (j + 1)..N {
                if k == i {
                    continue;
                }
                e2 += w[j] * w[k];
            }
        }
        g[i] = w[i] - z[i] + lambda * e2;
    }
    g
}

/// Unit diagonal, off-diagonal `(i, j)` equal to `λ Σ_{k ∉ {i,j}} w_k`.
pub fn hessian<const N: usize>(w: &[f64; N], lambda: f64) -> [[f64; N]; N] {
    let total: f64 = w.iter().sum();
    let mut h = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            h[i][j] = if i == j { 1.0 } else { lambda * (total - w[i] - w[j]) };
        }
    }
    h
}

/// Hessian of the dense sorted-cell objective `f`.
pub fn hessian_f(w: &[f64; 4], lambda: f64) -> [[f64; 4]; 4] {
    hessian(w, lambda)
}

/// Hessian of the 3-sparse objective `g`.
pub fn hessian_g(w: &[f64; 3], lambda: f64) -> [[f64; 3]; 3] {
    hessian(w, lambda)
}

/// `f(w)` of the sorted problem.
pub fn f_value(w: &[f64; 4], z: &[f64; 4], lambda: f64) -> f64 {
    objective(w, z, lambda)
}

/// `g(w)` of the 3-sparse problem.
pub fn g_value(w: &[f64; 3], z: &[f64; 3], lambda: f64) -> f64 {
    objective(w, z, lambda)
}
