//! The 2:4 proximal operator on a single cell of four weights.
//!
//! A general cell is reduced to a sorted nonnegative one by [`pos_sort`]; the
//! sorted problem is solved by enumerating its three possible supports
//! ([`prox_enumerate`]) and the answer is mapped back with [`inv_pos_sort`].

mod enumerate;
mod gd;
mod ipm;
mod objective;
mod oracle;
mod simple;
mod sort;

pub use enumerate::{
    kkt_check, lambda_thresholds, prox_enumerate, prox_enumerate_with, prox_full, prox_full_with,
    Backend, ProxOptions,
};
pub use gd::{solve_case_gd, solve_case_gd_traced};
pub use ipm::solve_case_ipm;
pub use objective::{
    f_value, g_value, gradient, hessian, hessian_f, hessian_g, objective, r24, regularizer_rnm,
};
pub use oracle::brute_force_prox_oracle;
pub use simple::{prox_simple, SimpleReg};
pub use sort::{inv_pos_sort, pos_sort, SignedPerm};

use crate::error::{Error, Result};

/// GD step size for both cell problems.
pub const GD_STEP: f64 = 0.25;
/// Projected-gradient residual at which a cell solve counts as converged.
pub const CELL_TOL: f64 = 1e-10;
/// Iteration cap for a cell solve.
pub const CELL_MAX_ITER: usize = 2000;

/// A cell with `z₁ ≥ z₂ ≥ z₃ ≥ z₄ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SortedCell([f64; 4]);

impl SortedCell {
    pub fn new(z: [f64; 4]) -> Result<Self> {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite cell {z:?}")));
        }
        if z[3] < 0.0 || z.windows(2).any(|p| p[0] < p[1]) {
            return Err(Error::InvalidArgument(format!("cell not sorted nonnegative: {z:?}")));
        }
        Ok(Self(z))
    }

    /// Builds from values already known to be sorted and nonnegative.
    pub(crate) fn new_unchecked(z: [f64; 4]) -> Self {
        debug_assert!(z[3] >= 0.0 && z.windows(2).all(|p| p[0] >= p[1]));
        Self(z)
    }

    pub fn values(&self) -> [f64; 4] {
        self.0
    }

    pub(crate) fn head3(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    /// Threshold below which a solver coordinate is treated as zero.
    pub fn positivity_floor(&self) -> f64 {
        1e-12 * self.0[0].max(1.0)
    }
}

/// Which support the prox solution has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    TwoSparse,
    ThreeSparse,
    Dense,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::TwoSparse => "two_sparse",
            CaseTag::ThreeSparse => "three_sparse",
            CaseTag::Dense => "dense",
        }
    }
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The two nontrivial subproblems of the enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellCase {
    /// Fourth weight fixed at zero, minimize `g` over three weights.
    ThreeSparse,
    /// All four weights free, minimize `f`.
    Dense,
}

/// Result of one case solve. `w` is `None` when the case cannot hold the
/// optimum (early abort or a coordinate collapsed to zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseSolution {
    pub w: Option<[f64; 4]>,
    pub iterations: usize,
    pub aborted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxResult {
    pub w: [f64; 4],
    pub case_tag: CaseTag,
    /// `f(w)` of the sorted problem.
    pub objective: f64,
    pub three_sparse_aborted: bool,
    pub dense_aborted: bool,
    pub three_sparse_iterations: usize,
    pub dense_iterations: usize,
    /// Set when a GD case solve ran out of iterations and the barrier solver
    /// was used for that case instead.
    pub used_fallback: bool,
}

/// KKT diagnostics of the nonnegatively constrained sorted problem with
/// multipliers `ν = ∇f(w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// Largest `|∂f/∂w_i|` over the support of `w`.
    pub stationarity_residual: f64,
    pub dual_multipliers: [f64; 4],
    pub primal_feasible: bool,
    pub dual_feasible: bool,
    pub complementary_slack: bool,
    pub tol: f64,
}

impl KktReport {
    pub fn pass(&self) -> bool {
        self.primal_feasible
            && self.dual_feasible
            && self.complementary_slack
            && self.stationarity_residual <= self.tol
    }
}
