use crate::error::{Error, Result};
use crate::prox::{lambda_thresholds, pos_sort, prox_full_with, CaseTag, ProxOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct PathRow {
    pub lambda: f64,
    pub w: [f64; 4],
    pub case_tag: CaseTag,
}

/// Prox solutions along a grid of `λ`, with the 2-sparse threshold
/// `λ₂* = z₃/(z₁z₂)` of the sorted magnitudes (absent when `z₁z₂ = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct RegPath {
    pub z: [f64; 4],
    pub lambda2_star: Option<f64>,
    pub rows: Vec<PathRow>,
}

impl RegPath {
    /// Smallest grid `λ` from which every remaining row is 2-sparse.
    pub fn transition(&self) -> Option<f64> {
        let tail = self
            .rows
            .iter()
            .rposition(|r| r.case_tag != CaseTag::TwoSparse)
            .map_or(0, |i| i + 1);
        self.rows.get(tail).map(|r| r.lambda)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,w1,w2,w3,w4,case\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.lambda, r.w[0], r.w[1], r.w[2], r.w[3], r.case_tag
            ));
        }
        s
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

pub fn reg_path_sweep(z: &[f64; 4], grid: &[f64]) -> Result<RegPath> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("lambda grid needs at least 2 points".into()));
    }
    if grid.windows(2).any(|p| !(p[1] > p[0])) || !(grid[0] >= 0.0) {
        return Err(Error::InvalidArgument("lambda grid must be nonnegative and increasing".into()));
    }
    let (sorted, _) = pos_sort(z);
    let lambda2_star = lambda_thresholds(&sorted, None).ok().map(|(l, _)| l);
    let opts = ProxOptions::default();
    let rows = grid
        .iter()
        .map(|&lambda| {
            let (w, res) = prox_full_with(z, lambda, &opts)?;
            Ok(PathRow { lambda, w, case_tag: res.case_tag })
        })
        .collect::<Result<_>>()?;
    Ok(RegPath { z: *z, lambda2_star, rows })
}

/// Bisects for the `λ` at which the prox first becomes 2-sparse, to within
/// `tol`. Returns `None` if it is not yet 2-sparse at `lambda_max`.
pub fn sparsity_transition(z: &[f64; 4], lambda_max: f64, tol: f64) -> Result<Option<f64>> {
    let opts = ProxOptions::default();
    let two = |l: f64| -> Result<bool> {
        Ok(prox_full_with(z, l, &opts)?.1.case_tag == CaseTag::TwoSparse)
    };
    if !two(lambda_max)? {
        return Ok(None);
    }
    if two(0.0)? {
        return Ok(Some(0.0));
    }
    let (mut lo, mut hi) = (0.0, lambda_max);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if two(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}
