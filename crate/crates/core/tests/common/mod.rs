#![allow(dead_code)]

use prune24::harness::Rng;
use prune24::prox::SortedCell;
use prune24::Matrix;

pub const LAMBDAS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

/// Random sorted cells paired with λ cycling through [`LAMBDAS`]. Every
/// fourth cell is nearly tied, the regime where the cases compete.
pub fn random_cells(seed: u64, n: usize) -> Vec<(SortedCell, f64)> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|i| {
            let mut z = if i % 4 == 3 {
                let base = 0.5 + 1.5 * rng.uniform();
                [0; 4].map(|_| base * (1.0 - 0.02 * rng.uniform()))
            } else {
                [0; 4].map(|_| 2.0 * rng.uniform())
            };
            z.sort_by(|a, b| b.total_cmp(a));
            (SortedCell::new(z).unwrap(), LAMBDAS[i % 4])
        })
        .collect()
}

pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

/// `G Gᵀ / k + shift·I` with `G` of shape `n×k`.
pub fn random_spd(rng: &mut Rng, n: usize, k: usize, shift: f64) -> Matrix {
    let g: Vec<f64> = (0..n * k).map(|_| rng.normal()).collect();
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s: f64 = (0..k).map(|t| g[i * k + t] * g[j * k + t]).sum::<f64>() / k as f64;
            if i == j {
                s += shift;
            }
            h[i * n + j] = s;
        }
    }
    // exact symmetry
    for i in 0..n {
        for j in 0..i {
            h[i * n + j] = h[j * n + i];
        }
    }
    Matrix::new(n, n, h).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
