//! Brute-force reference for the sorted prox problem: grid search followed by
//! a long projected-gradient polish. Written independently of the case
//! solvers so the two can check each other.

use super::SortedCell;

const GRID_STEPS: usize = 100;
const REFINE_STEPS: usize = 10_000;
const REFINE_STEP: f64 = 0.125;

fn cost(w: &[f64; 4], z: &[f64; 4], lambda: f64) -> f64 {
    let mut q = 0.0;
    for i in 0..4 {
        q += (w[i] - z[i]) * (w[i] - z[i]);
    }
    let r = w[0] * w[1] * w[2] + w[1] * w[2] * w[3] + w[2] * w[3] * w[0] + w[3] * w[0] * w[1];
    0.5 * q + lambda * r
}

fn cost_grad(w: &[f64; 4], z: &[f64; 4], lambda: f64) -> [f64; 4] {
    [
        w[0] - z[0] + lambda * (w[1] * w[2] + w[2] * w[3] + w[3] * w[1]),
        w[1] - z[1] + lambda * (w[0] * w[2] + w[2] * w[3] + w[3] * w[0]),
        w[2] - z[2] + lambda * (w[0] * w[1] + w[1] * w[3] + w[3] * w[0]),
        w[3] - z[3] + lambda * (w[0] * w[1] + w[1] * w[2] + w[2] * w[0]),
    ]
}

fn polish(mut w: [f64; 4], z: &[f64; 4], lambda: f64) -> ([f64; 4], f64) {
    let mut best = (w, cost(&w, z, lambda));
    for _ in 0..REFINE_STEPS {
        let g = cost_grad(&w, z, lambda);
        for i in 0..4 {
            w[i] = (w[i] - REFINE_STEP * g[i]).max(0.0);
        }
        let c = cost(&w, z, lambda);
        if c < best.1 {
            best = (w, c);
        }
    }
    best
}

/// Minimizes the sorted prox objective by exhaustive search.
///
/// Scans the grid `{0, h, 2h, …}⁴` with `h = z₁/100`, skipping coordinates
/// beyond `z_i + h` (every minimizer satisfies `w ≤ z`), adds the exact
/// 2-sparse point, then polishes the best grid point with 10,000 projected
/// gradient steps of size 1/8. Returns the best `(w, objective)` seen.
pub fn brute_force_prox_oracle(z: &SortedCell, lambda: f64) -> ([f64; 4], f64) {
    let z = z.values();
    if z[0] == 0.0 {
        return ([0.0; 4], 0.0);
    }
    let h = z[0] / GRID_STEPS as f64;
    let limit = |v: f64| (((v / h).ceil() as usize) + 1).min(GRID_STEPS);

    let mut best_w = [z[0], z[1], 0.0, 0.0];
    let mut best = cost(&best_w, &z, lambda);
    for i in 0..=limit(z[0]) {
        let a = i as f64 * h;
        let qa = (a - z[0]) * (a - z[0]);
        for j in 0..=limit(z[1]) {
            let b = j as f64 * h;
            let qb = qa + (b - z[1]) * (b - z[1]);
            let ab = a * b;
            for k in 0..=limit(z[2]) {
                let c = k as f64 * h;
                let qc = qb + (c - z[2]) * (c - z[2]);
                let base = 0.5 * qc + lambda * ab * c;
                // coefficient of w₄ in the regularizer
                let lin = lambda * (a * b + b * c + c * a);
                for l in 0..=limit(z[3]) {
                    let d = l as f64 * h;
                    let v = base + 0.5 * (d - z[3]) * (d - z[3]) + lin * d;
                    if v < best {
                        best = v;
                        best_w = [a, b, c, d];
                    }
                }
            }
        }
    }
    let (w, f) = polish(best_w, &z, lambda);
    let two = [z[0], z[1], 0.0, 0.0];
    let f_two = cost(&two, &z, lambda);
    if f_two <= f {
        (two, f_two)
    } else {
        (w, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_lambda_recovers_input() {
        let z = SortedCell::new([1.2, 0.9, 0.5, 0.33]).unwrap();
        let (w, f) = brute_force_prox_oracle(&z, 0.0);
        assert!(f < 1e-12);
        for (a, b) in w.iter().zip(z.values()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn two_sparse_input() {
        let z = SortedCell::new([5.0, 3.0, 0.0, 0.0]).unwrap();
        assert_eq!(brute_force_prox_oracle(&z, 1.0), ([5.0, 3.0, 0.0, 0.0], 0.0));
    }

    #[test]
    fn zero_input() {
        let z = SortedCell::new([0.0; 4]).unwrap();
        assert_eq!(brute_force_prox_oracle(&z, 1.0), ([0.0; 4], 0.0));
    }
}
