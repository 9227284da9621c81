use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{Hessian, Matrix};

/// Seeded stream of uniforms and standard normals on top of ChaCha8.
///
/// Uniforms take the top 53 bits of each `u64`; normals come in Box–Muller
/// pairs, both of which are used.
pub struct Rng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * t.sin());
        r * t.cos()
    }
}

/// Two-cell instance where the 4th and 8th weights are perfectly correlated.
pub fn toy_problem() -> (Matrix, Hessian) {
    let w = Matrix::new(1, 8, vec![0.0, 5.0, 3.0, 2.0, 0.0, 5.0, 5.0, 2.0])
        .expect("valid toy weights");
    let mut h = Matrix::identity(8);
    h.set(3, 7, 1.0);
    h.set(7, 3, 1.0);
    (w, Hessian::new(h).expect("valid toy hessian"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub d: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(d: usize, alpha: f64, seed: u64) -> Result<Self> {
        let s = Self { d, alpha, seed };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.d < 4 || !self.d.is_multiple_of(4) {
            return Err(Error::InvalidArgument(format!(
                "d must be a positive multiple of 4, got {}",
                self.d
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Random `1×d` weights and `H = α·D + (1−α)·GGᵀ` with `D` uniform on
/// `[0,1)` and `G` iid normal scaled by `d^{-1/2}`.
///
/// Draw order: the `d` diagonal uniforms, the `d²` entries of `G` row by
/// row, then the `d` weights.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<(Matrix, Hessian)> {
    spec.validate()?;
    let d = spec.d;
    let mut rng = Rng::new(spec.seed);
    let diag: Vec<f64> = (0..d).map(|_| rng.uniform()).collect();
    let scale = 1.0 / (d as f64).sqrt();
    let g: Vec<f64> = (0..d * d).map(|_| rng.normal() * scale).collect();
    let w: Vec<f64> = (0..d).map(|_| rng.normal()).collect();

    let a = spec.alpha;
    let mut h = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let gi = &g[i * d..(i + 1) * d];
            let gj = &g[j * d..(j + 1) * d];
            let z: f64 = gi.iter().zip(gj).map(|(x, y)| x * y).sum();
            let mut v = (1.0 - a) * z;
            if i == j {
                v += a * diag[i];
            }
            h[i * d + j] = v;
            h[j * d + i] = v;
        }
    }
    Ok((Matrix::new(1, d, w)?, Hessian::new(Matrix::new(d, d, h)?)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_psd, layer_loss};

    #[test]
    fn uniforms_in_range_and_normals_sane() {
        let mut r = Rng::new(7);
        let u: Vec<f64> = (0..10_000).map(|_| r.uniform()).collect();
        assert!(u.iter().all(|&v| (0.0..1.0).contains(&v)));
        let n: Vec<f64> = (0..20_000).map(|_| r.normal()).collect();
        let mean = n.iter().sum::<f64>() / n.len() as f64;
        let var = n.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n.len() as f64;
        assert!(mean.abs() < 0.05);
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn toy_losses() {
        let (ws, h) = toy_problem();
        let a = Matrix::new(1, 8, vec![0.0, 5.0, 0.0, 4.0, 0.0, 5.0, 5.0, 0.0]).unwrap();
        let b = Matrix::new(1, 8, vec![0.0, 5.0, 3.0, 0.0, 0.0, 5.0, 5.0, 0.0]).unwrap();
        assert_eq!(layer_loss(&a, &ws, &h).unwrap(), 9.0);
        assert_eq!(layer_loss(&b, &ws, &h).unwrap(), 16.0);
    }

    #[test]
    fn alpha_one_is_diagonal() {
        let (_, h) = gen_synthetic(&SyntheticSpec::new(16, 1.0, 3).unwrap()).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let v = h.get(i, j);
                if i == j {
                    assert!((0.0..1.0).contains(&v));
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn deterministic_and_psd() {
        for &alpha in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            let s = SyntheticSpec::new(32, alpha, 11).unwrap();
            let (w1, h1) = gen_synthetic(&s).unwrap();
            let (w2, h2) = gen_synthetic(&s).unwrap();
            assert_eq!(w1, w2);
            assert_eq!(h1.matrix(), h2.matrix());
            assert!(is_psd(h1.matrix(), 1e-9));
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(SyntheticSpec::new(6, 0.5, 0).is_err());
        assert!(SyntheticSpec::new(0, 0.5, 0).is_err());
        assert!(SyntheticSpec::new(8, 1.5, 0).is_err());
    }
}
