use super::SortedCell;

/// Simple separable 2:4 regularizers acting only on the two smallest
/// magnitudes of a sorted cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimpleReg {
    /// Counts the nonzeros among the two smallest entries (hard threshold).
    R0,
    /// Sum of the two smallest entries (soft threshold).
    R1,
    /// Half the squared norm of the two smallest entries (shrinkage).
    R2,
}

/// Closed-form prox of `λ R` on a sorted cell. The two largest entries are
/// returned unchanged.
pub fn prox_simple(z: &SortedCell, lambda: f64, kind: SimpleReg) -> [f64; 4] {
    let z = z.values();
    let shrink = |v: f64| match kind {
        SimpleReg::R0 => {
            if lambda > 0.5 * v * v {
                0.0
            } else {
                v
            }
        }
        SimpleReg::R1 => (v - lambda).max(0.0),
        SimpleReg::R2 => v / (1.0 + lambda),
    };
    [z[0], z[1], shrink(z[2]), shrink(z[3])]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell() -> SortedCell {
        SortedCell::new([1.6, 1.1, 0.8, 0.5]).unwrap()
    }

    #[test]
    fn soft_threshold() {
        let w = prox_simple(&cell(), 0.6, SimpleReg::R1);
        assert_eq!(w[..2], [1.6, 1.1]);
        assert!((w[2] - 0.2).abs() < 1e-15);
        assert_eq!(w[3], 0.0);
    }

    #[test]
    fn hard_threshold() {
        assert_eq!(prox_simple(&cell(), 0.4, SimpleReg::R0), [1.6, 1.1, 0.0, 0.0]);
        // ½·0.25 = 0.125 < 0.2 < 0.32
        assert_eq!(prox_simple(&cell(), 0.2, SimpleReg::R0), [1.6, 1.1, 0.8, 0.0]);
    }

    #[test]
    fn shrinkage() {
        assert_eq!(prox_simple(&cell(), 1.0, SimpleReg::R2), [1.6, 1.1, 0.4, 0.25]);
    }
}
