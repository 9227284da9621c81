use super::SortedCell;

/// Signs and source positions recorded by [`pos_sort`].
///
/// Sorted slot `k` holds `|z[perm[k]]|` and `signs[k]` is the sign of that
/// entry (`+1` for zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedPerm {
    pub signs: [i8; 4],
    pub perm: [usize; 4],
}

impl SignedPerm {
    pub fn identity() -> Self {
        Self { signs: [1; 4], perm: [0, 1, 2, 3] }
    }

    /// Applies the recorded sort to an arbitrary vector: `(D Π) v`.
    pub fn apply(&self, v: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for k in 0..4 {
            out[k] = f64::from(self.signs[k]) * v[self.perm[k]];
        }
        out
    }
}

/// Sorts a cell descending by magnitude and drops the signs. Ties keep their
/// original relative order.
pub fn pos_sort(z: &[f64; 4]) -> (SortedCell, SignedPerm) {
    let mut perm = [0usize, 1, 2, 3];
    // stable insertion sort on |z| descending
    for i in 1..4 {
        let mut j = i;
        while j > 0 && z[perm[j - 1]].abs() < z[perm[j]].abs() {
            perm.swap(j - 1, j);
            j -= 1;
        }
    }
    let mut sorted = [0.0; 4];
    let mut signs = [1i8; 4];
    for k in 0..4 {
        let v = z[perm[k]];
        sorted[k] = v.abs();
        signs[k] = if v < 0.0 { -1 } else { 1 };
    }
    (SortedCell::new_unchecked(sorted), SignedPerm { signs, perm })
}

/// Undoes [`pos_sort`] on a solution of the sorted problem.
pub fn inv_pos_sort(w: &[f64; 4], sp: &SignedPerm) -> [f64; 4] {
    let mut out = [0.0; 4];
    for k in 0..4 {
        out[sp.perm[k]] = f64::from(sp.signs[k]) * w[k];
    }
    out
}
