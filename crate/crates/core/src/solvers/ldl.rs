//! Envelope (skyline) `L D L^T` factorization without pivoting.
//!
//! Valid for symmetric positive definite matrices and for symmetric
//! quasi-definite matrices `[H B; B^T -G]` with `H, G` positive definite,
//! which admit such a factorization under every symmetric permutation.

use super::ordering::reverse_cuthill_mckee;
use super::SolverError;
use crate::assembly::SparseMatrix;

#[derive(Debug, Clone)]
pub struct EnvelopeLdl {
    n: usize,
    /// new -> old
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    l: Vec<f64>,
    d: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotPolicy {
    /// Every pivot must be positive.
    Positive,
    /// Pivots may have either sign but must not vanish.
    NonZero,
}

impl EnvelopeLdl {
    /// Factors `a` (only the lower triangle is read) after an RCM reordering.
    pub fn factor(a: &SparseMatrix, policy: PivotPolicy) -> Result<Self, SolverError> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with_permutation(a, perm, policy)
    }

    pub fn factor_with_permutation(
        a: &SparseMatrix,
        perm: Vec<usize>,
        policy: PivotPolicy,
    ) -> Result<Self, SolverError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(SolverError::DimensionMismatch(format!(
                "matrix is {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, v) in a.iter() {
            let (pi, pj) = (inv[i], inv[j]);
            if v != 0.0 && pj < pi {
                first[pi] = first[pi].min(pj);
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut l = vec![0.0; start[n]];
        let mut d = vec![0.0; n];
        for (i, j, v) in a.iter() {
            let (pi, pj) = (inv[i], inv[j]);
            if pi == pj {
                d[pi] += v;
            } else if pj < pi && v != 0.0 {
                l[start[pi] + pj - first[pi]] += v;
            }
        }

        let scale = d
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = l.split_at_mut(start[i]);
            let row_i = &mut rest[..i - fi];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_j = &done[start[j]..start[j] + (j - fj)];
                let s: f64 = row_j[k0 - fj..]
                    .iter()
                    .zip(&row_i[k0 - fi..j - fi])
                    .map(|(a, b)| a * b)
                    .sum();
                row_i[j - fi] -= s;
            }
            let mut di = d[i];
            for (k, u) in row_i.iter_mut().enumerate() {
                let lk = *u / d[fi + k];
                di -= lk * *u;
                *u = lk;
            }
            // pivots at rounding level relative to the original diagonal
            // signal a (numerically) singular matrix
            let floor = 1e-13 * d[i].abs().max(1e-3 * scale);
            let bad = match policy {
                PivotPolicy::Positive => !(di > floor),
                PivotPolicy::NonZero => !(di.abs() > floor) || !di.is_finite(),
            };
            if bad {
                return Err(match policy {
                    PivotPolicy::Positive => SolverError::NotPositiveDefinite {
                        pivot: perm[i],
                        value: di,
                    },
                    PivotPolicy::NonZero => {
                        SolverError::Singular(format!("zero pivot at row {}", perm[i]))
                    }
                });
            }
            d[i] = di;
        }
        Ok(Self {
            n,
            perm,
            first,
            start,
            l,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored envelope entries (strict lower part).
    pub fn envelope_size(&self) -> usize {
        self.l.len()
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Number of negative pivots (the inertia's negative count).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.l[self.start[i]..self.start[i + 1]];
            let s: f64 = row.iter().zip(&x[fi..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for (xi, di) in x.iter_mut().zip(&self.d) {
            *xi /= di;
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let xi = x[i];
            let row = &self.l[self.start[i]..self.start[i + 1]];
            for (xk, lk) in x[fi..i].iter_mut().zip(row) {
                *xk -= lk * xi;
            }
        }
        let mut out = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}
