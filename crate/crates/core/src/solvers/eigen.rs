use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::{Mat, Par, Side};
use nalgebra::{DMatrix, SymmetricEigen};

use super::SolverError;
use crate::assembly::{dot, norm};

/// Eigenpairs of `A x = lambda B x`, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// B-orthonormal eigenvectors, one per value.
    pub vectors: Vec<Vec<f64>>,
    /// `||A x - lambda B x|| / ||x||`.
    pub residuals: Vec<f64>,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of values below `rel_tol * max |lambda|`.
    pub fn count_below(&self, rel_tol: f64) -> usize {
        let top = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.values.iter().filter(|&&v| v < rel_tol * top).count()
    }

    /// Keeps pairs whose value is at least `rel_tol * max |lambda|` (taken
    /// over this result), returning how many were dropped.
    pub fn drop_below(&mut self, rel_tol: f64) -> usize {
        let top = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.drop_below_abs(rel_tol * top)
    }

    pub fn drop_below_abs(&mut self, threshold: f64) -> usize {
        let keep: Vec<bool> = self.values.iter().map(|&v| v >= threshold).collect();
        let dropped = keep.iter().filter(|k| !**k).count();
        let mut it = keep.iter();
        self.values.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        self.vectors.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        self.residuals.retain(|_| *it.next().unwrap());
        dropped
    }

    pub fn truncate(&mut self, count: usize) {
        self.values.truncate(count);
        self.vectors.truncate(count);
        self.residuals.truncate(count);
    }
}

fn mat_vec(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let n = a.ncols();
    let mut y = vec![0.0; a.nrows()];
    for j in 0..n {
        let xj = x[j];
        if xj != 0.0 {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += a[(i, j)] * xj;
            }
        }
    }
    y
}

/// Largest absolute row sum, a cheap norm estimate.
pub fn norm_inf(a: &Mat<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// The `count` smallest eigenpairs of the dense symmetric-definite pencil
/// `(A, B)`: Cholesky `B = L L^T`, symmetric eigensolve of `L^{-1} A L^{-T}`,
/// back-transformation.
pub fn gen_sym_eig(a: &Mat<f64>, b: &Mat<f64>, count: usize) -> Result<EigenResult, SolverError> {
    gen_sym_eig_range(a, b, 0..count).map(|(_, r)| r)
}

/// All eigenvalues of the dense symmetric-definite pencil `(A, B)`
/// (ascending) together with the eigenpairs whose indices fall in `range`.
pub fn gen_sym_eig_range(
    a: &Mat<f64>,
    b: &Mat<f64>,
    range: std::ops::Range<usize>,
) -> Result<(Vec<f64>, EigenResult), SolverError> {
    gen_sym_eig_select(a, b, |_| range)
}

/// Like [`gen_sym_eig_range`], with the index range chosen from the full
/// ascending spectrum after it is computed.
pub fn gen_sym_eig_select(
    a: &Mat<f64>,
    b: &Mat<f64>,
    select: impl FnOnce(&[f64]) -> std::ops::Range<usize>,
) -> Result<(Vec<f64>, EigenResult), SolverError> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(SolverError::DimensionMismatch(
            "pencil blocks must be square and equal".into(),
        ));
    }
    let llt = b
        .llt(Side::Lower)
        .map_err(|_| SolverError::NotPositiveDefinite {
            pivot: 0,
            value: f64::NAN,
        })?;
    let l = llt.L().to_owned();
    // C = L^{-1} A L^{-T}
    let mut c = a.clone();
    solve_lower_triangular_in_place(l.as_ref(), c.as_mut(), Par::Seq);
    let mut ct = c.transpose().to_owned();
    drop(c);
    solve_lower_triangular_in_place(l.as_ref(), ct.as_mut(), Par::Seq);
    // symmetrize against rounding
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (ct[(i, j)] + ct[(j, i)]));
    drop(ct);
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| SolverError::Eigen(format!("{e:?}")))?;
    let s = evd.S();
    let all: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let range = select(&all);
    if range.end > n || range.start > range.end {
        return Err(SolverError::DimensionMismatch(format!(
            "requested eigenpairs {range:?} of a {n}x{n} pencil"
        )));
    }
    let count = range.len();
    let mut y = evd.U().subcols(range.start, count).to_owned();
    solve_upper_triangular_in_place(l.transpose(), y.as_mut(), Par::Seq);
    let mut out = EigenResult {
        values: all[range.clone()].to_vec(),
        vectors: (0..count)
            .map(|j| (0..n).map(|i| y[(i, j)]).collect())
            .collect(),
        residuals: Vec::with_capacity(count),
    };
    for (lam, x) in out.values.iter().zip(&out.vectors) {
        let ax = mat_vec(a, x);
        let bx = mat_vec(b, x);
        let r: Vec<f64> = ax.iter().zip(&bx).map(|(p, q)| p - lam * q).collect();
        out.residuals.push(norm(&r) / norm(x));
    }
    Ok((all, out))
}

/// Eigenvalues `alpha / beta` of a general dense pencil `(A, B)` via the QZ
/// algorithm. Infinite eigenvalues (`beta = 0`) are reported as infinities;
/// eigenvalues are returned as `(re, im)` pairs in no particular order.
pub fn general_pencil_eigenvalues(
    a: &Mat<f64>,
    b: &Mat<f64>,
) -> Result<Vec<(f64, f64)>, SolverError> {
    let gev = a
        .generalized_eigen(b)
        .map_err(|e| SolverError::Eigen(format!("{e:?}")))?;
    let (sa, sb) = (gev.S_a(), gev.S_b());
    let scale = norm_inf(a).max(norm_inf(b));
    Ok((0..sa.dim())
        .map(|i| {
            let (alpha, beta) = (sa[i], sb[i]);
            let bb = beta.re * beta.re + beta.im * beta.im;
            if bb.sqrt() <= 1e-12 * scale {
                (f64::INFINITY, 0.0)
            } else {
                // alpha * conj(beta) / |beta|^2
                (
                    (alpha.re * beta.re + alpha.im * beta.im) / bb,
                    (alpha.im * beta.re - alpha.re * beta.im) / bb,
                )
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Maximal Krylov dimension.
    pub max_dim: usize,
    /// Relative accuracy of Ritz values of the operator.
    pub tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_dim: 400,
            tol: 1e-12,
        }
    }
}

/// Largest `count` eigenpairs of an operator `op`, self-adjoint in the inner
/// product `<x, y> = x^T B y`, by Lanczos with full reorthogonalization.
///
/// `project` is applied to every new Krylov vector (e.g. to deflate a known
/// invariant subspace); it must commute with `op` on the relevant subspace and
/// be B-self-adjoint.
pub fn lanczos_largest(
    start: &[f64],
    mut op: impl FnMut(&[f64]) -> Result<Vec<f64>, SolverError>,
    bmul: impl Fn(&[f64]) -> Vec<f64>,
    project: impl Fn(&mut Vec<f64>),
    count: usize,
    options: LanczosOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), SolverError> {
    let n = start.len();
    let max_dim = options.max_dim.min(n);
    if count == 0 || count > max_dim {
        return Err(SolverError::DimensionMismatch(format!(
            "cannot extract {count} Ritz pairs from a Krylov space of dimension {max_dim}"
        )));
    }
    let mut v = start.to_vec();
    project(&mut v);
    let mut bv = bmul(&v);
    let nv = dot(&v, &bv).sqrt();
    if !(nv > 0.0) {
        return Err(SolverError::Eigen(
            "Lanczos start vector vanishes after projection".into(),
        ));
    }
    v.iter_mut().for_each(|x| *x /= nv);
    bv.iter_mut().for_each(|x| *x /= nv);
    let mut q = vec![v];
    let mut bq = vec![bv];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    loop {
        let j = q.len() - 1;
        let mut w = op(&q[j])?;
        project(&mut w);
        alpha.push(dot(&w, &bq[j]));
        // two passes of classical Gram-Schmidt in the B inner product
        for _ in 0..2 {
            for (qi, bqi) in q.iter().zip(&bq) {
                let c = dot(&w, bqi);
                w.iter_mut().zip(qi).for_each(|(wk, qk)| *wk -= c * qk);
            }
        }
        let bw = bmul(&w);
        let b = dot(&w, &bw).max(0.0).sqrt();
        let m = alpha.len();
        let enough = m >= count && (m % 5 == 0 || m == max_dim || b <= 1e-14 * alpha[0].abs());
        if enough {
            let (theta, s) = tridiagonal_eigen(&alpha, &beta);
            let top: Vec<usize> = (0..m).rev().take(count).collect();
            let converged = top.iter().all(|&i| {
                (b * s[(m - 1, i)]).abs() <= options.tol * theta[i].abs().max(f64::MIN_POSITIVE)
            });
            if converged || m == max_dim || b <= 1e-14 * alpha[0].abs() {
                if !converged && m == max_dim && b > 1e-14 * alpha[0].abs() {
                    return Err(SolverError::NotConverged {
                        residual: top
                            .iter()
                            .map(|&i| (b * s[(m - 1, i)]).abs() / theta[i].abs())
                            .fold(0.0, f64::max),
                        tolerance: options.tol,
                    });
                }
                let values: Vec<f64> = top.iter().map(|&i| theta[i]).collect();
                let vectors = top
                    .iter()
                    .map(|&i| {
                        let mut x = vec![0.0; n];
                        for (k, qk) in q.iter().enumerate() {
                            let c = s[(k, i)];
                            x.iter_mut().zip(qk).for_each(|(xi, qi)| *xi += c * qi);
                        }
                        x
                    })
                    .collect();
                return Ok((values, vectors));
            }
        }
        beta.push(b);
        q.push(w.iter().map(|x| x / b).collect());
        bq.push(bw.iter().map(|x| x / b).collect());
    }
}

/// Eigen-decomposition of the symmetric tridiagonal matrix, ascending.
fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let e = SymmetricEigen::new(t);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m, m, |r, c| e.eigenvectors[(r, idx[c])]);
    (values, vecs)
}
