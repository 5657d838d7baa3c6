//! Quad-curl and Maxwell eigenvalue problems.
//!
//! The quad-curl pencil is assembled on `U_0h x U_h` without divergence
//! multipliers: `M_M w = K u`, `K^T w = lambda M_N u`. Eliminating `w` gives
//! `S u = lambda M_N u` with `S = K^T M_M^{-1} K`, whose nullspace is exactly
//! the discrete gradients; the nonzero eigenpairs are discretely
//! divergence-free.

use std::sync::Arc;

use faer::Mat;

use super::{divergence_residual, Operators, SystemError};
use crate::assembly::{dot, norm, SparseMatrix};
use crate::mesh::MeshData;
use crate::solvers::{
    gen_sym_eig_select, general_pencil_eigenvalues, lanczos_largest, EigenResult, LanczosOptions,
    RegularizedSolver, SpdSolver,
};

/// Largest `N = dim U_0h` handled by the dense path under [`EigenMethod::Auto`].
pub const DENSE_LIMIT: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense when `N <= DENSE_LIMIT`, Lanczos otherwise.
    Auto,
    Dense,
    /// Shift-invert Lanczos with the gradient space deflated.
    Lanczos,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub method: EigenMethod,
    /// Values below `zero_tol * lambda_max` count as zero (dense path).
    pub zero_tol: f64,
    pub lanczos: LanczosOptions,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            method: EigenMethod::Auto,
            zero_tol: 1e-8,
            lanczos: LanczosOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    /// The first nonzero eigenpairs, ascending; vectors on the free DoFs of
    /// `U_0h`, `M_N`-orthonormal.
    pub eig: EigenResult,
    /// Number of filtered zero eigenvalues (dense path only).
    pub zero_count: Option<usize>,
    /// Discrete divergence residual of each returned eigenvector.
    pub divergence_residuals: Vec<f64>,
    pub method: EigenMethod,
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

impl EigenSolution {
    /// `N + M`, the size of the quad-curl pencil.
    pub fn dofs(&self) -> usize {
        self.n + self.m
    }
}

/// Matrices of the quad-curl eigenvalue problem.
#[derive(Debug, Clone)]
pub struct PencilSystem {
    pub ops: Arc<Operators>,
}

impl PencilSystem {
    pub fn new(data: &Arc<MeshData>, k: usize) -> Result<Self, SystemError> {
        Ok(Self {
            ops: Arc::new(Operators::new(data, k)?),
        })
    }

    pub fn from_operators(ops: Arc<Operators>) -> Self {
        Self { ops }
    }

    pub fn n(&self) -> usize {
        self.ops.spaces.n()
    }

    pub fn m(&self) -> usize {
        self.ops.spaces.m()
    }

    /// Dense Schur operator `S = K^T M_M^{-1} K`, formed one column at a time
    /// from a sparse factorization of `M_M`.
    pub fn schur_dense(&self) -> Result<Mat<f64>, SystemError> {
        let (m, n) = (self.m(), self.n());
        let mm = SpdSolver::new(&self.ops.mass_m)?;
        let kt = self.ops.k.transpose();
        let mut s = Mat::<f64>::zeros(n, n);
        let mut col = vec![0.0; m];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = 0.0);
            let (idx, vals) = kt.row(j);
            for (&i, &v) in idx.iter().zip(vals) {
                col[i] = v;
            }
            let x = mm.solve(&col);
            let sj = kt.mul_vec(&x);
            for (i, v) in sj.into_iter().enumerate() {
                s[(i, j)] = v;
            }
        }
        Ok(Mat::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)])))
    }

    /// The unreduced pencil `(A, B)` of size `N + M` in the unknowns `(u, w)`:
    /// `A = [0, K^T; -K, M_M]`, `B = [M_N, 0; 0, 0]`.
    pub fn block_pencil(&self) -> (Mat<f64>, Mat<f64>) {
        let (m, n) = (self.m(), self.n());
        let kt = self.ops.k.transpose();
        let neg_k = self.ops.k.scaled(-1.0);
        let a = SparseMatrix::block(
            &[
                vec![None, Some(&kt)],
                vec![Some(&neg_k), Some(&self.ops.mass_m)],
            ],
            &[n, m],
            &[n, m],
        );
        let zero = SparseMatrix::from_entries(m, m, std::iter::empty(), true);
        let b = SparseMatrix::block(
            &[vec![Some(&self.ops.mass_n), None], vec![None, Some(&zero)]],
            &[n, m],
            &[n, m],
        );
        (a.to_dense(), b.to_dense())
    }
}

/// Builds the quad-curl pencil on the cube-or-file mesh `data` with order `k`.
pub fn build_quadcurl_pencil(data: &Arc<MeshData>, k: usize) -> Result<PencilSystem, SystemError> {
    PencilSystem::new(data, k)
}

/// Nonzero finite eigenvalues of the unreduced block pencil, ascending.
/// Values with `|lambda| < zero_tol * max |lambda|` are dropped. Returns the
/// polished values and the largest imaginary part QZ reported among them.
pub fn block_pencil_eigenvalues(
    pencil: &PencilSystem,
    zero_tol: f64,
) -> Result<(Vec<f64>, f64), SystemError> {
    let (a, b) = pencil.block_pencil();
    let ev = general_pencil_eigenvalues(&a, &b)?;
    let finite: Vec<(f64, f64)> = ev
        .into_iter()
        .filter(|(re, im)| re.is_finite() && im.is_finite())
        .collect();
    let top = finite
        .iter()
        .fold(0.0f64, |m, (re, im)| m.max(re.hypot(*im)));
    let kept: Vec<(f64, f64)> = finite
        .into_iter()
        .filter(|(re, im)| re.hypot(*im) >= zero_tol * top)
        .collect();
    let imag = kept.iter().fold(0.0f64, |m, (_, im)| m.max(im.abs()));
    // QZ loses accuracy on the repeated values of symmetric meshes; polish
    // each estimate on the same pencil in its symmetric form
    // [0, K^T; K, -M_M], where the Rayleigh quotient is stationary.
    let sym = Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        if i >= pencil.n() {
            -a[(i, j)]
        } else {
            a[(i, j)]
        }
    });
    let mut values: Vec<f64> = kept
        .iter()
        .enumerate()
        .map(|(i, &(re, _))| polish(&sym, &b, re, i))
        .collect();
    values.sort_by(|x, y| x.total_cmp(y));
    Ok((values, imag))
}

/// Inverse iteration at the shift `lambda` followed by a Rayleigh quotient.
fn polish(a: &Mat<f64>, b: &Mat<f64>, lambda: f64, seed: usize) -> f64 {
    use faer::linalg::solvers::Solve;
    let dim = a.nrows();
    let mut x = Mat::<f64>::from_fn(dim, 1, |i, _| {
        1.0 + ((i * 7919 + seed * 104_729) % 1009) as f64 / 1009.0
    });
    let mut value = lambda;
    for _ in 0..3 {
        let shifted = Mat::from_fn(dim, dim, |i, j| a[(i, j)] - value * b[(i, j)]);
        let y = shifted.partial_piv_lu().solve(b * &x);
        let scale = y.norm_l2();
        if !(scale.is_finite() && scale > 0.0) {
            break;
        }
        x = y * (1.0 / scale);
        let num = (x.transpose() * a * &x)[(0, 0)];
        let den = (x.transpose() * b * &x)[(0, 0)];
        if den <= 0.0 {
            break;
        }
        let next = num / den;
        let done = (next - value).abs() <= 1e-14 * next.abs();
        value = next;
        if done {
            break;
        }
    }
    value
}

fn resolve(method: EigenMethod, n: usize) -> EigenMethod {
    match method {
        EigenMethod::Auto if n <= DENSE_LIMIT => EigenMethod::Dense,
        EigenMethod::Auto => EigenMethod::Lanczos,
        m => m,
    }
}

/// Dense path: all eigenvalues, zero count, then the first `count` nonzero
/// pairs.
fn dense_nonzero(
    a: &Mat<f64>,
    b: &Mat<f64>,
    count: usize,
    zero_tol: f64,
) -> Result<(EigenResult, usize), SystemError> {
    let n = a.nrows();
    let mut zeros = 0;
    let (_, eig) = gen_sym_eig_select(a, b, |all| {
        let top = all.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        zeros = all.iter().filter(|&&v| v < zero_tol * top).count();
        zeros..(zeros + count).min(n)
    })?;
    if eig.len() < count {
        return Err(SystemError::TooFewEigenvalues {
            requested: count,
            available: n - zeros,
        });
    }
    Ok((eig, zeros))
}

/// Deterministic, well-spread start vector.
fn start_vector(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| ((i as f64 + 1.0) * 0.754_877_666_246_692_7).fract() - 0.5)
        .collect()
}

/// Cheap upper estimate of the largest eigenvalue of `(A, B)` from diagonal
/// ratios.
fn diagonal_ratio(a: &SparseMatrix, b: &SparseMatrix) -> f64 {
    a.diagonal()
        .iter()
        .zip(b.diagonal())
        .map(|(x, y)| if y > 0.0 { x / y } else { 0.0 })
        .fold(0.0, f64::max)
}

/// Shift-invert Lanczos on `(A + tau B)^{-1} B` with the gradient space
/// deflated; eigenpairs are found one at a time and locked, which also
/// recovers repeated eigenvalues.
fn lanczos_nonzero(
    ops: &Operators,
    mut shifted_solve: impl FnMut(&[f64]) -> Result<Vec<f64>, SystemError>,
    tau: f64,
    count: usize,
    options: LanczosOptions,
) -> Result<EigenResult, SystemError> {
    let n = ops.spaces.n();
    let mass = &ops.mass_n;
    let lap = ops.gradient_laplacian();
    let lap = if ops.spaces.p() > 0 {
        Some(SpdSolver::new(&lap)?)
    } else {
        None
    };
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut locked_b: Vec<Vec<f64>> = Vec::new();
    let mut values = Vec::new();
    // u - G L^{-1} G^T M u, then remove locked directions
    let project = |v: &mut Vec<f64>, locked: &[Vec<f64>], locked_b: &[Vec<f64>]| {
        if let Some(l) = &lap {
            let c = l.solve(&ops.grad0.mul_vec_transpose(&mass.mul_vec(v)));
            let g = ops.grad0.mul_vec(&c);
            v.iter_mut().zip(&g).for_each(|(a, b)| *a -= b);
        }
        for (x, bx) in locked.iter().zip(locked_b) {
            let c = dot(v, bx);
            v.iter_mut().zip(x).for_each(|(a, b)| *a -= c * b);
        }
    };
    let mut start = start_vector(n);
    while values.len() < count {
        let available = n - ops.spaces.p() - locked.len();
        if available == 0 {
            return Err(SystemError::TooFewEigenvalues {
                requested: count,
                available: values.len(),
            });
        }
        let mut opts = options;
        opts.max_dim = opts.max_dim.min(available);
        let (theta, vecs) = lanczos_largest(
            &start,
            |x| {
                shifted_solve(&mass.mul_vec(x)).map_err(|e| match e {
                    SystemError::Solver(s) => s,
                    other => crate::solvers::SolverError::Eigen(other.to_string()),
                })
            },
            |x| mass.mul_vec(x),
            |v| project(v, &locked, &locked_b),
            1,
            opts,
        )?;
        let mut x = vecs.into_iter().next().expect("one Ritz vector");
        project(&mut x, &locked, &locked_b);
        let bx = mass.mul_vec(&x);
        let nx = dot(&x, &bx).sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        values.push(1.0 / theta[0] - tau);
        locked_b.push(bx.iter().map(|v| v / nx).collect());
        locked.push(x);
        // rotate the start so the next run is not orthogonal to a cluster
        start.rotate_left(1 + values.len());
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok(EigenResult {
        values: idx.iter().map(|&i| values[i]).collect(),
        vectors: idx.iter().map(|&i| locked[i].clone()).collect(),
        residuals: Vec::new(),
    })
}

fn finish(
    ops: &Operators,
    mut eig: EigenResult,
    zero_count: Option<usize>,
    method: EigenMethod,
    apply_a: impl Fn(&[f64]) -> Vec<f64>,
) -> EigenSolution {
    if eig.residuals.len() != eig.values.len() {
        eig.residuals = eig
            .values
            .iter()
            .zip(&eig.vectors)
            .map(|(lam, x)| {
                let ax = apply_a(x);
                let bx = ops.mass_n.mul_vec(x);
                let r: Vec<f64> = ax.iter().zip(&bx).map(|(p, q)| p - lam * q).collect();
                norm(&r) / norm(x)
            })
            .collect();
    }
    let divergence_residuals = eig
        .vectors
        .iter()
        .map(|u| divergence_residual(&ops.grad0, &ops.mass_n, u))
        .collect();
    EigenSolution {
        eig,
        zero_count,
        divergence_residuals,
        method,
        n: ops.spaces.n(),
        m: ops.spaces.m(),
        p: ops.spaces.p(),
    }
}

/// First `count` nonzero eigenvalues of the quad-curl problem,
/// `S u = lambda M_N u`.
pub fn solve_quadcurl_eig(
    pencil: &PencilSystem,
    count: usize,
    options: &EigenOptions,
) -> Result<EigenSolution, SystemError> {
    if count == 0 {
        return Err(SystemError::InvalidArgument(
            "eigenvalue count must be at least 1".into(),
        ));
    }
    let ops = &pencil.ops;
    let method = resolve(options.method, ops.spaces.n());
    let mm = SpdSolver::new(&ops.mass_m)?;
    let apply_s = |x: &[f64]| ops.k.mul_vec_transpose(&mm.solve(&ops.k.mul_vec(x)));
    match method {
        EigenMethod::Dense => {
            let s = pencil.schur_dense()?;
            let (eig, zeros) = dense_nonzero(&s, &ops.mass_n.to_dense(), count, options.zero_tol)?;
            Ok(finish(ops, eig, Some(zeros), method, apply_s))
        }
        _ => {
            let (n, m) = (ops.spaces.n(), ops.spaces.m());
            let tau = 1e-8
                * diagonal_ratio(&ops.k0, &ops.mass_n)
                    .powi(2)
                    .max(f64::MIN_POSITIVE);
            // [tau M_N, K^T; K, -M_M] is quasi-definite; its first block row
            // of the inverse applied to (b, 0) is (S + tau M_N)^{-1} b
            let neg_mm = ops.mass_m.scaled(-1.0);
            let kt = ops.k.transpose();
            let shifted = ops.mass_n.scaled(tau);
            let a = SparseMatrix::block(
                &[
                    vec![Some(&shifted), Some(&kt)],
                    vec![Some(&ops.k), Some(&neg_mm)],
                ],
                &[n, m],
                &[n, m],
            );
            let mut signs = vec![1i8; n];
            signs.resize(n + m, -1);
            let solver = RegularizedSolver::new(&a, &signs, 0.0)?;
            let eig = lanczos_nonzero(
                ops,
                |b| {
                    let mut rhs = b.to_vec();
                    rhs.resize(n + m, 0.0);
                    let mut x = solver.solve(&rhs)?.x;
                    x.truncate(n);
                    Ok(x)
                },
                tau,
                count,
                options.lanczos,
            )?;
            Ok(finish(ops, eig, None, method, apply_s))
        }
    }
}

/// First `count` nonzero eigenvalues of the Maxwell problem
/// `(curl u, curl v) = lambda (u, v)` on `U_0h`.
pub fn solve_maxwell_eig(
    ops: &Arc<Operators>,
    count: usize,
    options: &EigenOptions,
) -> Result<EigenSolution, SystemError> {
    if count == 0 {
        return Err(SystemError::InvalidArgument(
            "eigenvalue count must be at least 1".into(),
        ));
    }
    let method = resolve(options.method, ops.spaces.n());
    let apply_c = |x: &[f64]| ops.k0.mul_vec(x);
    match method {
        EigenMethod::Dense => {
            let (eig, zeros) = dense_nonzero(
                &ops.k0.to_dense(),
                &ops.mass_n.to_dense(),
                count,
                options.zero_tol,
            )?;
            Ok(finish(ops, eig, Some(zeros), method, apply_c))
        }
        _ => {
            let tau = 1e-8 * diagonal_ratio(&ops.k0, &ops.mass_n).max(f64::MIN_POSITIVE);
            let solver = SpdSolver::new(&ops.k0.add_scaled(tau, &ops.mass_n))?;
            let eig = lanczos_nonzero(ops, |b| Ok(solver.solve(b)), tau, count, options.lanczos)?;
            Ok(finish(ops, eig, None, method, apply_c))
        }
    }
}

/// Discrete Friedrichs constant `C` in `||u|| <= C ||curl u||` over discretely
/// divergence-free `u`: `1 / sqrt(lambda_1)` with `lambda_1` the first
/// nonzero Maxwell eigenvalue.
pub fn friedrichs_constant(maxwell: &EigenSolution) -> Option<f64> {
    maxwell.eig.values.first().map(|l| 1.0 / l.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::gen_sym_eig_range;
    use std::f64::consts::PI;

    fn pencil(n: usize, k: usize) -> PencilSystem {
        PencilSystem::new(&MeshData::cube(n).unwrap(), k).unwrap()
    }

    #[test]
    fn single_cube_schur_is_positive_scalar() {
        let p = pencil(1, 1);
        assert_eq!((p.n(), p.m()), (1, 19));
        let s = p.schur_dense().unwrap();
        assert!(s[(0, 0)] > 0.0);
        let sol = solve_quadcurl_eig(&p, 1, &EigenOptions::default()).unwrap();
        assert_eq!(sol.zero_count, Some(0));
        let expected = s[(0, 0)] / p.ops.mass_n.get(0, 0);
        assert!((sol.eig.values[0] - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn zero_count_matches_gradient_dimension() {
        let p = pencil(2, 1);
        let sol = solve_quadcurl_eig(&p, 3, &EigenOptions::default()).unwrap();
        assert_eq!(sol.zero_count, Some(sol.p));
        assert!(
            sol.divergence_residuals.iter().all(|r| *r <= 1e-8),
            "{:?}",
            sol.divergence_residuals
        );
        assert!(sol.eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    /// Schur form and the unreduced pencil (QZ) agree.
    #[test]
    fn schur_matches_block_pencil() {
        let p = pencil(1, 2);
        let (block, imag) = block_pencil_eigenvalues(&p, 1e-8).unwrap();
        let s = p.schur_dense().unwrap();
        let (all, _) = gen_sym_eig_range(&s, &p.ops.mass_n.to_dense(), 0..0).unwrap();
        let top = all.last().copied().unwrap();
        let schur: Vec<f64> = all.into_iter().filter(|v| *v >= 1e-8 * top).collect();
        assert_eq!(block.len(), schur.len());
        for (a, b) in block.iter().zip(&schur) {
            assert!((a - b).abs() <= 1e-8 * b, "{a} vs {b}");
        }
        assert!(imag <= 1e-8 * top);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let p = pencil(2, 1);
        let dense = solve_quadcurl_eig(&p, 4, &EigenOptions::default()).unwrap();
        let opts = EigenOptions {
            method: EigenMethod::Lanczos,
            ..EigenOptions::default()
        };
        let lz = solve_quadcurl_eig(&p, 4, &opts).unwrap();
        for (a, b) in lz.eig.values.iter().zip(&dense.eig.values) {
            assert!((a - b).abs() <= 1e-8 * b, "{a} vs {b}");
        }
        assert!(lz.divergence_residuals.iter().all(|r| *r <= 1e-8));
    }

    #[test]
    fn maxwell_first_cluster() {
        let ops = Arc::new(Operators::new(&MeshData::cube(3).unwrap(), 1).unwrap());
        let dense = solve_maxwell_eig(&ops, 4, &EigenOptions::default()).unwrap();
        assert_eq!(dense.zero_count, Some(ops.spaces.p()));
        let exact = 2.0 * PI * PI;
        for v in &dense.eig.values[..3] {
            assert!((v - exact).abs() < 0.15 * exact, "{v}");
        }
        let opts = EigenOptions {
            method: EigenMethod::Lanczos,
            ..EigenOptions::default()
        };
        let lz = solve_maxwell_eig(&ops, 4, &opts).unwrap();
        for (a, b) in lz.eig.values.iter().zip(&dense.eig.values) {
            assert!((a - b).abs() <= 1e-8 * b, "{a} vs {b}");
        }
        let c = friedrichs_constant(&dense).unwrap();
        assert!((c - 1.0 / dense.eig.values[0].sqrt()).abs() < 1e-15);
    }

    #[test]
    fn too_many_requested() {
        let p = pencil(1, 1);
        assert!(matches!(
            solve_quadcurl_eig(&p, 2, &EigenOptions::default()),
            Err(SystemError::TooFewEigenvalues {
                requested: 2,
                available: 1
            })
        ));
        assert!(solve_quadcurl_eig(&p, 0, &EigenOptions::default()).is_err());
    }
}
