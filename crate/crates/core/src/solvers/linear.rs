use super::ldl::{EnvelopeLdl, PivotPolicy};
use super::SolverError;
use crate::assembly::{norm, SparseMatrix};

/// Relative residual required from every linear solve.
pub const LINEAR_TOL: f64 = 1e-10;

const REFINEMENT_STEPS: usize = 60;

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

/// Factored SPD matrix.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    ldl: EnvelopeLdl,
}

impl SpdSolver {
    pub fn new(a: &SparseMatrix) -> Result<Self, SolverError> {
        Ok(Self {
            ldl: EnvelopeLdl::factor(a, PivotPolicy::Positive)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.ldl.dim()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.ldl.solve(b)
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn spd_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    check_square(a, b.len())?;
    let s = SpdSolver::new(a)?;
    let mut x = s.solve(b);
    // one refinement step keeps the residual at rounding level
    let r = residual(a, &x, b);
    let dx = s.solve(&r);
    x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
    Ok(x)
}

fn check_square(a: &SparseMatrix, n: usize) -> Result<(), SolverError> {
    if a.nrows() != a.ncols() || a.nrows() != n {
        return Err(SolverError::DimensionMismatch(format!(
            "{}x{} matrix with right-hand side of length {n}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Symmetric indefinite system solved through a quasi-definite
/// regularization `A + delta * diag(s_i d_i)` followed by iterative
/// refinement against `A` itself.
///
/// `signs[i] = +1` marks unknowns of the "primal" (positive) group and `-1`
/// those of the "dual" (negative) group; `d_i` is `|a_ii|` or, for a zero
/// diagonal, the largest entry of row `i`.
#[derive(Debug, Clone)]
pub struct RegularizedSolver {
    a: SparseMatrix,
    ldl: EnvelopeLdl,
    tol: f64,
    target: f64,
}

/// Outcome of a refined solve.
#[derive(Debug, Clone)]
pub struct RefinedSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

impl RegularizedSolver {
    pub fn new(a: &SparseMatrix, signs: &[i8], delta: f64) -> Result<Self, SolverError> {
        check_square(a, signs.len())?;
        let diag: Vec<f64> = (0..a.nrows())
            .map(|i| {
                let (_, vals) = a.row(i);
                let aii = a.get(i, i).abs();
                let d = if aii > 0.0 {
                    aii
                } else {
                    vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
                };
                delta * signs[i] as f64 * if d > 0.0 { d } else { 1.0 }
            })
            .collect();
        let reg = a.add_scaled(1.0, &SparseMatrix::from_diagonal(&diag));
        Ok(Self {
            a: a.clone(),
            ldl: EnvelopeLdl::factor(&reg, PivotPolicy::NonZero)?,
            tol: LINEAR_TOL,
            target: LINEAR_TOL,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Refines until the relative residual reaches `target`, or stops
    /// improving; in the latter case the best iterate is accepted if it meets
    /// the solver tolerance.
    pub fn with_target(mut self, target: f64) -> Self {
        self.target = target;
        self
    }

    pub fn solve(&self, b: &[f64]) -> Result<RefinedSolution, SolverError> {
        let bn = norm(b);
        if bn == 0.0 {
            return Ok(RefinedSolution {
                x: vec![0.0; b.len()],
                iterations: 0,
                relative_residual: 0.0,
            });
        }
        let target = self.target.min(self.tol);
        let mut x = self.ldl.solve(b);
        let mut best = (f64::INFINITY, x.clone(), 0);
        for it in 0..=REFINEMENT_STEPS {
            let r = residual(&self.a, &x, b);
            let rel = norm(&r) / bn;
            if !rel.is_finite() {
                break;
            }
            let improving = rel < 0.5 * best.0;
            if rel < best.0 {
                best = (rel, x.clone(), it);
            }
            if rel <= target {
                break;
            }
            if !improving && (best.0 <= self.tol || it > 10) {
                break;
            }
            let dx = self.ldl.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        }
        let (rel, x, iterations) = best;
        if rel <= self.tol {
            Ok(RefinedSolution {
                x,
                iterations,
                relative_residual: rel,
            })
        } else {
            Err(SolverError::NotConverged {
                residual: rel,
                tolerance: self.tol,
            })
        }
    }
}

/// Default regularization for saddle and KKT systems.
pub const DEFAULT_DELTA: f64 = 1e-8;

/// Solves the saddle system `[K B; B^T 0] [u; p] = [f; g]` (`g = 0` when
/// `None`), with `K` symmetric positive semidefinite and the block system
/// nonsingular.
pub fn saddle_solve(
    k: &SparseMatrix,
    b: &SparseMatrix,
    f: &[f64],
    g: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
    let (n, p) = (k.nrows(), b.ncols());
    if k.ncols() != n || b.nrows() != n || f.len() != n || g.is_some_and(|g| g.len() != p) {
        return Err(SolverError::DimensionMismatch("saddle blocks".into()));
    }
    let bt = b.transpose();
    let a = SparseMatrix::block(
        &[vec![Some(k), Some(b)], vec![Some(&bt), None]],
        &[n, p],
        &[n, p],
    );
    let mut signs = vec![1i8; n];
    signs.resize(n + p, -1);
    let mut rhs = f.to_vec();
    match g {
        Some(g) => rhs.extend_from_slice(g),
        None => rhs.resize(n + p, 0.0),
    }
    let sol = RegularizedSolver::new(&a, &signs, DEFAULT_DELTA)
        .map_err(singular)?
        .solve(&rhs)
        .map_err(singular)?;
    let mut u = sol.x;
    let q = u.split_off(n);
    Ok((u, q))
}

fn singular(e: SolverError) -> SolverError {
    match e {
        SolverError::NotConverged { residual, .. } => {
            SolverError::Singular(format!("block system residual stalled at {residual:.3e}"))
        }
        other => other,
    }
}
