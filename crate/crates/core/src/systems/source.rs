//! Mixed source problems with discrete divergence multipliers.

use std::sync::Arc;

use super::{ManufacturedCase, Operators, SystemError};
use crate::assembly::{assemble_load, assemble_mass_free, dot, SparseMatrix};
use crate::fespace::reference::Vec3;
use crate::fespace::{DofVector, ErrorNorms};
use crate::mesh::{MeshData, Point};
use crate::solvers::{RegularizedSolver, SolverError, DEFAULT_DELTA};

/// Quadrature degree for load vectors. High enough that the quadrature error
/// in `(f, grad xi)` (which vanishes analytically for divergence-free `f`)
/// stays far below the multiplier threshold.
pub const LOAD_QUADRATURE_DEGREE: usize = 24;

/// Iterative refinement continues to this relative residual (or until it
/// stops improving): the multipliers are small differences of large
/// quantities and need more than the default solver tolerance.
const REFINEMENT_TARGET: f64 = 1e-15;

/// Quadrature degree for error norms.
pub const ERROR_QUADRATURE_DEGREE: usize = 10;

/// Errors of a source solution against the analytic solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceErrors {
    /// `||u - u_h||` and `||curl (u - u_h)||`.
    pub u: ErrorNorms,
    /// `||curl^2 u - phi_h||` (quad-curl problem only).
    pub phi: Option<f64>,
}

impl SourceErrors {
    /// `||curl(u - u_h)|| + ||curl^2 u - phi_h||`.
    pub fn combined(&self) -> f64 {
        self.u.derivative + self.phi.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct SourceSolution {
    /// `u_h` in `U_0h`.
    pub u: DofVector,
    /// `phi_h` in `U_h` (quad-curl problem only).
    pub phi: Option<DofVector>,
    /// Multiplier `p_h` in `S_h` enforcing the divergence constraint on `u_h`.
    pub p: DofVector,
    /// Multiplier `q_h` in `S_h` for `phi_h` (quad-curl problem only).
    pub q: Option<DofVector>,
    /// Relative residual of the assembled block system.
    pub residual: f64,
    /// Largest multiplier L2 norm relative to `||u_h||`.
    pub multiplier_ratio: f64,
    pub errors: Option<SourceErrors>,
}

fn l2(m: &SparseMatrix, x: &[f64]) -> f64 {
    dot(x, &m.mul_vec(x)).max(0.0).sqrt()
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn solved(
    r: Result<crate::solvers::RefinedSolution, SolverError>,
) -> Result<(Vec<f64>, f64), SystemError> {
    let s = r?;
    Ok((s.x, s.relative_residual))
}

/// Factored curl-curl saddle system `[K_0 B_N; B_N^T 0]` on `U_0h x S_h`.
#[derive(Debug, Clone)]
pub struct CurlCurlSystem {
    ops: Arc<Operators>,
    solver: RegularizedSolver,
    mass_s: SparseMatrix,
}

impl CurlCurlSystem {
    pub fn new(ops: Arc<Operators>) -> Result<Self, SystemError> {
        let (n, p) = (ops.spaces.n(), ops.spaces.p());
        let b = ops.b_n();
        let bt = b.transpose();
        let a = SparseMatrix::block(
            &[vec![Some(&ops.k0), Some(&b)], vec![Some(&bt), None]],
            &[n, p],
            &[n, p],
        );
        let mut signs = vec![1i8; n];
        signs.resize(n + p, -1);
        let solver =
            RegularizedSolver::new(&a, &signs, DEFAULT_DELTA)?.with_target(REFINEMENT_TARGET);
        let mass_s = assemble_mass_free(&ops.spaces.nodal0);
        Ok(Self {
            ops,
            solver,
            mass_s,
        })
    }

    pub fn operators(&self) -> &Arc<Operators> {
        &self.ops
    }

    /// Solves with the load `F_i = (f, phi0_i)` given on the free DoFs.
    pub fn solve_load(&self, load: &[f64]) -> Result<SourceSolution, SystemError> {
        let (n, p) = (self.ops.spaces.n(), self.ops.spaces.p());
        if load.len() != n {
            return Err(SystemError::InvalidArgument(format!(
                "load has length {}, expected {n}",
                load.len()
            )));
        }
        let mut rhs = load.to_vec();
        rhs.resize(n + p, 0.0);
        let (mut x, residual) = solved(self.solver.solve(&rhs))?;
        let pv = x.split_off(n);
        let sp = &self.ops.spaces;
        let multiplier_ratio = ratio(l2(&self.mass_s, &pv), l2(&self.ops.mass_n, &x));
        Ok(SourceSolution {
            u: sp.edge0.extend_free(&x)?,
            phi: None,
            p: sp.nodal0.extend_free(&pv)?,
            q: None,
            residual,
            multiplier_ratio,
            errors: None,
        })
    }

    pub fn solve_field(&self, f: impl Fn(&Point) -> Vec3) -> Result<SourceSolution, SystemError> {
        let load = assemble_load(&self.ops.spaces.edge0, f, LOAD_QUADRATURE_DEGREE)?;
        self.solve_load(&load.free_values())
    }

    /// Solves with `f = case.f` and measures the errors against `case.u`.
    pub fn solve_case(&self, case: &ManufacturedCase) -> Result<SourceSolution, SystemError> {
        let mut sol = self.solve_field(|x| (case.f)(x))?;
        let u = sol.u.vector_errors(
            |x| (case.u)(x),
            |x| (case.curl_u)(x),
            ERROR_QUADRATURE_DEGREE,
        )?;
        sol.errors = Some(SourceErrors { u, phi: None });
        Ok(sol)
    }
}

/// Solves `curl curl u = f`, `div u = 0`, `u x n = 0` with the mixed method on
/// `U_0h x S_h`, with `f = case.f`.
pub fn solve_curlcurl_source(
    data: &Arc<MeshData>,
    k: usize,
    case: &ManufacturedCase,
) -> Result<SourceSolution, SystemError> {
    CurlCurlSystem::new(Arc::new(Operators::new(data, k)?))?.solve_case(case)
}

/// Block vectors of a quad-curl solve on the free DoFs.
#[derive(Debug, Clone)]
pub struct QuadCurlParts {
    pub phi: Vec<f64>,
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub residual: f64,
}

/// Factored quad-curl system in the unknowns `(phi, u, q, p)`:
///
/// ```text
/// [ M_M    -K    B_M   0    ] [phi]   [ 0 ]
/// [ -K^T    0     0   -B_N  ] [ u ] = [-F ]
/// [ B_M^T   0     0    0    ] [ q ]   [ 0 ]
/// [ 0     -B_N^T  0    0    ] [ p ]   [ 0 ]
/// ```
///
/// The first row gives `phi = M_M^{-1} K u` (with `q = 0`), the second
/// `K^T phi + B_N p = F`, i.e. `K^T M_M^{-1} K u + B_N p = F`.
#[derive(Debug, Clone)]
pub struct QuadCurlSystem {
    ops: Arc<Operators>,
    solver: RegularizedSolver,
    mass_s: SparseMatrix,
}

impl QuadCurlSystem {
    pub fn new(ops: Arc<Operators>) -> Result<Self, SystemError> {
        let (m, n, p) = (ops.spaces.m(), ops.spaces.n(), ops.spaces.p());
        let neg_k = ops.k.scaled(-1.0);
        let neg_kt = neg_k.transpose();
        let b_m = ops.b_m();
        let b_mt = b_m.transpose();
        let neg_bn = ops.b_n().scaled(-1.0);
        let neg_bnt = neg_bn.transpose();
        let sizes = [m, n, p, p];
        let a = SparseMatrix::block(
            &[
                vec![Some(&ops.mass_m), Some(&neg_k), Some(&b_m), None],
                vec![Some(&neg_kt), None, None, Some(&neg_bn)],
                vec![Some(&b_mt), None, None, None],
                vec![None, Some(&neg_bnt), None, None],
            ],
            &sizes,
            &sizes,
        );
        // (phi, p) positive and (u, q) negative makes the regularized matrix
        // quasi-definite
        let mut signs = vec![1i8; m];
        signs.extend(std::iter::repeat(-1).take(n + p));
        signs.extend(std::iter::repeat(1).take(p));
        let solver =
            RegularizedSolver::new(&a, &signs, DEFAULT_DELTA)?.with_target(REFINEMENT_TARGET);
        let mass_s = assemble_mass_free(&ops.spaces.nodal0);
        Ok(Self {
            ops,
            solver,
            mass_s,
        })
    }

    pub fn operators(&self) -> &Arc<Operators> {
        &self.ops
    }

    /// Solves with the load `F_i = (f, phi0_i)` given on the free DoFs of
    /// `U_0h`, returning the raw block vectors.
    pub fn solve_parts(&self, load: &[f64]) -> Result<QuadCurlParts, SystemError> {
        let sp = &self.ops.spaces;
        let (m, n, p) = (sp.m(), sp.n(), sp.p());
        if load.len() != n {
            return Err(SystemError::InvalidArgument(format!(
                "load has length {}, expected {n}",
                load.len()
            )));
        }
        let mut rhs = vec![0.0; m];
        rhs.extend(load.iter().map(|v| -v));
        rhs.resize(m + n + 2 * p, 0.0);
        let (mut x, residual) = solved(self.solver.solve(&rhs))?;
        let pv = x.split_off(m + n + p);
        let q = x.split_off(m + n);
        let u = x.split_off(m);
        Ok(QuadCurlParts {
            phi: x,
            u,
            q,
            p: pv,
            residual,
        })
    }

    pub fn solve_load(&self, load: &[f64]) -> Result<SourceSolution, SystemError> {
        let parts = self.solve_parts(load)?;
        let sp = &self.ops.spaces;
        let un = l2(&self.ops.mass_n, &parts.u);
        let multiplier_ratio =
            ratio(l2(&self.mass_s, &parts.p), un).max(ratio(l2(&self.mass_s, &parts.q), un));
        Ok(SourceSolution {
            u: sp.edge0.extend_free(&parts.u)?,
            phi: Some(sp.edge.extend_free(&parts.phi)?),
            p: sp.nodal0.extend_free(&parts.p)?,
            q: Some(sp.nodal0.extend_free(&parts.q)?),
            residual: parts.residual,
            multiplier_ratio,
            errors: None,
        })
    }

    pub fn solve_field(&self, f: impl Fn(&Point) -> Vec3) -> Result<SourceSolution, SystemError> {
        let load = assemble_load(&self.ops.spaces.edge0, f, LOAD_QUADRATURE_DEGREE)?;
        self.solve_load(&load.free_values())
    }

    /// Solves with `f = case.f`, measuring `u_h` against `case.u` and `phi_h`
    /// against `case.curl2_u`.
    pub fn solve_case(&self, case: &ManufacturedCase) -> Result<SourceSolution, SystemError> {
        let mut sol = self.solve_field(|x| (case.f)(x))?;
        let u = sol.u.vector_errors(
            |x| (case.u)(x),
            |x| (case.curl_u)(x),
            ERROR_QUADRATURE_DEGREE,
        )?;
        let phi = sol
            .phi
            .as_ref()
            .expect("quad-curl solution carries phi")
            .vector_errors(
                |x| (case.curl2_u)(x),
                |_| Vec3::zeros(),
                ERROR_QUADRATURE_DEGREE,
            )?
            .value;
        sol.errors = Some(SourceErrors { u, phi: Some(phi) });
        Ok(sol)
    }
}

/// Solves `curl^4 u = f`, `div u = 0`, `u x n = (curl u) x n = 0` with the
/// mixed method, with `f = case.f`.
pub fn solve_quadcurl_source(
    data: &Arc<MeshData>,
    k: usize,
    case: &ManufacturedCase,
) -> Result<SourceSolution, SystemError> {
    QuadCurlSystem::new(Arc::new(Operators::new(data, k)?))?.solve_case(case)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::spd_solve;

    fn ops(n: usize, k: usize) -> Arc<Operators> {
        Arc::new(Operators::new(&MeshData::cube(n).unwrap(), k).unwrap())
    }

    #[test]
    fn zero_source_gives_zero() {
        let o = ops(2, 1);
        let s = CurlCurlSystem::new(o.clone())
            .unwrap()
            .solve_case(&ManufacturedCase::zero())
            .unwrap();
        assert!(s.u.values.iter().all(|v| *v == 0.0) && s.p.values.iter().all(|v| *v == 0.0));
        let s = QuadCurlSystem::new(o)
            .unwrap()
            .solve_case(&ManufacturedCase::zero())
            .unwrap();
        assert!(s.u.values.iter().all(|v| *v == 0.0));
        assert!(s.phi.unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn curlcurl_sine_has_vanishing_multiplier() {
        for k in 1..=2 {
            let s =
                solve_curlcurl_source(&MeshData::cube(2).unwrap(), k, &ManufacturedCase::sine())
                    .unwrap();
            assert!(s.residual <= 1e-9);
            assert!(s.multiplier_ratio <= 1e-8, "k={k}: {}", s.multiplier_ratio);
            let e = s.errors.unwrap();
            assert!(e.u.energy() < 0.6 * std::f64::consts::PI, "k={k}: {e:?}");
        }
    }

    /// A pure gradient load is absorbed entirely by the multiplier.
    #[test]
    fn gradient_load_goes_to_multiplier() {
        let o = ops(2, 1);
        let sys = CurlCurlSystem::new(o.clone()).unwrap();
        let q: Vec<f64> = (0..o.spaces.p()).map(|i| ((i + 1) as f64).sin()).collect();
        let load = o.b_n().mul_vec(&q);
        let s = sys.solve_load(&load).unwrap();
        let u = s.u.free_values();
        assert!(crate::assembly::norm(&u) <= 1e-8 * crate::assembly::norm(&q));
        let p = s.p.free_values();
        let diff: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a - b).collect();
        assert!(crate::assembly::norm(&diff) <= 1e-8 * crate::assembly::norm(&q));
    }

    /// The quad-curl solution agrees with an independent route: `u` solves
    /// the Schur-form saddle system and `phi = M_M^{-1} K u`.
    #[test]
    fn quadcurl_blocks_are_consistent() {
        let o = ops(2, 1);
        let sys = QuadCurlSystem::new(o.clone()).unwrap();
        let load = assemble_load(&o.spaces.edge0, |x| (ManufacturedCase::sin3().f)(x), 12)
            .unwrap()
            .free_values();
        let parts = sys.solve_parts(&load).unwrap();
        assert!(parts.residual <= 1e-9);
        let phi = spd_solve(&o.mass_m, &o.k.mul_vec(&parts.u)).unwrap();
        let scale = crate::assembly::norm(&parts.phi);
        for (a, b) in phi.iter().zip(&parts.phi) {
            assert!((a - b).abs() <= 1e-8 * scale);
        }
        let qn = crate::assembly::norm(&parts.q);
        assert!(qn <= 1e-8 * scale, "q = {qn}");
        // K^T phi + B_N p = F
        let r: Vec<f64> =
            o.k.mul_vec_transpose(&parts.phi)
                .iter()
                .zip(o.b_n().mul_vec(&parts.p))
                .zip(&load)
                .map(|((a, b), f)| a + b - f)
                .collect();
        assert!(crate::assembly::norm(&r) <= 1e-8 * crate::assembly::norm(&load));
        assert!(o.divergence_residual(&parts.u) <= 1e-8);
    }

    #[test]
    fn quadcurl_sin3_multipliers_vanish() {
        let s = solve_quadcurl_source(&MeshData::cube(2).unwrap(), 2, &ManufacturedCase::sin3())
            .unwrap();
        assert!(s.residual <= 1e-9);
        assert!(s.multiplier_ratio <= 1e-8, "{}", s.multiplier_ratio);
        assert!(s.errors.unwrap().phi.is_some());
    }

    #[test]
    fn wrong_load_length_is_rejected() {
        let sys = CurlCurlSystem::new(ops(1, 1)).unwrap();
        assert!(matches!(
            sys.solve_load(&[1.0, 2.0]),
            Err(SystemError::InvalidArgument(_))
        ));
    }
}
