//! The mixed problems built from the kernels: the curl-curl source problem,
//! the quad-curl source problem and the quad-curl eigenvalue problem.

mod eigen;
mod manufactured;
mod source;

use std::sync::Arc;

pub use eigen::{
    block_pencil_eigenvalues, build_quadcurl_pencil, friedrichs_constant, solve_maxwell_eig,
    solve_quadcurl_eig, EigenMethod, EigenOptions, EigenSolution, PencilSystem, DENSE_LIMIT,
};
pub use manufactured::{ManufacturedCase, VectorField};
pub use source::{
    solve_curlcurl_source, solve_quadcurl_source, CurlCurlSystem, QuadCurlParts, QuadCurlSystem,
    SourceErrors, SourceSolution, ERROR_QUADRATURE_DEGREE, LOAD_QUADRATURE_DEGREE,
};

use crate::assembly::{
    assemble_curlcurl, assemble_gradient_map, assemble_mass, norm, AssemblyError, SparseMatrix,
};
use crate::fespace::{make_space, FESpace, Family, FeError};
use crate::mesh::MeshData;
use crate::solvers::SolverError;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum SystemError {
    #[error("the mesh has no interior edge degrees of freedom")]
    NoInteriorDofs,
    #[error("only {available} nonzero eigenvalues available, {requested} requested")]
    TooFewEigenvalues { requested: usize, available: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Fe(#[from] FeError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// The three spaces of the mixed formulations on one mesh: `U_h` (edge, no
/// boundary condition), `U_0h` (edge, vanishing tangential trace) and `S_h`
/// (nodal, vanishing trace).
#[derive(Debug, Clone)]
pub struct MixedSpaces {
    pub edge: Arc<FESpace>,
    pub edge0: Arc<FESpace>,
    pub nodal0: Arc<FESpace>,
}

impl MixedSpaces {
    pub fn new(data: &Arc<MeshData>, k: usize) -> Result<Self, SystemError> {
        Ok(Self {
            edge: make_space(data, Family::Edge, k, false)?,
            edge0: make_space(data, Family::Edge, k, true)?,
            nodal0: make_space(data, Family::Nodal, k, true)?,
        })
    }

    pub fn order(&self) -> usize {
        self.edge.order()
    }

    /// `M = dim U_h`.
    pub fn m(&self) -> usize {
        self.edge.num_free()
    }

    /// `N = dim U_0h`.
    pub fn n(&self) -> usize {
        self.edge0.num_free()
    }

    /// `P = dim S_h`.
    pub fn p(&self) -> usize {
        self.nodal0.num_free()
    }
}

/// Assembled matrices shared by the mixed problems. Row/column sizes use
/// `M = dim U_h`, `N = dim U_0h`, `P = dim S_h`.
#[derive(Debug, Clone)]
pub struct Operators {
    pub spaces: MixedSpaces,
    /// `K(i, j) = (curl phi0_j, curl phi_i)`, `M x N`.
    pub k: SparseMatrix,
    /// Curl-curl on `U_0h`, `N x N`.
    pub k0: SparseMatrix,
    /// Mass on `U_h`, `M x M`.
    pub mass_m: SparseMatrix,
    /// Mass on `U_0h`, `N x N`.
    pub mass_n: SparseMatrix,
    /// Discrete gradient `S_h -> U_0h`, `N x P`.
    pub grad0: SparseMatrix,
    /// Discrete gradient `S_h -> U_h`, `M x P`.
    pub grad_m: SparseMatrix,
}

impl Operators {
    pub fn assemble(spaces: MixedSpaces) -> Result<Self, SystemError> {
        if spaces.n() == 0 {
            return Err(SystemError::NoInteriorDofs);
        }
        let k = assemble_curlcurl(&spaces.edge, &spaces.edge0)?;
        let k0 = k.restrict(
            spaces.edge0.free_dofs(),
            &(0..spaces.n()).collect::<Vec<_>>(),
        );
        let mass_m = assemble_mass(&spaces.edge);
        let mass_n = mass_m.restrict(spaces.edge0.free_dofs(), spaces.edge0.free_dofs());
        let g = assemble_gradient_map(&spaces.nodal0, &spaces.edge)?;
        let grad0 = g.restrict(spaces.edge0.free_dofs(), spaces.nodal0.free_dofs());
        let grad_m = g.restrict(spaces.edge.free_dofs(), spaces.nodal0.free_dofs());
        Ok(Self {
            spaces,
            k,
            k0,
            mass_m,
            mass_n,
            grad0,
            grad_m,
        })
    }

    pub fn new(data: &Arc<MeshData>, k: usize) -> Result<Self, SystemError> {
        Self::assemble(MixedSpaces::new(data, k)?)
    }

    /// `B_N = M_N G_0`, `N x P`.
    pub fn b_n(&self) -> SparseMatrix {
        self.mass_n.matmul(&self.grad0)
    }

    /// `B_M = M_M G_M`, `M x P`.
    pub fn b_m(&self) -> SparseMatrix {
        self.mass_m.matmul(&self.grad_m)
    }

    /// Gradient Laplacian `G_0^T M_N G_0`, `P x P`.
    pub fn gradient_laplacian(&self) -> SparseMatrix {
        self.grad0.transpose().matmul(&self.b_n())
    }

    /// Relative discrete divergence `||G_0^T M_N u|| / ||M_N u||` of a vector
    /// on the free DoFs of `U_0h`; zero for `u = 0`.
    pub fn divergence_residual(&self, u: &[f64]) -> f64 {
        divergence_residual(&self.grad0, &self.mass_n, u)
    }
}

/// `||G^T M u|| / ||M u||`, defined as 0 when `M u = 0`.
pub fn divergence_residual(grad0: &SparseMatrix, mass_n: &SparseMatrix, u: &[f64]) -> f64 {
    let mu = mass_n.mul_vec(u);
    let d = norm(&mu);
    if d == 0.0 {
        return 0.0;
    }
    norm(&grad0.mul_vec_transpose(&mu)) / d
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_cube_dimensions() {
        let ops = Operators::new(&MeshData::cube(1).unwrap(), 1).unwrap();
        assert_eq!((ops.spaces.n(), ops.spaces.m(), ops.spaces.p()), (1, 19, 0));
        assert_eq!((ops.k.nrows(), ops.k.ncols()), (19, 1));
        assert!(ops.k0.get(0, 0) > 0.0);
    }

    #[test]
    fn gradients_lie_in_curl_kernel() {
        for k in 1..=2 {
            let ops = Operators::new(&MeshData::cube(2).unwrap(), k).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
            let p: Vec<f64> = (0..ops.spaces.p())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let kg = ops.k.mul_vec(&ops.grad0.mul_vec(&p));
            assert!(kg.iter().all(|v| v.abs() <= 1e-10), "k={k}");
        }
    }

    #[test]
    fn divergence_residual_of_gradients_and_zero() {
        let ops = Operators::new(&MeshData::cube(2).unwrap(), 1).unwrap();
        assert_eq!(ops.divergence_residual(&vec![0.0; ops.spaces.n()]), 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let p: Vec<f64> = (0..ops.spaces.p())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let u = ops.grad0.mul_vec(&p);
            assert!(ops.divergence_residual(&u) > 0.1);
        }
    }

    #[test]
    fn mass_blocks_agree() {
        let ops = Operators::new(&MeshData::cube(2).unwrap(), 2).unwrap();
        let free = ops.spaces.edge0.free_dofs();
        for (a, &i) in free.iter().enumerate().step_by(7) {
            for (b, &j) in free.iter().enumerate().step_by(5) {
                assert_eq!(ops.mass_n.get(a, b), ops.mass_m.get(i, j));
            }
        }
    }
}
