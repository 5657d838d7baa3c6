//! Sparse direct solvers, dense generalized eigensolvers and shift-invert
//! Lanczos.

mod eigen;
mod ldl;
mod linear;
mod ordering;

pub use eigen::{
    gen_sym_eig, gen_sym_eig_range, gen_sym_eig_select, general_pencil_eigenvalues,
    lanczos_largest, norm_inf, EigenResult, LanczosOptions,
};
pub use ldl::{EnvelopeLdl, PivotPolicy};
pub use linear::{
    saddle_solve, spd_solve, RefinedSolution, RegularizedSolver, SpdSolver, DEFAULT_DELTA,
    LINEAR_TOL,
};
pub use ordering::{bandwidth, reverse_cuthill_mckee};

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum SolverError {
    #[error("matrix is not positive definite (pivot {value:e} at row {pivot})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("iteration stalled at relative residual {residual:e} (target {tolerance:e})")]
    NotConverged { residual: f64, tolerance: f64 },
    #[error("eigensolver failure: {0}")]
    Eigen(String),
}
