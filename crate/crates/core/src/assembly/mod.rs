//! Element-loop assembly of mass, curl-curl and gradient matrices and load
//! vectors.

mod sparse;

use std::collections::HashMap;
use std::sync::Arc;

pub use sparse::{dot, norm, restrict_vector, SparseMatrix, Triplets};

use crate::fespace::quadrature::quadrature_rule;
use crate::fespace::reference::Vec3;
use crate::fespace::{
    default_quadrature_degree, global_functionals, reference_gradient_dofs, DofVector, FESpace,
    Family, FeError, TetBasis,
};
use crate::mesh::Point;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("expected a {expected:?} space")]
    FamilyMismatch { expected: Family },
    #[error("spaces have different orders ({0} and {1})")]
    OrderMismatch(usize, usize),
    #[error("spaces are defined on different meshes")]
    MeshMismatch,
    #[error(transparent)]
    Fe(#[from] FeError),
}

fn require(space: &FESpace, family: Family) -> Result<(), AssemblyError> {
    if space.family() != family {
        return Err(AssemblyError::FamilyMismatch { expected: family });
    }
    Ok(())
}

fn same_mesh(a: &FESpace, b: &FESpace) -> Result<(), AssemblyError> {
    if !Arc::ptr_eq(a.mesh_data(), b.mesh_data()) {
        return Err(AssemblyError::MeshMismatch);
    }
    Ok(())
}

/// Generic symmetric bilinear-form loop over all DoFs of `space`.
fn assemble_bilinear(
    space: &FESpace,
    integrand: impl Fn(&TetBasis, usize, usize, usize) -> f64,
) -> SparseMatrix {
    let rule = quadrature_rule(default_quadrature_degree(space.order())).expect("low-degree rule");
    let table = space.tabulate(&rule);
    let ld = space.local_dim();
    let nt = space.mesh_data().mesh.num_tets();
    let mut trip = Triplets::with_capacity(space.num_dofs(), space.num_dofs(), nt * ld * ld);
    let mut basis = TetBasis::default();
    let mut local = vec![0.0; ld * ld];
    for t in 0..nt {
        space.tet_basis(t, &table, &mut basis);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &w) in rule.weights.iter().enumerate() {
            let wq = w * basis.det;
            for i in 0..ld {
                for j in 0..=i {
                    local[i * ld + j] += wq * integrand(&basis, q, i, j);
                }
            }
        }
        let dofs = space.tet_dofs(t);
        for i in 0..ld {
            for j in 0..=i {
                let v = local[i * ld + j];
                trip.add(dofs[i], dofs[j], v);
                if i != j {
                    trip.add(dofs[j], dofs[i], v);
                }
            }
        }
    }
    trip.to_csr(true)
}

/// `M(i, j) = (phi_j, phi_i)` over all DoFs of an edge or nodal space.
pub fn assemble_mass(space: &FESpace) -> SparseMatrix {
    let ld = space.local_dim();
    match space.family() {
        Family::Edge => assemble_bilinear(space, |b, q, i, j| {
            b.vectors[q * ld + i].dot(&b.vectors[q * ld + j])
        }),
        Family::Nodal => assemble_bilinear(space, |b, q, i, j| {
            b.scalars[q * ld + i] * b.scalars[q * ld + j]
        }),
    }
}

/// Nodal stiffness `(grad phi_j, grad phi_i)` over all DoFs.
pub fn assemble_stiffness(space: &FESpace) -> Result<SparseMatrix, AssemblyError> {
    require(space, Family::Nodal)?;
    let ld = space.local_dim();
    Ok(assemble_bilinear(space, |b, q, i, j| {
        b.derivs[q * ld + i].dot(&b.derivs[q * ld + j])
    }))
}

/// `C(i, j) = (curl phi_j, curl phi_i)` restricted to the free DoFs of
/// `row_space` (rows) and `col_space` (columns).
pub fn assemble_curlcurl(
    row_space: &FESpace,
    col_space: &FESpace,
) -> Result<SparseMatrix, AssemblyError> {
    require(row_space, Family::Edge)?;
    require(col_space, Family::Edge)?;
    same_mesh(row_space, col_space)?;
    if row_space.order() != col_space.order() {
        return Err(AssemblyError::OrderMismatch(
            row_space.order(),
            col_space.order(),
        ));
    }
    let ld = row_space.local_dim();
    let full = assemble_bilinear(row_space, |b, q, i, j| {
        b.derivs[q * ld + i].dot(&b.derivs[q * ld + j])
    });
    Ok(full.restrict(row_space.free_dofs(), col_space.free_dofs()))
}

/// Mass matrix restricted to the free DoFs of `space`.
pub fn assemble_mass_free(space: &FESpace) -> SparseMatrix {
    let full = assemble_mass(space);
    full.restrict(space.free_dofs(), space.free_dofs())
}

/// Discrete gradient `G` from nodal to edge coefficients on the full DoF
/// sets: the edge interpolant of `grad p_h` is exact, so `G` is obtained by
/// applying the global edge functionals to nodal basis gradients.
pub fn assemble_gradient_map(
    nodal: &FESpace,
    edge: &FESpace,
) -> Result<SparseMatrix, AssemblyError> {
    require(nodal, Family::Nodal)?;
    require(edge, Family::Edge)?;
    same_mesh(nodal, edge)?;
    if nodal.order() != edge.order() {
        return Err(AssemblyError::OrderMismatch(nodal.order(), edge.order()));
    }
    let local = reference_gradient_dofs(edge.order());
    let nt = edge.mesh_data().mesh.num_tets();
    let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
    for t in 0..nt {
        let ndofs = nodal.tet_dofs(t);
        for (g, row) in global_functionals(edge, t) {
            for (jn, &nd) in ndofs.iter().enumerate() {
                let v: f64 = row.iter().map(|&(slot, c)| c * local[slot][jn]).sum();
                // the same global functional is seen from every incident tet
                entries.insert((g, nd), v);
            }
        }
    }
    Ok(SparseMatrix::from_entries(
        edge.num_dofs(),
        nodal.num_dofs(),
        entries
            .into_iter()
            .filter(|&(_, v)| v.abs() > 1e-13)
            .map(|((i, j), v)| (i, j, v)),
        false,
    ))
}

/// Load vector `(f, phi_i)` over all DoFs of an edge space, integrated with a
/// rule of the given degree.
pub fn assemble_load(
    space: &Arc<FESpace>,
    f: impl Fn(&Point) -> Vec3,
    degree: usize,
) -> Result<DofVector, AssemblyError> {
    require(space, Family::Edge)?;
    let rule = quadrature_rule(degree).map_err(FeError::from)?;
    let table = space.tabulate(&rule);
    let ld = space.local_dim();
    let mesh = &space.mesh_data().mesh;
    let mut out = space.zeros();
    let mut basis = TetBasis::default();
    for t in 0..mesh.num_tets() {
        space.tet_basis(t, &table, &mut basis);
        let map = mesh.affine_map(t);
        let dofs = space.tet_dofs(t);
        for (q, p) in rule.points.iter().enumerate() {
            let fx = f(&map.to_physical(p)) * (rule.weights[q] * basis.det);
            for (j, &d) in dofs.iter().enumerate() {
                out.values[d] += fx.dot(&basis.vectors[q * ld + j]);
            }
        }
    }
    Ok(out)
}

/// Restriction of a full-length vector to the free DoFs of `space`.
pub fn restrict_free(space: &FESpace, v: &[f64]) -> Vec<f64> {
    restrict_vector(v, space.free_dofs())
}
