//! Edge (first-kind Nedelec) and nodal (Lagrange) finite element spaces of
//! order 1 and 2.
//!
//! Global degrees of freedom use the ascending-vertex orientation of the
//! topology. On each tetrahedron the local (reference) functionals `l` relate
//! to the global ones by `g = T l`, where `T` is block diagonal: `diag(s, 1)`
//! per edge (`s` the orientation sign; the second moment is invariant under
//! reversal) and an integer 2x2 block per face. The global basis restricted to
//! a tetrahedron is therefore `phi T^{-1}`.

pub mod quadrature;
pub mod reference;

use std::sync::Arc;

use crate::mesh::{MeshData, Point, LOCAL_FACES};
use quadrature::{gauss_legendre, quadrature_rule, triangle_rule, QuadRule, QuadratureError};
use reference::{edge_basis, edge_local_dim, nodal_basis, nodal_local_dim, Vec3};

pub use reference::{reference_shape_functions, ShapeValues};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Curl-conforming edge elements.
    Edge,
    /// Continuous Lagrange elements.
    Nodal,
}

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum FeError {
    #[error("polynomial order {0} is not supported (use 1 or 2)")]
    UnsupportedOrder(usize),
    #[error("point {0:?} lies outside the reference tetrahedron")]
    OutsideReference(Point),
    #[error("operation requires a {expected:?} space")]
    FamilyMismatch { expected: Family },
    #[error("tetrahedron index {0} out of range")]
    TetOutOfRange(usize),
    #[error("vector length {got} does not match space dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Degree of the single quadrature rule used for element integrals.
pub fn default_quadrature_degree(k: usize) -> usize {
    2 * k + 2
}

/// Up to two (local slot, coefficient) terms of a global-on-tet basis function.
type Combo = [(u8, f64); 2];

#[derive(Debug)]
pub struct FESpace {
    data: Arc<MeshData>,
    family: Family,
    order: usize,
    local_dim: usize,
    num_dofs: usize,
    tet_dofs: Vec<usize>,
    combos: Vec<Combo>,
    free_dofs: Vec<usize>,
    free_index: Vec<Option<usize>>,
    constrained: bool,
}

/// Builds an edge or nodal space. With `constrained`, DoFs attached to
/// boundary entities are removed from the free set.
pub fn make_space(
    data: &Arc<MeshData>,
    family: Family,
    k: usize,
    constrained: bool,
) -> Result<Arc<FESpace>, FeError> {
    FESpace::new(data.clone(), family, k, constrained).map(Arc::new)
}

impl FESpace {
    pub fn new(
        data: Arc<MeshData>,
        family: Family,
        k: usize,
        constrained: bool,
    ) -> Result<Self, FeError> {
        if !(1..=2).contains(&k) {
            return Err(FeError::UnsupportedOrder(k));
        }
        let mesh = &data.mesh;
        let topo = &data.topology;
        let bnd = &data.boundary;
        let (ne, nf, nv) = (topo.num_edges(), topo.num_faces(), mesh.num_vertices());
        let (local_dim, num_dofs) = match family {
            Family::Edge => (edge_local_dim(k), if k == 1 { ne } else { 2 * ne + 2 * nf }),
            Family::Nodal => (nodal_local_dim(k), if k == 1 { nv } else { nv + ne }),
        };

        let nt = mesh.num_tets();
        let mut tet_dofs = Vec::with_capacity(nt * local_dim);
        let mut combos = Vec::with_capacity(nt * local_dim);
        for t in 0..nt {
            let tet = mesh.tets()[t];
            let edges = topo.tet_edges(t);
            let signs = topo.tet_edge_signs(t);
            match family {
                Family::Nodal => {
                    tet_dofs.extend(tet.iter().copied());
                    if k == 2 {
                        tet_dofs.extend(edges.iter().map(|&e| nv + e));
                    }
                    combos.extend((0..local_dim).map(|l| [(l as u8, 1.0), (0, 0.0)]));
                }
                Family::Edge if k == 1 => {
                    for l in 0..6 {
                        tet_dofs.push(edges[l]);
                        combos.push([(l as u8, signs[l] as f64), (0, 0.0)]);
                    }
                }
                Family::Edge => {
                    for l in 0..6 {
                        let e = edges[l];
                        tet_dofs.push(2 * e);
                        combos.push([((2 * l) as u8, signs[l] as f64), (0, 0.0)]);
                        tet_dofs.push(2 * e + 1);
                        combos.push([((2 * l + 1) as u8, 1.0), (0, 0.0)]);
                    }
                    for (lf, local) in LOCAL_FACES.iter().enumerate() {
                        let f = topo.tet_faces(t)[lf];
                        let inv = face_block_inverse(local.map(|v| tet[v]));
                        let base = (12 + 2 * lf) as u8;
                        for i in 0..2 {
                            tet_dofs.push(2 * ne + 2 * f + i);
                            combos.push([(base, inv[0][i]), (base + 1, inv[1][i])]);
                        }
                    }
                }
            }
        }

        let mut is_free = vec![true; num_dofs];
        if constrained {
            match family {
                Family::Edge => {
                    for &e in &bnd.edges {
                        for d in 0..k {
                            is_free[k * e + d] = false;
                        }
                    }
                    if k == 2 {
                        for &f in &bnd.faces {
                            is_free[2 * ne + 2 * f] = false;
                            is_free[2 * ne + 2 * f + 1] = false;
                        }
                    }
                }
                Family::Nodal => {
                    for &v in &bnd.vertices {
                        is_free[v] = false;
                    }
                    if k == 2 {
                        for &e in &bnd.edges {
                            is_free[nv + e] = false;
                        }
                    }
                }
            }
        }
        let mut free_dofs = Vec::new();
        let mut free_index = vec![None; num_dofs];
        for (i, &f) in is_free.iter().enumerate() {
            if f {
                free_index[i] = Some(free_dofs.len());
                free_dofs.push(i);
            }
        }

        Ok(Self {
            data,
            family,
            order: k,
            local_dim,
            num_dofs,
            tet_dofs,
            combos,
            free_dofs,
            free_index,
            constrained,
        })
    }

    pub fn mesh_data(&self) -> &Arc<MeshData> {
        &self.data
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn is_constrained(&self) -> bool {
        self.constrained
    }

    /// Free DoFs in ascending global order.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Position of a global DoF within the free set.
    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    /// Global DoF indices of tetrahedron `t`, in local slot order.
    pub fn tet_dofs(&self, t: usize) -> &[usize] {
        &self.tet_dofs[t * self.local_dim..(t + 1) * self.local_dim]
    }

    fn tet_combos(&self, t: usize) -> &[Combo] {
        &self.combos[t * self.local_dim..(t + 1) * self.local_dim]
    }

    /// Reference shape functions tabulated at the points of `rule`.
    pub fn tabulate(&self, rule: &QuadRule) -> ShapeTable {
        let mut table = ShapeTable {
            family: self.family,
            local_dim: self.local_dim,
            num_points: rule.len(),
            weights: rule.weights.clone(),
            points: rule.points.clone(),
            vectors: Vec::new(),
            scalars: Vec::new(),
            derivs: Vec::new(),
        };
        for p in &rule.points {
            match self.family {
                Family::Edge => {
                    let (v, c) = edge_basis(self.order, p);
                    table.vectors.extend(v);
                    table.derivs.extend(c);
                }
                Family::Nodal => {
                    let (v, g) = nodal_basis(self.order, p);
                    table.scalars.extend(v);
                    table.derivs.extend(g);
                }
            }
        }
        table
    }

    /// Physical values of the global basis functions supported on `t` at the
    /// tabulated points: covariant map for edge values, `J / det J` for curls,
    /// `J^{-T}` for nodal gradients.
    pub fn tet_basis(&self, t: usize, table: &ShapeTable, out: &mut TetBasis) {
        let map = self.data.mesh.affine_map(t);
        let ld = self.local_dim;
        let combos = self.tet_combos(t);
        out.det = map.det;
        out.local_dim = ld;
        out.vectors.clear();
        out.scalars.clear();
        out.derivs.clear();
        let curl_map = map.jacobian / map.det;
        for q in 0..table.num_points {
            let base = q * ld;
            for c in combos {
                let (a, ca) = (c[0].0 as usize, c[0].1);
                let (b, cb) = (c[1].0 as usize, c[1].1);
                match self.family {
                    Family::Edge => {
                        let v = table.vectors[base + a] * ca + table.vectors[base + b] * cb;
                        let d = table.derivs[base + a] * ca + table.derivs[base + b] * cb;
                        out.vectors.push(map.inv_transpose * v);
                        out.derivs.push(curl_map * d);
                    }
                    Family::Nodal => {
                        out.scalars.push(table.scalars[base + a] * ca);
                        out.derivs
                            .push(map.inv_transpose * (table.derivs[base + a] * ca));
                    }
                }
            }
        }
    }

    pub fn zeros(self: &Arc<Self>) -> DofVector {
        DofVector {
            space: self.clone(),
            values: vec![0.0; self.num_dofs],
        }
    }

    pub fn dof_vector(self: &Arc<Self>, values: Vec<f64>) -> Result<DofVector, FeError> {
        if values.len() != self.num_dofs {
            return Err(FeError::LengthMismatch {
                expected: self.num_dofs,
                got: values.len(),
            });
        }
        Ok(DofVector {
            space: self.clone(),
            values,
        })
    }

    /// Embeds a vector on the free DoFs, with zeros on constrained DoFs.
    pub fn extend_free(self: &Arc<Self>, free: &[f64]) -> Result<DofVector, FeError> {
        if free.len() != self.num_free() {
            return Err(FeError::LengthMismatch {
                expected: self.num_free(),
                got: free.len(),
            });
        }
        let mut v = self.zeros();
        for (&d, &x) in self.free_dofs.iter().zip(free) {
            v.values[d] = x;
        }
        Ok(v)
    }

    /// Interpolant of a vector field: the global edge and face moments are
    /// applied to `field` by quadrature on the physical mesh entities.
    pub fn interpolate(
        self: &Arc<Self>,
        field: impl Fn(&Point) -> Vec3,
    ) -> Result<DofVector, FeError> {
        if self.family != Family::Edge {
            return Err(FeError::FamilyMismatch {
                expected: Family::Edge,
            });
        }
        let verts = self.data.mesh.vertices();
        let topo = &self.data.topology;
        let k = self.order;
        let (sx, sw) = gauss_legendre(8);
        let mut out = self.zeros();
        for (e, &[i, j]) in topo.edges().iter().enumerate() {
            let t = verts[j] - verts[i];
            for m in 0..k {
                out.values[k * e + m] = sx
                    .iter()
                    .zip(&sw)
                    .map(|(&s, &w)| {
                        let q = if m == 0 { 1.0 } else { 2.0 * s - 1.0 };
                        w * q * field(&(verts[i] + t * s)).dot(&t)
                    })
                    .sum();
            }
        }
        if k == 2 {
            let ne = topo.num_edges();
            let (tp, tw) = triangle_rule(12)?;
            for (f, &[a, b, c]) in topo.faces().iter().enumerate() {
                let t1 = verts[b] - verts[a];
                let t2 = verts[c] - verts[a];
                for (i, t) in [t1, t2].into_iter().enumerate() {
                    out.values[2 * ne + 2 * f + i] = 2.0
                        * tp.iter()
                            .zip(&tw)
                            .map(|(st, &w)| {
                                w * field(&(verts[a] + t1 * st[0] + t2 * st[1])).dot(&t)
                            })
                            .sum::<f64>();
                }
            }
        }
        Ok(out)
    }

    /// Nodal interpolant of a scalar field (values at vertices and, for
    /// order 2, edge midpoints).
    pub fn interpolate_scalar(
        self: &Arc<Self>,
        field: impl Fn(&Point) -> f64,
    ) -> Result<DofVector, FeError> {
        if self.family != Family::Nodal {
            return Err(FeError::FamilyMismatch {
                expected: Family::Nodal,
            });
        }
        let verts = self.data.mesh.vertices();
        let mut out = self.zeros();
        for (v, p) in verts.iter().enumerate() {
            out.values[v] = field(p);
        }
        if self.order == 2 {
            let nv = verts.len();
            for (e, &[i, j]) in self.data.topology.edges().iter().enumerate() {
                out.values[nv + e] = field(&((verts[i] + verts[j]) * 0.5));
            }
        }
        Ok(out)
    }
}

/// Inverse of the face block of `T` for a face whose local vertices (in
/// ascending local order) carry the global indices `global`.
fn face_block_inverse(global: [usize; 3]) -> [[f64; 2]; 2] {
    const COEF: [[i32; 2]; 3] = [[0, 0], [1, 0], [0, 1]];
    let mut order = [0usize, 1, 2];
    order.sort_by_key(|&i| global[i]);
    let row = |p: usize| {
        [
            COEF[order[p]][0] - COEF[order[0]][0],
            COEF[order[p]][1] - COEF[order[0]][1],
        ]
    };
    let r = [row(1), row(2)];
    let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
    debug_assert!(det == 1 || det == -1);
    let d = det as f64;
    [
        [r[1][1] as f64 / d, -r[0][1] as f64 / d],
        [-r[1][0] as f64 / d, r[0][0] as f64 / d],
    ]
}

/// Reference basis values at the points of a quadrature rule, stored point
/// major (`index = q * local_dim + j`).
#[derive(Debug, Clone)]
pub struct ShapeTable {
    pub family: Family,
    pub local_dim: usize,
    pub num_points: usize,
    pub weights: Vec<f64>,
    pub points: Vec<Point>,
    vectors: Vec<Vec3>,
    scalars: Vec<f64>,
    derivs: Vec<Vec3>,
}

/// Physical basis values on one tetrahedron, point major like [`ShapeTable`].
#[derive(Debug, Clone, Default)]
pub struct TetBasis {
    pub det: f64,
    pub local_dim: usize,
    /// Edge-element values.
    pub vectors: Vec<Vec3>,
    /// Nodal values.
    pub scalars: Vec<f64>,
    /// Curls (edge) or gradients (nodal).
    pub derivs: Vec<Vec3>,
}

/// Local functional matrix `F[i][j] = l_i(grad N_j)` on the reference element,
/// for the edge functionals `l` and nodal basis `N` of equal order.
pub(crate) fn reference_gradient_dofs(k: usize) -> Vec<Vec<f64>> {
    let nn = nodal_local_dim(k);
    let ne = edge_local_dim(k);
    let mut out = vec![vec![0.0; nn]; ne];
    for j in 0..nn {
        let col = reference::apply_reference_dofs(k, |p| nodal_basis(k, p).1[j]);
        for (i, v) in col.into_iter().enumerate() {
            out[i][j] = v;
        }
    }
    out
}

/// Global edge functionals applied to local slot functionals on tet `t`:
/// returns `(global dof, [(local slot, coefficient)])` pairs, i.e. rows of `T`.
pub(crate) fn global_functionals(space: &FESpace, t: usize) -> Vec<(usize, Vec<(usize, f64)>)> {
    // T is the inverse of the stored combination matrix; for edge blocks the
    // inverse of diag(s, 1) is itself, for face blocks invert the 2x2.
    let dofs = space.tet_dofs(t);
    let combos = space.tet_combos(t);
    let mut rows = Vec::with_capacity(dofs.len());
    let mut j = 0;
    while j < dofs.len() {
        let c = combos[j];
        if space.family == Family::Nodal || j < 6 * space.order {
            rows.push((dofs[j], vec![(c[0].0 as usize, 1.0 / c[0].1)]));
            j += 1;
        } else {
            // 2x2 face block: columns j, j+1 give combos over slots (base, base+1)
            let c2 = combos[j + 1];
            let base = c[0].0 as usize;
            let m = [[c[0].1, c2[0].1], [c[1].1, c2[1].1]];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let inv = [
                [m[1][1] / det, -m[0][1] / det],
                [-m[1][0] / det, m[0][0] / det],
            ];
            for (i, row) in inv.iter().enumerate() {
                rows.push((dofs[j + i], vec![(base, row[0]), (base + 1, row[1])]));
            }
            j += 2;
        }
    }
    rows
}

/// Coefficient vector on a space.
#[derive(Debug, Clone)]
pub struct DofVector {
    space: Arc<FESpace>,
    pub values: Vec<f64>,
}

/// Field value and derivative at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldValue {
    Vector { value: Vec3, curl: Vec3 },
    Scalar { value: f64, gradient: Vec3 },
}

impl FieldValue {
    pub fn vector(&self) -> Option<(Vec3, Vec3)> {
        match *self {
            FieldValue::Vector { value, curl } => Some((value, curl)),
            _ => None,
        }
    }

    pub fn scalar(&self) -> Option<(f64, Vec3)> {
        match *self {
            FieldValue::Scalar { value, gradient } => Some((value, gradient)),
            _ => None,
        }
    }
}

/// L2 errors of a discrete field against an analytic one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `||u - u_h||`.
    pub value: f64,
    /// `||curl (u - u_h)||` or `||grad (u - u_h)||`.
    pub derivative: f64,
}

impl ErrorNorms {
    /// `H(curl)` or `H^1` norm of the error.
    pub fn energy(&self) -> f64 {
        self.value.hypot(self.derivative)
    }
}

impl DofVector {
    pub fn space(&self) -> &Arc<FESpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values on the free DoFs.
    pub fn free_values(&self) -> Vec<f64> {
        self.space
            .free_dofs
            .iter()
            .map(|&d| self.values[d])
            .collect()
    }

    pub fn eval(&self, t: usize, xhat: &Point) -> Result<FieldValue, FeError> {
        eval_field(&self.space, self, t, xhat)
    }

    /// Errors against an analytic vector field and its curl.
    pub fn vector_errors(
        &self,
        value: impl Fn(&Point) -> Vec3,
        curl: impl Fn(&Point) -> Vec3,
        degree: usize,
    ) -> Result<ErrorNorms, FeError> {
        if self.space.family != Family::Edge {
            return Err(FeError::FamilyMismatch {
                expected: Family::Edge,
            });
        }
        self.errors(degree, |x, u| {
            let (fv, fd) = (value(x), curl(x));
            let FieldValue::Vector {
                value: uv,
                curl: ud,
            } = u
            else {
                unreachable!()
            };
            ((fv - uv).norm_squared(), (fd - ud).norm_squared())
        })
    }

    /// Errors against an analytic scalar field and its gradient.
    pub fn scalar_errors(
        &self,
        value: impl Fn(&Point) -> f64,
        gradient: impl Fn(&Point) -> Vec3,
        degree: usize,
    ) -> Result<ErrorNorms, FeError> {
        if self.space.family != Family::Nodal {
            return Err(FeError::FamilyMismatch {
                expected: Family::Nodal,
            });
        }
        self.errors(degree, |x, u| {
            let FieldValue::Scalar {
                value: uv,
                gradient: ud,
            } = u
            else {
                unreachable!()
            };
            ((value(x) - uv).powi(2), (gradient(x) - ud).norm_squared())
        })
    }

    fn errors(
        &self,
        degree: usize,
        local: impl Fn(&Point, FieldValue) -> (f64, f64),
    ) -> Result<ErrorNorms, FeError> {
        let rule = quadrature_rule(degree)?;
        let table = self.space.tabulate(&rule);
        let mesh = &self.space.data.mesh;
        let mut basis = TetBasis::default();
        let (mut e0, mut e1) = (0.0, 0.0);
        for t in 0..mesh.num_tets() {
            self.space.tet_basis(t, &table, &mut basis);
            let map = mesh.affine_map(t);
            let coef: Vec<f64> = self
                .space
                .tet_dofs(t)
                .iter()
                .map(|&d| self.values[d])
                .collect();
            for (q, p) in rule.points.iter().enumerate() {
                let fv = combine(&self.space, &basis, q, &coef);
                let (a, b) = local(&map.to_physical(p), fv);
                e0 += rule.weights[q] * map.det * a;
                e1 += rule.weights[q] * map.det * b;
            }
        }
        Ok(ErrorNorms {
            value: e0.sqrt(),
            derivative: e1.sqrt(),
        })
    }
}

fn combine(space: &FESpace, basis: &TetBasis, q: usize, coef: &[f64]) -> FieldValue {
    let ld = basis.local_dim;
    let deriv: Vec3 = (0..ld).map(|j| basis.derivs[q * ld + j] * coef[j]).sum();
    match space.family {
        Family::Edge => FieldValue::Vector {
            value: (0..ld).map(|j| basis.vectors[q * ld + j] * coef[j]).sum(),
            curl: deriv,
        },
        Family::Nodal => FieldValue::Scalar {
            value: (0..ld).map(|j| basis.scalars[q * ld + j] * coef[j]).sum(),
            gradient: deriv,
        },
    }
}

/// Evaluates a discrete field on tetrahedron `t` at reference point `xhat`.
pub fn eval_field(
    space: &FESpace,
    u: &DofVector,
    t: usize,
    xhat: &Point,
) -> Result<FieldValue, FeError> {
    if t >= space.data.mesh.num_tets() {
        return Err(FeError::TetOutOfRange(t));
    }
    if u.values.len() != space.num_dofs {
        return Err(FeError::LengthMismatch {
            expected: space.num_dofs,
            got: u.values.len(),
        });
    }
    reference_shape_functions(space.family, space.order, xhat)?;
    let rule = QuadRule {
        points: vec![*xhat],
        weights: vec![1.0],
        degree: 0,
    };
    let table = space.tabulate(&rule);
    let mut basis = TetBasis::default();
    space.tet_basis(t, &table, &mut basis);
    let coef: Vec<f64> = space.tet_dofs(t).iter().map(|&d| u.values[d]).collect();
    Ok(combine(space, &basis, 0, &coef))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cube_mesh, Mesh};

    fn cube(n: usize) -> Arc<MeshData> {
        MeshData::cube(n).unwrap()
    }

    #[test]
    fn dof_counts() {
        let d = cube(1);
        let e1 = make_space(&d, Family::Edge, 1, false).unwrap();
        assert_eq!(e1.num_dofs(), 19);
        let e1c = make_space(&d, Family::Edge, 1, true).unwrap();
        assert_eq!(e1c.num_free(), 1);
        let e2 = make_space(&d, Family::Edge, 2, false).unwrap();
        assert_eq!(e2.num_dofs(), 2 * 19 + 2 * 18);
        let e2c = make_space(&d, Family::Edge, 2, true).unwrap();
        // diagonal edge (2) + 6 interior faces (12)
        assert_eq!(e2c.num_free(), 14);
        let n2 = make_space(&cube(2), Family::Nodal, 1, true).unwrap();
        assert_eq!(n2.num_free(), 1);
        let n2b = make_space(&cube(2), Family::Nodal, 2, false).unwrap();
        assert_eq!(n2b.num_dofs(), 27 + cube(2).topology.num_edges());
        assert!(matches!(
            make_space(&d, Family::Edge, 3, false),
            Err(FeError::UnsupportedOrder(3))
        ));
    }

    #[test]
    fn face_block_inverse_is_integer_inverse() {
        for g in [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ] {
            let inv = face_block_inverse(g);
            for row in inv {
                for v in row {
                    assert_eq!(v, v.round());
                }
            }
        }
        assert_eq!(face_block_inverse([3, 5, 9]), [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn constants_are_reproduced() {
        for k in 1..=2 {
            let d = cube(2);
            let s = make_space(&d, Family::Edge, k, false).unwrap();
            let u = s.interpolate(|_| Vec3::new(1.0, 0.0, 0.0)).unwrap();
            for t in 0..d.mesh.num_tets() {
                for p in [Point::new(0.1, 0.2, 0.3), Point::new(0.0, 0.5, 0.5)] {
                    let (v, c) = u.eval(t, &p).unwrap().vector().unwrap();
                    assert!((v - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
                    assert!(c.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rotation_field_is_reproduced_by_order_one() {
        let c = Vec3::new(0.3, -1.0, 2.0);
        let field = |x: &Point| x.cross(&c);
        let d = cube(2);
        let s = make_space(&d, Family::Edge, 1, false).unwrap();
        let u = s.interpolate(field).unwrap();
        for t in [0, 7, 30] {
            let xhat = Point::new(0.2, 0.3, 0.1);
            let x = d.mesh.affine_map(t).to_physical(&xhat);
            let (v, curl) = u.eval(t, &xhat).unwrap().vector().unwrap();
            assert!((v - field(&x)).norm() < 1e-12);
            // curl (x cross c) = -2c
            assert!((curl + c * 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn gradients_of_quadratics_reproduced_by_order_two() {
        let d = cube(2);
        let s = make_space(&d, Family::Edge, 2, false).unwrap();
        let grad = |x: &Point| Vec3::new(2.0 * x.x + x.y, x.x - x.z, -x.y + 3.0);
        let u = s.interpolate(grad).unwrap();
        for t in 0..d.mesh.num_tets() {
            let xhat = Point::new(0.25, 0.15, 0.4);
            let x = d.mesh.affine_map(t).to_physical(&xhat);
            let (v, curl) = u.eval(t, &xhat).unwrap().vector().unwrap();
            assert!((v - grad(&x)).norm() < 1e-11);
            assert!(curl.norm() < 1e-10);
        }
    }

    #[test]
    fn reference_tet_mapping_is_identity() {
        let mesh = Mesh::new(
            (0..4).map(reference::ref_vertex).collect(),
            vec![[0, 1, 2, 3]],
        )
        .unwrap();
        let d = MeshData::new(mesh).unwrap();
        for k in 1..=2 {
            let s = make_space(&d, Family::Edge, k, false).unwrap();
            let p = Point::new(0.2, 0.1, 0.3);
            let (vals, curls) = edge_basis(k, &p);
            // all vertices are in ascending order, so T is the identity
            for (j, &g) in s.tet_dofs(0).iter().enumerate() {
                let mut u = s.zeros();
                u.values[g] = 1.0;
                let (v, c) = u.eval(0, &p).unwrap().vector().unwrap();
                assert!((v - vals[j]).norm() < 1e-13);
                assert!((c - curls[j]).norm() < 1e-13);
            }
        }
    }

    /// Tangential traces agree across interior faces for random coefficients.
    #[test]
    fn tangential_continuity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mesh = generate_cube_mesh(2).unwrap();
        // perturb interior vertex so the mesh is not aligned
        let mut verts = mesh.vertices().to_vec();
        verts[13] += Point::new(0.05, -0.03, 0.02);
        let d = MeshData::new(Mesh::new(verts, mesh.tets().to_vec()).unwrap()).unwrap();
        let (tp, _) = triangle_rule(4).unwrap();
        for k in 1..=2 {
            let s = make_space(&d, Family::Edge, k, false).unwrap();
            let values = (0..s.num_dofs())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let u = s.dof_vector(values).unwrap();
            for (f, &[a, b, c]) in d.topology.faces().iter().enumerate() {
                let tets = d.topology.face_tets(f);
                if tets.len() != 2 {
                    continue;
                }
                let v = d.mesh.vertices();
                let (t1, t2) = (v[b] - v[a], v[c] - v[a]);
                let normal = t1.cross(&t2).normalize();
                for st in &tp {
                    let x = v[a] + t1 * st[0] + t2 * st[1];
                    let traces: Vec<Vec3> = tets
                        .iter()
                        .map(|&t| {
                            let xhat = d.mesh.affine_map(t).to_reference(&x);
                            let (val, _) = u.eval(t, &xhat).unwrap().vector().unwrap();
                            val.cross(&normal)
                        })
                        .collect();
                    let scale = traces[0].norm().max(1.0);
                    assert!(
                        (traces[0] - traces[1]).norm() < 1e-10 * scale,
                        "k={k} face {f}"
                    );
                }
            }
        }
    }

    fn interp_rate(k: usize) -> f64 {
        let pi = std::f64::consts::PI;
        let field = |x: &Point| Vec3::new((pi * x.y).sin(), 0.0, 0.0);
        let curl = |x: &Point| Vec3::new(0.0, 0.0, -pi * (pi * x.y).cos());
        let errs: Vec<f64> = [2, 4]
            .iter()
            .map(|&n| {
                let s = make_space(&cube(n), Family::Edge, k, false).unwrap();
                s.interpolate(field)
                    .unwrap()
                    .vector_errors(field, curl, 8)
                    .unwrap()
                    .value
            })
            .collect();
        (errs[0] / errs[1]).log2()
    }

    #[test]
    fn interpolation_rates() {
        assert!((interp_rate(1) - 1.0).abs() < 0.25);
        assert!((interp_rate(2) - 2.0).abs() < 0.25);
    }

    #[test]
    fn nodal_interpolation_reproduces_quadratics() {
        let d = cube(2);
        let s = make_space(&d, Family::Nodal, 2, false).unwrap();
        let f = |x: &Point| x.x * x.y - 2.0 * x.z * x.z + x.x;
        let g = |x: &Point| Vec3::new(x.y + 1.0, x.x, -4.0 * x.z);
        let u = s.interpolate_scalar(f).unwrap();
        let e = u.scalar_errors(f, g, 6).unwrap();
        assert!(e.value < 1e-13 && e.derivative < 1e-12);
    }

    #[test]
    fn eval_rejects_bad_input() {
        let d = cube(1);
        let s = make_space(&d, Family::Edge, 1, false).unwrap();
        let u = s.zeros();
        assert_eq!(u.eval(6, &Point::zeros()), Err(FeError::TetOutOfRange(6)));
        assert!(matches!(
            u.eval(0, &Point::new(1.0, 1.0, 0.0)),
            Err(FeError::OutsideReference(_))
        ));
        assert!(s.interpolate_scalar(|_| 0.0).is_err());
    }
}
