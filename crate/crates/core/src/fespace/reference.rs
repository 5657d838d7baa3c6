//! Shape functions on the reference tetrahedron with vertices
//! `0, e_x, e_y, e_z`.
//!
//! Edge functions span the first-kind Nedelec space R_k and are dual to the
//! reference degrees of freedom:
//!
//! * edge `(a, b)`, `t = v_b - v_a`: `int_0^1 u(v_a + s t) . t q_m(s) ds` with
//!   `q_0 = 1`, `q_1 = 2s - 1` (the second moment only for order 2);
//! * face `(a, b, c)` (order 2 only): the face means of `u . (v_b - v_a)` and
//!   `u . (v_c - v_a)`.
//!
//! Order 1 gives the Whitney functions directly. Order 2 starts from the
//! prebasis `lambda_a w_ab, lambda_b w_ab` per edge and `lambda_c w_ab,
//! lambda_a w_bc` per face and is made dual by inverting the moment matrix.

use std::sync::OnceLock;

use nalgebra::{DMatrix, Vector3};

use super::quadrature::{gauss_legendre, triangle_rule};
use super::{Family, FeError};
use crate::mesh::{Point, LOCAL_EDGES, LOCAL_FACES};

pub type Vec3 = Vector3<f64>;

/// Tolerance for accepting a point as inside the closed reference element.
pub const INSIDE_TOL: f64 = 1e-12;

pub(crate) const REF_VERTICES: [[f64; 3]; 4] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
];

pub(crate) fn ref_vertex(i: usize) -> Point {
    Point::from(REF_VERTICES[i])
}

pub(crate) fn barycentric(p: &Point) -> [f64; 4] {
    [1.0 - p.x - p.y - p.z, p.x, p.y, p.z]
}

pub(crate) fn bary_gradients() -> [Vec3; 4] {
    [
        Vec3::new(-1.0, -1.0, -1.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ]
}

/// Local dimension of the edge space of order `k`: `k (k + 2) (k + 3) / 2`.
pub fn edge_local_dim(k: usize) -> usize {
    k * (k + 2) * (k + 3) / 2
}

/// Local dimension of the nodal space of order `k`.
pub fn nodal_local_dim(k: usize) -> usize {
    (k + 1) * (k + 2) * (k + 3) / 6
}

/// Values of reference shape functions at one point.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeValues {
    Vector {
        values: Vec<Vec3>,
        curls: Vec<Vec3>,
    },
    Scalar {
        values: Vec<f64>,
        gradients: Vec<Vec3>,
    },
}

pub fn reference_shape_functions(
    family: Family,
    k: usize,
    point: &Point,
) -> Result<ShapeValues, FeError> {
    if !(1..=2).contains(&k) {
        return Err(FeError::UnsupportedOrder(k));
    }
    if barycentric(point).iter().any(|&l| l < -INSIDE_TOL) {
        return Err(FeError::OutsideReference(*point));
    }
    Ok(match family {
        Family::Edge => {
            let (values, curls) = edge_basis(k, point);
            ShapeValues::Vector { values, curls }
        }
        Family::Nodal => {
            let (values, gradients) = nodal_basis(k, point);
            ShapeValues::Scalar { values, gradients }
        }
    })
}

/// Whitney function of local edge `(a, b)` and its (constant) curl.
fn whitney(l: &[f64; 4], g: &[Vec3; 4], a: usize, b: usize) -> (Vec3, Vec3) {
    (g[b] * l[a] - g[a] * l[b], g[a].cross(&g[b]) * 2.0)
}

/// `lambda_c w_ab` and its curl.
fn scaled_whitney(l: &[f64; 4], g: &[Vec3; 4], c: usize, a: usize, b: usize) -> (Vec3, Vec3) {
    let (w, cw) = whitney(l, g, a, b);
    (w * l[c], g[c].cross(&w) + cw * l[c])
}

fn prebasis(k: usize, p: &Point) -> (Vec<Vec3>, Vec<Vec3>) {
    let l = barycentric(p);
    let g = bary_gradients();
    let mut values = Vec::with_capacity(edge_local_dim(k));
    let mut curls = Vec::with_capacity(edge_local_dim(k));
    if k == 1 {
        for &(a, b) in LOCAL_EDGES.iter() {
            let (v, c) = whitney(&l, &g, a, b);
            values.push(v);
            curls.push(c);
        }
        return (values, curls);
    }
    for &(a, b) in LOCAL_EDGES.iter() {
        for c in [a, b] {
            let (v, cu) = scaled_whitney(&l, &g, c, a, b);
            values.push(v);
            curls.push(cu);
        }
    }
    for &[a, b, c] in LOCAL_FACES.iter() {
        for (s, i, j) in [(c, a, b), (a, b, c)] {
            let (v, cu) = scaled_whitney(&l, &g, s, i, j);
            values.push(v);
            curls.push(cu);
        }
    }
    (values, curls)
}

/// Applies the reference degrees of freedom to a vector field, in local
/// order: edge moments first (`k` per edge), then face moments (2 per face).
pub fn apply_reference_dofs(k: usize, field: impl Fn(&Point) -> Vec3) -> Vec<f64> {
    let (sx, sw) = gauss_legendre(k + 4);
    let (tp, tw) = triangle_rule(2 * k + 4).expect("small triangle rule");
    let mut out = Vec::with_capacity(edge_local_dim(k));
    for &(a, b) in LOCAL_EDGES.iter() {
        let (va, vb) = (ref_vertex(a), ref_vertex(b));
        let t = vb - va;
        for m in 0..k {
            out.push(
                sx.iter()
                    .zip(&sw)
                    .map(|(&s, &w)| {
                        let q = if m == 0 { 1.0 } else { 2.0 * s - 1.0 };
                        w * field(&(va + t * s)).dot(&t) * q
                    })
                    .sum(),
            );
        }
    }
    if k == 2 {
        for &[a, b, c] in LOCAL_FACES.iter() {
            let va = ref_vertex(a);
            let t1 = ref_vertex(b) - va;
            let t2 = ref_vertex(c) - va;
            for t in [t1, t2] {
                out.push(
                    2.0 * tp
                        .iter()
                        .zip(&tw)
                        .map(|(st, &w)| w * field(&(va + t1 * st[0] + t2 * st[1])).dot(&t))
                        .sum::<f64>(),
                );
            }
        }
    }
    out
}

/// Coefficients `C` with `phi_j = sum_i P_i C_ij` for the prebasis `P`.
fn dual_coefficients(k: usize) -> &'static DMatrix<f64> {
    static ORDER1: OnceLock<DMatrix<f64>> = OnceLock::new();
    static ORDER2: OnceLock<DMatrix<f64>> = OnceLock::new();
    let cell = if k == 1 { &ORDER1 } else { &ORDER2 };
    cell.get_or_init(|| {
        let n = edge_local_dim(k);
        let mut moments = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let col = apply_reference_dofs(k, |p| prebasis(k, p).0[j]);
            for (i, v) in col.into_iter().enumerate() {
                moments[(i, j)] = v;
            }
        }
        moments
            .try_inverse()
            .expect("edge-element prebasis is unisolvent")
    })
}

/// Dual edge basis (values, curls) of order `k` at a reference point.
pub(crate) fn edge_basis(k: usize, p: &Point) -> (Vec<Vec3>, Vec<Vec3>) {
    let (pv, pc) = prebasis(k, p);
    if k == 1 {
        return (pv, pc);
    }
    let coef = dual_coefficients(k);
    let n = pv.len();
    let mut values = vec![Vec3::zeros(); n];
    let mut curls = vec![Vec3::zeros(); n];
    for j in 0..n {
        for i in 0..n {
            let c = coef[(i, j)];
            if c != 0.0 {
                values[j] += pv[i] * c;
                curls[j] += pc[i] * c;
            }
        }
    }
    (values, curls)
}

/// Lagrange basis of order `k` (values at vertices, then edge midpoints).
pub(crate) fn nodal_basis(k: usize, p: &Point) -> (Vec<f64>, Vec<Vec3>) {
    let l = barycentric(p);
    let g = bary_gradients();
    if k == 1 {
        return (l.to_vec(), g.to_vec());
    }
    let mut values = Vec::with_capacity(10);
    let mut grads = Vec::with_capacity(10);
    for i in 0..4 {
        values.push(l[i] * (2.0 * l[i] - 1.0));
        grads.push(g[i] * (4.0 * l[i] - 1.0));
    }
    for &(a, b) in LOCAL_EDGES.iter() {
        values.push(4.0 * l[a] * l[b]);
        grads.push((g[a] * l[b] + g[b] * l[a]) * 4.0);
    }
    (values, grads)
}

/// Reference nodes of the Lagrange space of order `k`.
#[cfg(test)]
pub(crate) fn nodal_points(k: usize) -> Vec<Point> {
    let mut pts: Vec<Point> = (0..4).map(ref_vertex).collect();
    if k == 2 {
        for &(a, b) in LOCAL_EDGES.iter() {
            pts.push((ref_vertex(a) + ref_vertex(b)) * 0.5);
        }
    }
    pts
}
