//! Tetrahedral meshes: storage, structured cube generation, Gmsh import and
//! the derived edge/face topology.

mod gmsh;
mod topology;

pub use gmsh::{read_gmsh, GmshError};
pub use topology::{boundary_classification, build_topology, BoundarySet, Topology};
pub use topology::{LOCAL_EDGES, LOCAL_FACES};

use nalgebra::{Matrix3, Vector3};

pub type Point = Vector3<f64>;

/// Relative volume below which a tetrahedron is treated as degenerate.
const DEGENERATE_VOLUME: f64 = 1e-14;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum MeshError {
    #[error("cube subdivision count must be at least 1, got {0}")]
    InvalidSubdivision(usize),
    #[error("mesh has no tetrahedra")]
    Empty,
    #[error(
        "tetrahedron {tet} references vertex {vertex}, but the mesh has {num_vertices} vertices"
    )]
    VertexOutOfRange {
        tet: usize,
        vertex: usize,
        num_vertices: usize,
    },
    #[error("tetrahedron {0} is degenerate (zero volume or repeated vertex)")]
    Degenerate(usize),
    #[error("non-conforming mesh: face {face:?} is shared by {count} tetrahedra")]
    NonConforming { face: [usize; 3], count: usize },
}

/// A conforming tetrahedral mesh.
///
/// Every stored tetrahedron is positively oriented: the construction swaps the
/// last two vertices of any tetrahedron with negative signed volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    tets: Vec<[usize; 4]>,
    h_max: f64,
}

impl Mesh {
    pub fn new(vertices: Vec<Point>, tets: Vec<[usize; 4]>) -> Result<Self, MeshError> {
        if tets.is_empty() {
            return Err(MeshError::Empty);
        }
        let mut tets = tets;
        let mut h_max: f64 = 0.0;
        for (t, tet) in tets.iter_mut().enumerate() {
            for &v in tet.iter() {
                if v >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange {
                        tet: t,
                        vertex: v,
                        num_vertices: vertices.len(),
                    });
                }
            }
            let p = tet.map(|v| vertices[v]);
            let mut longest: f64 = 0.0;
            for &(a, b) in LOCAL_EDGES.iter() {
                longest = longest.max((p[b] - p[a]).norm());
            }
            let vol = signed_volume(&p);
            if longest == 0.0 || vol.abs() <= DEGENERATE_VOLUME * longest.powi(3) {
                return Err(MeshError::Degenerate(t));
            }
            if vol < 0.0 {
                tet.swap(2, 3);
            }
            h_max = h_max.max(longest);
        }
        Ok(Self {
            vertices,
            tets,
            h_max,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    /// Longest edge over all tetrahedra.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn tet_points(&self, t: usize) -> [Point; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn volume(&self, t: usize) -> f64 {
        signed_volume(&self.tet_points(t))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_tets()).map(|t| self.volume(t)).sum()
    }

    /// Affine map data of tetrahedron `t`: `x = origin + jacobian * xhat`.
    pub fn affine_map(&self, t: usize) -> AffineMap {
        AffineMap::new(&self.tet_points(t))
    }

    /// Returns a copy with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().map(|p| p * factor).collect(),
            tets: self.tets.clone(),
            h_max: self.h_max * factor.abs(),
        }
    }

    /// Same mesh with the tetrahedra visited in a different order.
    pub fn with_tet_order(&self, order: &[usize]) -> Mesh {
        assert_eq!(order.len(), self.tets.len());
        Mesh {
            vertices: self.vertices.clone(),
            tets: order.iter().map(|&t| self.tets[t]).collect(),
            h_max: self.h_max,
        }
    }
}

pub fn signed_volume(p: &[Point; 4]) -> f64 {
    (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])) / 6.0
}

/// Affine reference-to-physical map of a tetrahedron.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub origin: Point,
    pub jacobian: Matrix3<f64>,
    pub det: f64,
    /// `J^{-T}`, the covariant transform applied to edge-element values.
    pub inv_transpose: Matrix3<f64>,
}

impl AffineMap {
    pub fn new(p: &[Point; 4]) -> Self {
        let jacobian = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
        let det = jacobian.determinant();
        let inv = jacobian
            .try_inverse()
            .expect("affine map of a non-degenerate tetrahedron is invertible");
        Self {
            origin: p[0],
            jacobian,
            det,
            inv_transpose: inv.transpose(),
        }
    }

    pub fn to_physical(&self, xhat: &Point) -> Point {
        self.origin + self.jacobian * xhat
    }

    pub fn to_reference(&self, x: &Point) -> Point {
        self.inv_transpose.transpose() * (x - self.origin)
    }
}

/// Structured mesh of `[0,1]^3` with `n^3` subcubes, each cut into the six
/// Kuhn tetrahedra sharing the subcube's main diagonal.
pub fn generate_cube_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidSubdivision(n));
    }
    let m = n + 1;
    let index = |i: usize, j: usize, k: usize| i + m * (j + m * k);
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                vertices.push(Point::new(i as f64 * h, j as f64 * h, k as f64 * h));
            }
        }
    }
    const AXIS_ORDERS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for order in AXIS_ORDERS.iter() {
                    let mut c = [i, j, k];
                    let mut tet = [index(c[0], c[1], c[2]); 4];
                    for (step, &axis) in order.iter().enumerate() {
                        c[axis] += 1;
                        tet[step + 1] = index(c[0], c[1], c[2]);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    Mesh::new(vertices, tets)
}

/// A mesh bundled with its topology and boundary classification, shared by
/// every finite element space built on it.
#[derive(Debug, Clone)]
pub struct MeshData {
    pub mesh: Mesh,
    pub topology: Topology,
    pub boundary: BoundarySet,
}

impl MeshData {
    pub fn new(mesh: Mesh) -> Result<std::sync::Arc<Self>, MeshError> {
        let topology = build_topology(&mesh)?;
        let boundary = boundary_classification(&mesh, &topology);
        Ok(std::sync::Arc::new(Self {
            mesh,
            topology,
            boundary,
        }))
    }

    pub fn cube(n: usize) -> Result<std::sync::Arc<Self>, MeshError> {
        Self::new(generate_cube_mesh(n)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_n1_counts() {
        let mesh = generate_cube_mesh(1).unwrap();
        assert_eq!(mesh.num_vertices(), 8);
        assert_eq!(mesh.num_tets(), 6);
        assert!((mesh.h_max() - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn cube_n2_has_one_interior_vertex() {
        let mesh = generate_cube_mesh(2).unwrap();
        assert_eq!(mesh.num_vertices(), 27);
        assert_eq!(mesh.num_tets(), 48);
        let interior: Vec<_> = mesh
            .vertices()
            .iter()
            .filter(|p| p.iter().all(|&c| c > 1e-12 && c < 1.0 - 1e-12))
            .collect();
        assert_eq!(interior.len(), 1);
        assert!((interior[0] - Point::new(0.5, 0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn cube_volumes_are_positive_and_sum_to_one() {
        for n in 1..=4 {
            let mesh = generate_cube_mesh(n).unwrap();
            assert!((0..mesh.num_tets()).all(|t| mesh.volume(t) > 0.0));
            assert!((mesh.total_volume() - 1.0).abs() < 1e-12);
            assert!((mesh.h_max() - 3f64.sqrt() / n as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert_eq!(generate_cube_mesh(0), Err(MeshError::InvalidSubdivision(0)));
    }

    #[test]
    fn negative_orientation_is_repaired() {
        let vertices = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        let mesh = Mesh::new(vertices, vec![[0, 2, 1, 3]]).unwrap();
        assert!((mesh.volume(0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_tets_rejected() {
        let vertices = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
        ];
        assert_eq!(
            Mesh::new(vertices.clone(), vec![[0, 1, 2, 3]]),
            Err(MeshError::Degenerate(0))
        );
        assert!(matches!(
            Mesh::new(vertices, vec![[0, 1, 2, 7]]),
            Err(MeshError::VertexOutOfRange { vertex: 7, .. })
        ));
    }

    #[test]
    fn affine_map_round_trip() {
        let mesh = generate_cube_mesh(2).unwrap();
        let map = mesh.affine_map(13);
        let xhat = Point::new(0.1, 0.2, 0.3);
        let back = map.to_reference(&map.to_physical(&xhat));
        assert!((back - xhat).norm() < 1e-14);
        assert!((map.det - 6.0 * mesh.volume(13)).abs() < 1e-14);
    }
}
