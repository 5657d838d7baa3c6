use std::collections::HashMap;

use super::{Mesh, MeshError};

/// Local edges of a tetrahedron as pairs of local vertex indices.
pub const LOCAL_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Local faces; face `i` is opposite local vertex `i`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Global edges and faces of a mesh with their tetrahedron incidences.
///
/// Edges are stored as `[i, j]` with `i < j` and faces as ascending vertex
/// triples; both lists are sorted lexicographically, so numbering depends only
/// on the set of tetrahedra and not on their order.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    tet_edges: Vec<[usize; 6]>,
    /// +1 when the local edge direction (low to high local index) agrees with
    /// the global low-to-high direction.
    tet_edge_signs: Vec<[i8; 6]>,
    tet_faces: Vec<[usize; 4]>,
    /// Parity of the permutation taking the local face vertex order to the
    /// ascending global order.
    tet_face_signs: Vec<[i8; 4]>,
    face_tets: Vec<Vec<usize>>,
}

impl Topology {
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn tet_edges(&self, t: usize) -> &[usize; 6] {
        &self.tet_edges[t]
    }

    pub fn tet_edge_signs(&self, t: usize) -> &[i8; 6] {
        &self.tet_edge_signs[t]
    }

    pub fn tet_faces(&self, t: usize) -> &[usize; 4] {
        &self.tet_faces[t]
    }

    pub fn tet_face_signs(&self, t: usize) -> &[i8; 4] {
        &self.tet_face_signs[t]
    }

    /// Tetrahedra incident to face `f` (one for boundary faces, two otherwise).
    pub fn face_tets(&self, f: usize) -> &[usize] {
        &self.face_tets[f]
    }

    pub fn num_interior_faces(&self) -> usize {
        self.face_tets.iter().filter(|t| t.len() == 2).count()
    }

    /// `V - E + F - T`; equals 1 for a mesh of a contractible domain.
    pub fn euler_characteristic(&self, mesh: &Mesh) -> i64 {
        mesh.num_vertices() as i64 - self.edges.len() as i64 + self.faces.len() as i64
            - mesh.num_tets() as i64
    }
}

fn sort3(mut v: [usize; 3]) -> ([usize; 3], i8) {
    let mut sign = 1;
    for i in 0..2 {
        for j in 0..2 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    (v, sign)
}

pub fn build_topology(mesh: &Mesh) -> Result<Topology, MeshError> {
    let mut edges: Vec<[usize; 2]> = Vec::with_capacity(mesh.num_tets() * 6);
    let mut faces: Vec<[usize; 3]> = Vec::with_capacity(mesh.num_tets() * 4);
    for tet in mesh.tets() {
        for &(a, b) in LOCAL_EDGES.iter() {
            let (i, j) = (tet[a], tet[b]);
            edges.push([i.min(j), i.max(j)]);
        }
        for lf in LOCAL_FACES.iter() {
            faces.push(sort3(lf.map(|l| tet[l])).0);
        }
    }
    edges.sort_unstable();
    edges.dedup();
    faces.sort_unstable();
    faces.dedup();
    let edge_index: HashMap<[usize; 2], usize> =
        edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let face_index: HashMap<[usize; 3], usize> =
        faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();

    let mut tet_edges = Vec::with_capacity(mesh.num_tets());
    let mut tet_edge_signs = Vec::with_capacity(mesh.num_tets());
    let mut tet_faces = Vec::with_capacity(mesh.num_tets());
    let mut tet_face_signs = Vec::with_capacity(mesh.num_tets());
    let mut face_tets = vec![Vec::with_capacity(2); faces.len()];
    for (t, tet) in mesh.tets().iter().enumerate() {
        let mut te = [0; 6];
        let mut ts = [0i8; 6];
        for (l, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
            let (i, j) = (tet[a], tet[b]);
            te[l] = edge_index[&[i.min(j), i.max(j)]];
            ts[l] = if i < j { 1 } else { -1 };
        }
        let mut tf = [0; 4];
        let mut fs = [0i8; 4];
        for (l, lf) in LOCAL_FACES.iter().enumerate() {
            let (key, sign) = sort3(lf.map(|v| tet[v]));
            let f = face_index[&key];
            tf[l] = f;
            fs[l] = sign;
            face_tets[f].push(t);
        }
        tet_edges.push(te);
        tet_edge_signs.push(ts);
        tet_faces.push(tf);
        tet_face_signs.push(fs);
    }
    if let Some((f, tets)) = face_tets.iter().enumerate().find(|(_, t)| t.len() > 2) {
        return Err(MeshError::NonConforming {
            face: faces[f],
            count: tets.len(),
        });
    }
    Ok(Topology {
        edges,
        faces,
        tet_edges,
        tet_edge_signs,
        tet_faces,
        tet_face_signs,
        face_tets,
    })
}

/// Entities lying on the domain boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySet {
    pub faces: Vec<usize>,
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
    face_mask: Vec<bool>,
    edge_mask: Vec<bool>,
    vertex_mask: Vec<bool>,
}

impl BoundarySet {
    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_mask[f]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_mask[e]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_mask[v]
    }
}

/// Boundary faces are those with a single incident tetrahedron; boundary edges
/// and vertices are the ones lying on a boundary face.
pub fn boundary_classification(mesh: &Mesh, topology: &Topology) -> BoundarySet {
    let mut face_mask = vec![false; topology.num_faces()];
    let mut edge_mask = vec![false; topology.num_edges()];
    let mut vertex_mask = vec![false; mesh.num_vertices()];
    for (t, faces) in topology.tet_faces.iter().enumerate() {
        let edges = &topology.tet_edges[t];
        for (l, &f) in faces.iter().enumerate() {
            if topology.face_tets[f].len() != 1 {
                continue;
            }
            face_mask[f] = true;
            for v in topology.faces[f] {
                vertex_mask[v] = true;
            }
            // local edges not touching the opposite vertex `l`
            for (le, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
                if a != l && b != l {
                    edge_mask[edges[le]] = true;
                }
            }
        }
    }
    let collect = |mask: &[bool]| {
        mask.iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect::<Vec<_>>()
    };
    BoundarySet {
        faces: collect(&face_mask),
        edges: collect(&edge_mask),
        vertices: collect(&vertex_mask),
        face_mask,
        edge_mask,
        vertex_mask,
    }
}
