//! Oriented triangle meshes of compact surfaces.
//!
//! A [`SurfaceMesh`] stores connectivity (vertices, oriented edges, faces)
//! together with per-edge displacement vectors. Geometry is always derived
//! from the edge vectors rather than from vertex positions, which lets
//! periodic meshes such as the flat torus carry their unwrapped metric.

mod builders;
mod cohomology;
mod dec;
mod off;

pub use builders::{build_flat_torus, build_icosphere, build_rectangle};
pub use dec::{build_dec, DecOperators, Incidence};
pub use off::{load_off, parse_off, save_off, write_off};

use std::collections::HashMap;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub type Vec3 = [f64; 3];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("non-triangle face at face {face} ({arity} vertices)")]
    NonTriangleFace { face: usize, arity: usize },
    #[error("inconsistent orientation on edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),
    #[error("isolated vertex {0}")]
    IsolatedVertex(usize),
    #[error("non-manifold edge ({0}, {1}) borders more than two faces")]
    NonManifoldEdge(usize, usize),
    #[error("degenerate face {0}")]
    DegenerateFace(usize),
    #[error("vertex index {index} out of range at face {face}")]
    IndexOutOfRange { face: usize, index: usize },
    #[error("edge ({0}, {1}) borders no face")]
    DanglingEdge(usize, usize),
    #[error("mesh is not connected")]
    Disconnected,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid builder argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One side of a face: the edge it runs along and whether it follows the
/// edge orientation (`+1`) or opposes it (`-1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceSide {
    pub edge: usize,
    pub sign: i8,
}

#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    edges: Vec<[usize; 2]>,
    edge_vectors: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    // side k runs from corner k to corner k+1
    face_sides: Vec<[FaceSide; 3]>,
    edge_faces: Vec<[Option<usize>; 2]>,
    boundary_edges: Vec<bool>,
    boundary_vertices: Vec<bool>,
    face_areas: Vec<f64>,
    total_area: f64,
    // integer winding of each edge across the periodic seams (flat torus only)
    seam_windings: Option<Vec<[i32; 2]>>,
}

impl SurfaceMesh {
    /// Build a mesh from vertex positions and counterclockwise triangles.
    /// Edges are oriented from the lower to the higher vertex index.
    pub fn from_triangles(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let nv = vertices.len();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        // how many times each edge has been traversed forwards / backwards
        let mut uses: Vec<[u32; 2]> = Vec::new();
        let mut face_sides = Vec::with_capacity(faces.len());
        let mut used_vertex = vec![false; nv];

        for (f, tri) in faces.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange { face: f, index: v });
                }
                used_vertex[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateFace(f));
            }
            let mut sides = [FaceSide { edge: 0, sign: 1 }; 3];
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                let key = (u.min(v), u.max(v));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    uses.push([0, 0]);
                    edges.len() - 1
                });
                let forward = u < v;
                let slot = if forward { 0 } else { 1 };
                uses[e][slot] += 1;
                if uses[e][0] + uses[e][1] > 2 {
                    return Err(MeshError::NonManifoldEdge(key.0, key.1));
                }
                if uses[e][slot] > 1 {
                    return Err(MeshError::InconsistentOrientation(key.0, key.1));
                }
                sides[k] = FaceSide { edge: e, sign: if forward { 1 } else { -1 } };
            }
            face_sides.push(sides);
        }
        if let Some(v) = used_vertex.iter().position(|&u| !u) {
            return Err(MeshError::IsolatedVertex(v));
        }
        let edge_vectors = edges.iter().map(|&[t, h]| sub(vertices[h], vertices[t])).collect();
        Self::from_parts(vertices, edges, edge_vectors, faces, face_sides, None)
    }

    pub(crate) fn from_parts(
        vertices: Vec<Vec3>,
        edges: Vec<[usize; 2]>,
        edge_vectors: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
        face_sides: Vec<[FaceSide; 3]>,
        seam_windings: Option<Vec<[i32; 2]>>,
    ) -> Result<Self, MeshError> {
        let ne = edges.len();
        let mut edge_faces = vec![[None, None]; ne];
        for (f, sides) in face_sides.iter().enumerate() {
            for side in sides {
                let slot = &mut edge_faces[side.edge];
                if slot[0].is_none() {
                    slot[0] = Some(f);
                } else if slot[1].is_none() {
                    slot[1] = Some(f);
                } else {
                    let [t, h] = edges[side.edge];
                    return Err(MeshError::NonManifoldEdge(t, h));
                }
            }
        }
        let mut boundary_edges = vec![false; ne];
        let mut boundary_vertices = vec![false; vertices.len()];
        for e in 0..ne {
            match edge_faces[e] {
                [None, _] => {
                    let [t, h] = edges[e];
                    return Err(MeshError::DanglingEdge(t, h));
                }
                [Some(_), None] => {
                    boundary_edges[e] = true;
                    boundary_vertices[edges[e][0]] = true;
                    boundary_vertices[edges[e][1]] = true;
                }
                _ => {}
            }
        }

        let mut mesh = SurfaceMesh {
            vertices,
            edges,
            edge_vectors,
            faces,
            face_sides,
            edge_faces,
            boundary_edges,
            boundary_vertices,
            face_areas: Vec::new(),
            total_area: 0.0,
            seam_windings,
        };
        let mut areas = Vec::with_capacity(mesh.num_faces());
        for f in 0..mesh.num_faces() {
            let [p0, p1, p2] = mesh.face_corners(f);
            let area = 0.5 * norm(cross(sub(p1, p0), sub(p2, p0)));
            if !(area > 0.0) {
                return Err(MeshError::DegenerateFace(f));
            }
            areas.push(area);
        }
        mesh.total_area = areas.iter().sum();
        mesh.face_areas = areas;
        if !mesh.is_connected() {
            return Err(MeshError::Disconnected);
        }
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Oriented edges as `[tail, head]`.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_vector(&self, e: usize) -> Vec3 {
        self.edge_vectors[e]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        norm(self.edge_vectors[e])
    }

    pub fn longest_edge(&self) -> f64 {
        (0..self.num_edges()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_sides(&self, f: usize) -> &[FaceSide; 3] {
        &self.face_sides[f]
    }

    /// Faces incident to edge `e`; the second slot is empty on the boundary.
    pub fn edge_faces(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_faces[e]
    }

    pub fn boundary_edge_flags(&self) -> &[bool] {
        &self.boundary_edges
    }

    pub fn boundary_vertex_flags(&self) -> &[bool] {
        &self.boundary_vertices
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.boundary_edges.iter().filter(|&&b| b).count()
    }

    pub fn num_boundary_vertices(&self) -> usize {
        self.boundary_vertices.iter().filter(|&&b| b).count()
    }

    pub fn is_closed(&self) -> bool {
        !self.boundary_edges.iter().any(|&b| b)
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    /// Rank of the first cohomology of the (connected) surface.
    pub fn first_betti_number(&self) -> usize {
        let chi = self.euler_characteristic();
        let b1 = if self.is_closed() { 2 - chi } else { 1 - chi };
        b1.max(0) as usize
    }

    pub fn seam_windings(&self) -> Option<&[[i32; 2]]> {
        self.seam_windings.as_deref()
    }

    /// Corner positions of face `f` in a local frame, obtained by walking
    /// its sides from corner 0.
    pub fn face_corners(&self, f: usize) -> [Vec3; 3] {
        let sides = &self.face_sides[f];
        let p0 = self.vertices[self.faces[f][0]];
        let p1 = add(p0, self.side_vector(sides[0]));
        let p2 = add(p1, self.side_vector(sides[1]));
        [p0, p1, p2]
    }

    fn side_vector(&self, side: FaceSide) -> Vec3 {
        scale(self.edge_vectors[side.edge], side.sign as f64)
    }

    fn is_connected(&self) -> bool {
        let nv = self.num_vertices();
        if nv == 0 {
            return true;
        }
        let adjacency = self.vertex_adjacency();
        let mut seen = vec![false; nv];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == nv
    }

    /// For each vertex, its neighbours and the connecting edge.
    pub fn vertex_adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adjacency = vec![Vec::new(); self.num_vertices()];
        for (e, &[t, h]) in self.edges.iter().enumerate() {
            adjacency[t].push((h, e));
            adjacency[h].push((t, e));
        }
        adjacency
    }

    /// SHA-256 over connectivity and coordinates, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.num_vertices() as u64).to_le_bytes());
        hasher.update((self.num_edges() as u64).to_le_bytes());
        hasher.update((self.num_faces() as u64).to_le_bytes());
        for p in &self.vertices {
            for c in p {
                hasher.update(c.to_bits().to_le_bytes());
            }
        }
        for ev in &self.edge_vectors {
            for c in ev {
                hasher.update(c.to_bits().to_le_bytes());
            }
        }
        for tri in &self.faces {
            for &v in tri {
                hasher.update((v as u64).to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Integer-valued closed 1-cochains spanning the first cohomology.
    pub fn cocycle_basis(&self) -> Vec<Vec<f64>> {
        cohomology::cocycle_basis(self)
    }
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}
