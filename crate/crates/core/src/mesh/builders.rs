use std::collections::HashMap;

use super::{cross, dot, FaceSide, MeshError, SurfaceMesh, Vec3};

/// Periodic `nx` x `ny` grid on `[0, lx) x [0, ly)`, each cell split along
/// its (+x, +y) diagonal. Edges follow the unwrapped grid direction, so
/// seam edges run from the last column/row back to the first.
pub fn build_flat_torus(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<SurfaceMesh, MeshError> {
    if nx < 2 || ny < 2 {
        return Err(MeshError::InvalidArgument(format!("torus needs nx, ny >= 2 (got {nx} x {ny})")));
    }
    if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
        return Err(MeshError::InvalidArgument(format!("torus side lengths must be positive (got {lx}, {ly})")));
    }
    let (dx, dy) = (lx / nx as f64, ly / ny as f64);
    let vid = |i: usize, j: usize| (j % ny) * nx + (i % nx);

    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            vertices.push([i as f64 * dx, j as f64 * dy, 0.0]);
        }
    }

    // per cell: horizontal (i,j)->(i+1,j), vertical (i,j)->(i,j+1), diagonal (i,j)->(i+1,j+1)
    let cell = |i: usize, j: usize| 3 * (j * nx + i);
    let mut edges = Vec::with_capacity(3 * nx * ny);
    let mut edge_vectors = Vec::with_capacity(3 * nx * ny);
    let mut windings = Vec::with_capacity(3 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let wx = (i == nx - 1) as i32;
            let wy = (j == ny - 1) as i32;
            edges.push([vid(i, j), vid(i + 1, j)]);
            edge_vectors.push([dx, 0.0, 0.0]);
            windings.push([wx, 0]);
            edges.push([vid(i, j), vid(i, j + 1)]);
            edge_vectors.push([0.0, dy, 0.0]);
            windings.push([0, wy]);
            edges.push([vid(i, j), vid(i + 1, j + 1)]);
            edge_vectors.push([dx, dy, 0.0]);
            windings.push([wx, wy]);
        }
    }

    let mut faces = Vec::with_capacity(2 * nx * ny);
    let mut sides = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (i1, j1) = ((i + 1) % nx, (j + 1) % ny);
            let here = cell(i, j);
            faces.push([vid(i, j), vid(i1, j), vid(i1, j1)]);
            sides.push([
                FaceSide { edge: here, sign: 1 },
                FaceSide { edge: cell(i1, j) + 1, sign: 1 },
                FaceSide { edge: here + 2, sign: -1 },
            ]);
            faces.push([vid(i, j), vid(i1, j1), vid(i, j1)]);
            sides.push([
                FaceSide { edge: here + 2, sign: 1 },
                FaceSide { edge: cell(i, j1), sign: -1 },
                FaceSide { edge: here + 1, sign: -1 },
            ]);
        }
    }
    SurfaceMesh::from_parts(vertices, edges, edge_vectors, faces, sides, Some(windings))
}

/// Planar `nx` x `ny` grid on `[0, lx] x [0, ly]` with boundary.
pub fn build_rectangle(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<SurfaceMesh, MeshError> {
    if nx < 1 || ny < 1 {
        return Err(MeshError::InvalidArgument(format!("rectangle needs nx, ny >= 1 (got {nx} x {ny})")));
    }
    if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
        return Err(MeshError::InvalidArgument(format!("rectangle side lengths must be positive (got {lx}, {ly})")));
    }
    let (dx, dy) = (lx / nx as f64, ly / ny as f64);
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([i as f64 * dx, j as f64 * dy, 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
            faces.push([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    SurfaceMesh::from_triangles(vertices, faces)
}

/// Icosahedron refined `subdivisions` times by edge midpoints, with every
/// vertex projected onto the sphere of the given radius.
pub fn build_icosphere(subdivisions: usize, radius: f64) -> Result<SurfaceMesh, MeshError> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(MeshError::InvalidArgument(format!("icosphere radius must be positive (got {radius})")));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for v in vertices.iter_mut() {
        *v = project(*v, 1.0);
    }
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut refined = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut mid = |u: usize, w: usize| -> usize {
                let key = (u.min(w), u.max(w));
                *midpoints.entry(key).or_insert_with(|| {
                    let p = vertices[u];
                    let q = vertices[w];
                    vertices.push(project([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0], 1.0));
                    vertices.len() - 1
                })
            };
            let ab = mid(a, b);
            let bc = mid(b, c);
            let ca = mid(c, a);
            refined.push([a, ab, ca]);
            refined.push([b, bc, ab]);
            refined.push([c, ca, bc]);
            refined.push([ab, bc, ca]);
        }
        faces = refined;
    }
    for v in vertices.iter_mut() {
        *v = project(*v, radius);
    }
    // outward normals
    for tri in faces.iter_mut() {
        let [p, q, r] = tri.map(|i| vertices[i]);
        let n = cross([q[0] - p[0], q[1] - p[1], q[2] - p[2]], [r[0] - p[0], r[1] - p[1], r[2] - p[2]]);
        if dot(n, p) < 0.0 {
            tri.swap(1, 2);
        }
    }
    SurfaceMesh::from_triangles(vertices, faces)
}

fn project(p: Vec3, radius: f64) -> Vec3 {
    let n = dot(p, p).sqrt();
    [p[0] * radius / n, p[1] * radius / n, p[2] * radius / n]
}
