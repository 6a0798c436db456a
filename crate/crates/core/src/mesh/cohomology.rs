//! Closed 1-cochain bases for the first cohomology via tree-cotree.

use std::collections::VecDeque;

use super::SurfaceMesh;

pub(super) fn cocycle_basis(mesh: &SurfaceMesh) -> Vec<Vec<f64>> {
    if let Some(windings) = mesh.seam_windings() {
        return (0..2).map(|axis| windings.iter().map(|w| w[axis] as f64).collect()).collect();
    }
    tree_cotree(mesh)
}

/// Dual-graph node for face `f` is `f`; the outer node (all boundary edges)
/// is `num_faces`.
fn dual_neighbours(mesh: &SurfaceMesh, e: usize) -> (usize, usize) {
    let outer = mesh.num_faces();
    match mesh.edge_faces(e) {
        [Some(a), Some(b)] => (a, b),
        [Some(a), None] => (a, outer),
        _ => unreachable!("validated mesh"),
    }
}

fn tree_cotree(mesh: &SurfaceMesh) -> Vec<Vec<f64>> {
    let ne = mesh.num_edges();
    let nf = mesh.num_faces();

    // primal BFS spanning tree
    let adjacency = mesh.vertex_adjacency();
    let mut in_tree = vec![false; ne];
    let mut seen = vec![false; mesh.num_vertices()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &(w, e) in &adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                in_tree[e] = true;
                queue.push_back(w);
            }
        }
    }

    // dual spanning tree over the remaining edges
    let closed = mesh.is_closed();
    let nodes = if closed { nf } else { nf + 1 };
    let root = if closed { 0 } else { nf };
    let mut dual_adj = vec![Vec::new(); nodes];
    for e in (0..ne).filter(|&e| !in_tree[e]) {
        let (a, b) = dual_neighbours(mesh, e);
        dual_adj[a].push((b, e));
        dual_adj[b].push((a, e));
    }
    let mut in_cotree = vec![false; ne];
    let mut parent_edge = vec![usize::MAX; nodes];
    let mut order = Vec::with_capacity(nodes);
    let mut seen = vec![false; nodes];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(n) = queue.pop_front() {
        order.push(n);
        for &(m, e) in &dual_adj[n] {
            if !seen[m] {
                seen[m] = true;
                in_cotree[e] = true;
                parent_edge[m] = e;
                queue.push_back(m);
            }
        }
    }

    let generators: Vec<usize> = (0..ne).filter(|&e| !in_tree[e] && !in_cotree[e]).collect();
    debug_assert_eq!(generators.len(), mesh.first_betti_number());

    generators
        .iter()
        .map(|&g| {
            let mut c = vec![0.0; ne];
            c[g] = 1.0;
            // peel the dual tree from its leaves: each face fixes its parent edge
            for &n in order.iter().rev() {
                if n == root {
                    continue;
                }
                let e = parent_edge[n];
                let sides = mesh.face_sides(n);
                let mut sum = 0.0;
                let mut own_sign = 0.0;
                for s in sides {
                    if s.edge == e {
                        own_sign = s.sign as f64;
                    } else {
                        sum += s.sign as f64 * c[s.edge];
                    }
                }
                c[e] = -sum / own_sign;
            }
            c
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use crate::mesh::{build_dec, build_flat_torus, build_icosphere, build_rectangle, SurfaceMesh};

    fn assert_closed(mesh: &SurfaceMesh, basis: &[Vec<f64>]) {
        let dec = build_dec(mesh);
        for c in basis {
            let dc = dec.d1.apply(c);
            assert!(dc.iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn torus_seam_cocycles_are_closed() {
        let mesh = build_flat_torus(4, 3, 1.0, 1.0).unwrap();
        let basis = mesh.cocycle_basis();
        assert_eq!(basis.len(), 2);
        assert_closed(&mesh, &basis);
    }

    #[test]
    fn tree_cotree_on_reloaded_torus() {
        // same connectivity without seam metadata
        let torus = build_flat_torus(4, 4, 1.0, 1.0).unwrap();
        let mesh = SurfaceMesh::from_triangles(torus.vertices().to_vec(), torus.faces().to_vec()).unwrap();
        assert!(mesh.seam_windings().is_none());
        let basis = mesh.cocycle_basis();
        assert_eq!(basis.len(), 2);
        assert_closed(&mesh, &basis);
        // both generators must be non-exact: they pair non-trivially with the seam cycles
        let nonzero = basis.iter().filter(|c| c.iter().any(|&x| x != 0.0)).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn simply_connected_meshes_have_no_generators() {
        assert!(build_icosphere(1, 1.0).unwrap().cocycle_basis().is_empty());
        assert!(build_rectangle(3, 3, 1.0, 1.0).unwrap().cocycle_basis().is_empty());
    }

    #[test]
    fn annulus_has_one_generator() {
        // 3x3 square with the centre cell removed
        let vid = |i: usize, j: usize| j * 4 + i;
        let vertices: Vec<_> = (0..16).map(|k| [(k % 4) as f64, (k / 4) as f64, 0.0]).collect();
        let mut faces = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                if (i, j) == (1, 1) {
                    continue;
                }
                faces.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
                faces.push([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            }
        }
        let mesh = SurfaceMesh::from_triangles(vertices, faces).unwrap();
        assert_eq!(mesh.first_betti_number(), 1);
        let basis = mesh.cocycle_basis();
        assert_eq!(basis.len(), 1);
        assert_closed(&mesh, &basis);
    }
}
