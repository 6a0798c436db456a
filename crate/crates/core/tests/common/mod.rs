//! Shared fixtures and reference formulas for the integration tests.
#![allow(dead_code)]

use glfield::{
    build_dec, build_flat_torus, build_icosphere, build_rectangle, make_constant_background, make_uniform_background,
    BackgroundField, Complex64, Configuration, DecOperators, SurfaceMesh,
};

pub struct Case {
    pub name: &'static str,
    pub mesh: SurfaceMesh,
    pub dec: DecOperators,
    pub background: BackgroundField,
}

impl Case {
    pub fn new(
        name: &'static str,
        mesh: SurfaceMesh,
        background: impl FnOnce(&SurfaceMesh) -> BackgroundField,
    ) -> Self {
        let dec = build_dec(&mesh);
        let background = background(&mesh);
        Case { name, mesh, dec, background }
    }
}

/// Rectangle with interior vertices displaced, rebuilt from raw triangles.
pub fn jittered_rectangle(n: usize, amount: f64, seed: u64) -> SurfaceMesh {
    let base = build_rectangle(n, n, 1.0, 1.0).unwrap();
    let boundary = base.boundary_vertex_flags().to_vec();
    let h = 1.0 / n as f64;
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let vertices = base
        .vertices()
        .iter()
        .zip(&boundary)
        .map(|(v, &b)| if b { *v } else { [v[0] + amount * h * next(), v[1] + amount * h * next(), 0.0] })
        .collect();
    SurfaceMesh::from_triangles(vertices, base.faces().to_vec()).unwrap()
}

pub fn families() -> Vec<Case> {
    vec![
        Case::new("torus", build_flat_torus(6, 5, 1.0, 1.3).unwrap(), |m| make_constant_background(m, 1).unwrap()),
        Case::new("icosphere", build_icosphere(1, 1.0).unwrap(), |m| make_constant_background(m, 2).unwrap()),
        Case::new("rectangle", build_rectangle(5, 4, 1.0, 0.8).unwrap(), |m| make_uniform_background(m, 3.0).unwrap()),
        Case::new("jittered", jittered_rectangle(5, 0.3, 4), |m| make_uniform_background(m, 5.0).unwrap()),
    ]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn len(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Geometry recomputed from edge lengths alone (Heron and the law of
/// cosines), independent of the library's DEC assembly.
pub struct ReferenceGeometry {
    pub face_area: Vec<f64>,
    pub edge_weight: Vec<f64>,
    pub vertex_area: Vec<f64>,
}

impl ReferenceGeometry {
    pub fn new(mesh: &SurfaceMesh) -> Self {
        let mut face_area = Vec::new();
        let mut edge_weight = vec![0.0; mesh.num_edges()];
        let mut vertex_area = vec![0.0; mesh.num_vertices()];
        for f in 0..mesh.num_faces() {
            let c = mesh.face_corners(f);
            let sides = mesh.face_sides(f);
            // side k joins corner k and k+1 and is opposite corner k+2
            let l: Vec<f64> = (0..3).map(|k| len(sub(c[(k + 1) % 3], c[k]))).collect();
            let s = 0.5 * (l[0] + l[1] + l[2]);
            let area = (s * (s - l[0]) * (s - l[1]) * (s - l[2])).max(0.0).sqrt();
            for k in 0..3 {
                let (a, b, opp) = (l[(k + 1) % 3], l[(k + 2) % 3], l[k]);
                let cot = (a * a + b * b - opp * opp) / (4.0 * area);
                edge_weight[sides[k].edge] += 0.5 * cot;
            }
            for &v in &mesh.faces()[f] {
                vertex_area[v] += area / 3.0;
            }
            face_area.push(area);
        }
        ReferenceGeometry { face_area, edge_weight, vertex_area }
    }

    /// Free energy written out directly from its definition.
    pub fn energy(
        &self,
        mesh: &SurfaceMesh,
        background: &BackgroundField,
        a: &[f64],
        phi: &[Complex64],
        alpha: f64,
        beta: f64,
    ) -> f64 {
        let mut e = 0.0;
        for f in 0..mesh.num_faces() {
            let circ: f64 = mesh.face_sides(f).iter().map(|s| s.sign as f64 * a[s.edge]).sum();
            e += 0.5 * circ * circ / self.face_area[f];
        }
        for (k, &[t, h]) in mesh.edges().iter().enumerate() {
            let u = Complex64::from_polar(1.0, background.theta0[k] + a[k]);
            e += 0.5 * self.edge_weight[k] * (phi[h] - u * phi[t]).norm_sqr();
        }
        for (v, z) in phi.iter().enumerate() {
            let r2 = z.norm_sqr();
            e += self.vertex_area[v] * (-0.5 * alpha * r2 + 0.25 * beta * r2 * r2);
        }
        e
    }

    pub fn energy_of(&self, mesh: &SurfaceMesh, bg: &BackgroundField, c: &Configuration, alpha: f64, beta: f64) -> f64 {
        self.energy(mesh, bg, c.a(), c.phi(), alpha, beta)
    }

    /// Magnetic quadratic form `Σ w |φ_h − e^{iθ} φ_t|²` and mass `Σ m |φ|²`.
    pub fn rayleigh(&self, mesh: &SurfaceMesh, theta: &[f64], phi: &[Complex64]) -> (f64, f64) {
        let q = mesh
            .edges()
            .iter()
            .enumerate()
            .map(|(k, &[t, h])| {
                self.edge_weight[k] * (phi[h] - Complex64::from_polar(1.0, theta[k]) * phi[t]).norm_sqr()
            })
            .sum();
        let m = phi.iter().zip(&self.vertex_area).map(|(z, w)| w * z.norm_sqr()).sum();
        (q, m)
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
