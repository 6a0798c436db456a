use super::{cross, dot, norm, sub, SurfaceMesh};

/// Sparse signed incidence matrix in compressed-row form.
#[derive(Clone, Debug)]
pub struct Incidence {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    signs: Vec<i8>,
}

impl Incidence {
    fn from_rows(cols: usize, rows: impl IntoIterator<Item = Vec<(usize, i8)>>) -> Self {
        let mut offsets = vec![0];
        let mut indices = Vec::new();
        let mut signs = Vec::new();
        for row in rows {
            for (c, s) in row {
                indices.push(c);
                signs.push(s);
            }
            offsets.push(indices.len());
        }
        Incidence { rows: offsets.len() - 1, cols, offsets, indices, signs }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let span = self.offsets[r]..self.offsets[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.signs[span].iter().copied())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| self.row(r).map(|(c, s)| s as f64 * x[c]).sum()).collect()
    }

    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            for (c, s) in self.row(r) {
                out[c] += s as f64 * yr;
            }
        }
        out
    }

    /// Largest absolute entry of `self * inner`, computed in integers.
    pub fn compose_max_abs(&self, inner: &Incidence) -> i64 {
        assert_eq!(self.cols, inner.rows);
        let mut acc = vec![0i64; inner.cols];
        let mut worst = 0;
        for r in 0..self.rows {
            let mut touched = Vec::new();
            for (m, s) in self.row(r) {
                for (c, t) in inner.row(m) {
                    acc[c] += (s as i64) * (t as i64);
                    touched.push(c);
                }
            }
            for c in touched {
                worst = worst.max(acc[c].abs());
                acc[c] = 0;
            }
        }
        worst
    }
}

/// Discrete exterior derivative and diagonal Hodge stars of a mesh.
#[derive(Clone, Debug)]
pub struct DecOperators {
    /// vertices -> edges: `(d0 f)_e = f(head) - f(tail)`
    pub d0: Incidence,
    /// edges -> faces: signed boundary of each face
    pub d1: Incidence,
    /// barycentric dual-cell area per vertex
    pub star0: Vec<f64>,
    /// cotangent weight per edge
    pub star1: Vec<f64>,
    /// reciprocal face area
    pub star2: Vec<f64>,
}

impl DecOperators {
    pub fn negative_weight_edges(&self) -> Vec<usize> {
        self.star1.iter().enumerate().filter(|(_, &w)| w < 0.0).map(|(e, _)| e).collect()
    }

    pub fn has_nonnegative_weights(&self) -> bool {
        self.star1.iter().all(|&w| w >= 0.0)
    }

    pub fn min_star1(&self) -> f64 {
        self.star1.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_star1(&self) -> f64 {
        self.star1.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn build_dec(mesh: &SurfaceMesh) -> DecOperators {
    let nv = mesh.num_vertices();
    let d0 = Incidence::from_rows(nv, mesh.edges().iter().map(|&[t, h]| vec![(t, -1), (h, 1)]));
    let d1 = Incidence::from_rows(
        mesh.num_edges(),
        (0..mesh.num_faces()).map(|f| mesh.face_sides(f).iter().map(|s| (s.edge, s.sign)).collect()),
    );

    let mut star0 = vec![0.0; nv];
    let mut star1 = vec![0.0; mesh.num_edges()];
    let mut magnitude = vec![0.0; mesh.num_edges()];
    for (f, tri) in mesh.faces().iter().enumerate() {
        let area = mesh.face_areas()[f];
        for &v in tri {
            star0[v] += area / 3.0;
        }
        let corners = mesh.face_corners(f);
        for (k, side) in mesh.face_sides(f).iter().enumerate() {
            let apex = corners[(k + 2) % 3];
            let u = sub(corners[k], apex);
            let w = sub(corners[(k + 1) % 3], apex);
            let cot = dot(u, w) / norm(cross(u, w));
            star1[side.edge] += 0.5 * cot;
            magnitude[side.edge] += 0.5 * cot.abs();
        }
    }
    // right angles cancel to rounding level; keep them exactly zero
    for (w, m) in star1.iter_mut().zip(&magnitude) {
        if w.abs() <= 1e-12 * (1.0 + m) {
            *w = 0.0;
        }
    }
    let star2 = mesh.face_areas().iter().map(|a| 1.0 / a).collect();

    let dec = DecOperators { d0, d1, star0, star1, star2 };
    let negative = dec.negative_weight_edges();
    if !negative.is_empty() {
        log::warn!(
            "{} edge(s) have negative cotangent weight (obtuse pairs): {:?}",
            negative.len(),
            &negative[..negative.len().min(16)]
        );
    }
    dec
}
