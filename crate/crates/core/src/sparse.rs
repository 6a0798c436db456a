//! Reverse Cuthill-McKee ordering and a skyline (envelope) LDLᴴ
//! factorization for sparse Hermitian systems.

use std::collections::{BTreeMap, VecDeque};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use thiserror::Error;

pub trait Scalar:
    Copy
    + Default
    + Send
    + Sync
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    fn conj(self) -> Self;
    fn from_real(x: f64) -> Self;
    fn re(self) -> f64;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn conj(self) -> Self {
        self
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn re(self) -> f64 {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("zero or non-finite pivot {pivot:e} at row {row}")]
    SingularPivot { row: usize, pivot: f64 },
}

/// Hermitian matrix assembled from lower-triangle entries `(row >= col)`.
#[derive(Clone, Debug)]
pub struct HermitianMatrix<T> {
    n: usize,
    // rows[i] holds (j, a_ij) for j <= i, sorted by j
    rows: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> HermitianMatrix<T> {
    pub fn new(n: usize) -> Self {
        HermitianMatrix { n, rows: vec![Vec::new(); n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Accumulate `value` at `(i, j)` and its conjugate at `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, value: T) {
        let (r, c, v) = if i >= j { (i, j, value) } else { (j, i, value.conj()) };
        let row = &mut self.rows[r];
        match row.binary_search_by_key(&c, |&(k, _)| k) {
            Ok(pos) => row[pos].1 += v,
            Err(pos) => row.insert(pos, (c, v)),
        }
    }

    pub fn add_diagonal(&mut self, i: usize, value: f64) {
        self.add(i, i, T::from_real(value));
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::default(); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        for v in y.iter_mut() {
            *v = T::default();
        }
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                y[i] += a * x[j];
                if j != i {
                    y[j] += a.conj() * x[i];
                }
            }
        }
    }

    fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, _) in row {
                if j != i {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        adj
    }
}

/// Reverse Cuthill-McKee permutation; `perm[new] = old`.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree = |v: usize| adjacency[v].len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n).filter(|&v| !placed[v]).min_by_key(|&v| degree(v)).unwrap();
        let start = pseudo_peripheral(adjacency, start);
        placed[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v].iter().copied().filter(|&w| !placed[w]).collect();
            next.sort_by_key(|&w| (degree(w), w));
            next.dedup();
            for w in next {
                if !placed[w] {
                    placed[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(adjacency: &[Vec<usize>], start: usize) -> usize {
    let mut current = start;
    let mut eccentricity = 0;
    for _ in 0..8 {
        let (far, depth) = bfs_farthest(adjacency, current);
        if depth <= eccentricity {
            break;
        }
        eccentricity = depth;
        current = far;
    }
    current
}

fn bfs_farthest(adjacency: &[Vec<usize>], start: usize) -> (usize, usize) {
    let mut dist = vec![usize::MAX; adjacency.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best = (start, 0);
    while let Some(v) = queue.pop_front() {
        let d = dist[v];
        if d > best.1 || (d == best.1 && adjacency[v].len() < adjacency[best.0].len()) {
            best = (v, d);
        }
        for &w in &adjacency[v] {
            if dist[w] == usize::MAX {
                dist[w] = d + 1;
                queue.push_back(w);
            }
        }
    }
    best
}

/// `A = P (L D Lᴴ) Pᵀ` with `L` unit lower triangular stored by row
/// envelope and `D` real.
#[derive(Clone, Debug)]
pub struct SkylineLdl<T> {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    // row i of L occupies offsets[i]..offsets[i+1], columns first[i]..i (diagonal slot unused)
    offsets: Vec<usize>,
    values: Vec<T>,
    diag: Vec<f64>,
}

impl<T: Scalar> SkylineLdl<T> {
    pub fn factor(matrix: &HermitianMatrix<T>) -> Result<Self, FactorError> {
        let n = matrix.dim();
        let perm = reverse_cuthill_mckee(&matrix.neighbours());
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        // permuted lower-triangle entries per row
        let mut permuted: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n];
        for (i, row) in matrix.rows.iter().enumerate() {
            for &(j, a) in row {
                let (pi, pj) = (inverse[i], inverse[j]);
                let (r, c, v) = if pi >= pj { (pi, pj, a) } else { (pj, pi, a.conj()) };
                *permuted[r].entry(c).or_default() += v;
            }
        }
        let first: Vec<usize> =
            permuted.iter().enumerate().map(|(i, row)| row.keys().next().copied().unwrap_or(i).min(i)).collect();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + (i - first[i] + 1));
        }
        let mut values = vec![T::default(); offsets[n]];
        let mut diag = vec![0.0; n];
        for (i, row) in permuted.iter().enumerate() {
            for (&j, &a) in row {
                values[offsets[i] + j - first[i]] = a;
            }
        }

        for i in 0..n {
            let fi = first[i];
            let base_i = offsets[i];
            // g_ij = L_ij D_j = a_ij - sum_{k<j} g_ik conj(L_jk), computed in place
            for j in fi..i {
                let fj = first[j];
                let start = fi.max(fj);
                let mut s = values[base_i + j - fi];
                let row_i = &values[base_i + start - fi..base_i + j - fi];
                let row_j = &values[offsets[j] + start - fj..offsets[j] + j - fj];
                for (g, l) in row_i.iter().zip(row_j) {
                    s -= *g * l.conj();
                }
                values[base_i + j - fi] = s;
            }
            let original = values[base_i + i - fi].re();
            let mut d = original;
            for j in fi..i {
                let g = values[base_i + j - fi];
                let l = g / T::from_real(diag[j]);
                d -= (l * g.conj()).re();
                values[base_i + j - fi] = l;
            }
            if !(d.abs() > 1e-13 * original.abs()) || !d.is_finite() {
                return Err(FactorError::SingularPivot { row: i, pivot: d });
            }
            diag[i] = d;
        }
        Ok(SkylineLdl { n, perm, first, offsets, values, diag })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = vec![T::default(); self.n];
        self.solve_into(b, &mut x);
        x
    }

    pub fn solve_into(&self, b: &[T], out: &mut [T]) {
        let n = self.n;
        let mut y: Vec<T> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.offsets[i]..self.offsets[i] + i - fi];
            let mut s = y[i];
            for (l, yk) in row.iter().zip(&y[fi..i]) {
                s -= *l * *yk;
            }
            y[i] = s;
        }
        for (yi, &d) in y.iter_mut().zip(&self.diag) {
            *yi = *yi / T::from_real(d);
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = y[i];
            let row = &self.values[self.offsets[i]..self.offsets[i] + i - fi];
            for (l, yk) in row.iter().zip(&mut y[fi..i]) {
                *yk -= l.conj() * xi;
            }
        }
        for i in 0..n {
            out[self.perm[i]] = y[i];
        }
    }

    /// Number of negative pivots (inertia of `A`).
    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|&&d| d < 0.0).count()
    }
}
