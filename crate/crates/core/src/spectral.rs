//! Lowest eigenvalue of the magnetic Laplacian
//!
//! ```text
//! Q(φ) = Σ_e w_e |φ_head − e^{iθ_e} φ_tail|²,   M(φ) = Σ_v m_v |φ_v|²
//! ```
//!
//! solved as a generalized Hermitian problem by a preconditioned block
//! eigensolver (LOBPCG). The preconditioner is a factorization of `Q + δM`;
//! during the holonomy search one factorization at the base connection is
//! reused for every twist, and the final answer is polished with an exact
//! factorization at the optimal twist.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::field::{BackgroundField, CoulombGauge, FieldError};
use crate::mesh::{DecOperators, SurfaceMesh};
use crate::sparse::{FactorError, HermitianMatrix, SkylineLdl};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralResult {
    pub lambda1: f64,
    /// Lowest eigenvector, unit `star0` norm, phase fixed so its largest
    /// entry is real and positive.
    #[serde(skip)]
    pub eigvector: Vec<Complex64>,
    /// Twist angle per cohomology generator.
    pub holonomy: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("{count} edge(s) have negative cotangent weight; the magnetic form is not semidefinite")]
    NegativeWeights { count: usize },
    #[error("invalid eigensolver option: {0}")]
    InvalidOption(&'static str),
    #[error("holonomy has {got} angles but the mesh has {expected} cohomology generators")]
    HolonomyMismatch { got: usize, expected: usize },
    #[error("eigensolver did not reach tolerance (residual {:e} after {} iterations)", .0.residual, .0.iterations)]
    NotConverged(Box<SpectralResult>),
    #[error("factorization failed: {0}")]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchOptions {
    /// Coarse samples per generator on `[0, 2π)`.
    pub grid_per_generator: usize,
    /// Golden-section sweeps over all coordinates.
    pub refine_passes: usize,
    /// Bracket width at which a golden-section search stops (radians).
    pub angle_tol: f64,
    /// Residual tolerance of the reported eigenpair.
    pub tol: f64,
    /// Residual tolerance used while searching.
    pub search_tol: f64,
    pub max_iter: usize,
    pub block_size: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid_per_generator: 8,
            refine_passes: 3,
            angle_tol: 1e-3,
            tol: 1e-9,
            search_tol: 1e-5,
            max_iter: 400,
            block_size: 4,
        }
    }
}

impl SearchOptions {
    fn validate(&self) -> Result<(), SpectralError> {
        if !(self.tol > 0.0) || !(self.search_tol > 0.0) {
            return Err(SpectralError::InvalidOption("tolerances must be positive"));
        }
        if self.grid_per_generator == 0 {
            return Err(SpectralError::InvalidOption("grid_per_generator must be at least 1"));
        }
        if self.max_iter == 0 || self.block_size == 0 {
            return Err(SpectralError::InvalidOption("max_iter and block_size must be at least 1"));
        }
        if !(self.angle_tol > 0.0) {
            return Err(SpectralError::InvalidOption("angle_tol must be positive"));
        }
        Ok(())
    }
}

/// Edge-based magnetic Laplacian for one set of link phases.
#[derive(Clone, Debug)]
pub struct MagneticLaplacian {
    edges: Vec<[usize; 2]>,
    weight: Vec<f64>,
    link: Vec<Complex64>,
    mass: Vec<f64>,
}

impl MagneticLaplacian {
    pub fn new(mesh: &SurfaceMesh, dec: &DecOperators, theta: &[f64]) -> Result<Self, SpectralError> {
        let count = dec.negative_weight_edges().len();
        if count > 0 {
            return Err(SpectralError::NegativeWeights { count });
        }
        let mut edges = Vec::new();
        let mut weight = Vec::new();
        let mut link = Vec::new();
        for (e, &pair) in mesh.edges().iter().enumerate() {
            if dec.star1[e] > 0.0 {
                edges.push(pair);
                weight.push(dec.star1[e]);
                link.push(Complex64::from_polar(1.0, theta[e]));
            }
        }
        Ok(MagneticLaplacian { edges, weight, link, mass: dec.star0.clone() })
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for ((&[t, h], &w), &u) in self.edges.iter().zip(&self.weight).zip(&self.link) {
            let d = x[h] - u * x[t];
            y[h] += d * w;
            y[t] -= u.conj() * d * w;
        }
    }

    /// `xᴴ Q x`
    pub fn form(&self, x: &[Complex64]) -> f64 {
        self.edges
            .iter()
            .zip(&self.weight)
            .zip(&self.link)
            .map(|((&[t, h], &w), &u)| w * (x[h] - u * x[t]).norm_sqr())
            .sum()
    }

    /// `xᴴ M x`
    pub fn mass_form(&self, x: &[Complex64]) -> f64 {
        x.iter().zip(&self.mass).map(|(z, m)| m * z.norm_sqr()).sum()
    }

    pub fn rayleigh_quotient(&self, x: &[Complex64]) -> f64 {
        self.form(x) / self.mass_form(x)
    }

    fn shifted(&self, shift: f64) -> HermitianMatrix<Complex64> {
        let mut q = HermitianMatrix::new(self.dim());
        for (v, &m) in self.mass.iter().enumerate() {
            q.add_diagonal(v, shift * m);
        }
        for ((&[t, h], &w), &u) in self.edges.iter().zip(&self.weight).zip(&self.link) {
            q.add_diagonal(h, w);
            q.add_diagonal(t, w);
            q.add(h, t, -u * w);
        }
        q
    }

    /// Factorization of `Q + shift·M`.
    pub fn factor_shifted(&self, shift: f64) -> Result<SkylineLdl<Complex64>, SpectralError> {
        Ok(SkylineLdl::factor(&self.shifted(shift))?)
    }
}

/// Shift that makes `Q + δM` definite and roughly matches the bottom of
/// the spectrum.
fn default_shift(mesh: &SurfaceMesh, background: &BackgroundField) -> f64 {
    background.total_flux().abs().max(2.0 * PI) / mesh.total_area()
}

struct Block {
    x: Vec<Vec<Complex64>>,
    values: Vec<f64>,
}

struct Outcome {
    block: Block,
    iterations: usize,
    residual: f64,
    converged: bool,
}

fn mass_dot(mass: &[f64], x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).zip(mass).map(|((a, b), m)| a.conj() * b * *m).sum()
}

fn mass_normalize(mass: &[f64], x: &mut [Complex64]) -> f64 {
    let n = mass_dot(mass, x, x).re.sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|z| *z /= n);
    }
    n
}

fn random_block(n: usize, k: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect()
}

/// M-orthonormal basis builder (classical Gram–Schmidt, applied twice).
struct Basis<'m> {
    mass: &'m [f64],
    vectors: Vec<Vec<Complex64>>,
}

impl<'m> Basis<'m> {
    fn new(mass: &'m [f64]) -> Self {
        Basis { mass, vectors: Vec::new() }
    }

    /// Add the component of `v` orthogonal to the basis; returns whether it
    /// was independent enough to keep.
    fn push(&mut self, mut v: Vec<Complex64>) -> bool {
        let original = mass_dot(self.mass, &v, &v).re.sqrt();
        if !(original > 0.0) || !original.is_finite() {
            return false;
        }
        for _ in 0..2 {
            for b in &self.vectors {
                let c = mass_dot(self.mass, b, &v);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let n = mass_normalize(self.mass, &mut v);
        if n > 1e-10 * original {
            self.vectors.push(v);
            true
        } else {
            false
        }
    }
}

/// Rayleigh–Ritz on an M-orthonormal basis: lowest `k` Ritz values and
/// their coefficient columns.
fn rayleigh_ritz(basis: &[Vec<Complex64>], qs: &[Vec<Complex64>], k: usize) -> (Vec<f64>, DMatrix<Complex64>) {
    let s = basis.len();
    let mut reduced = DMatrix::<Complex64>::zeros(s, s);
    for i in 0..s {
        for j in i..s {
            let a: Complex64 = basis[i].iter().zip(&qs[j]).map(|(p, q)| p.conj() * q).sum();
            reduced[(i, j)] = a;
            reduced[(j, i)] = a.conj();
        }
        reduced[(i, i)] = Complex64::new(reduced[(i, i)].re, 0.0);
    }
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let k = k.min(s);
    let values = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut coeff = DMatrix::<Complex64>::zeros(s, k);
    for (c, &i) in order[..k].iter().enumerate() {
        coeff.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, coeff)
}

fn combine(vectors: &[Vec<Complex64>], coeff: &DMatrix<Complex64>, col: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; vectors[0].len()];
    for (r, v) in vectors.iter().enumerate() {
        let c = coeff[(r, col)];
        if c != ZERO {
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
    }
    out
}

/// LOBPCG for the lowest pair of `Q x = λ M x`; convergence is judged on
/// the first Ritz pair only.
fn lobpcg(
    op: &MagneticLaplacian,
    precond: &SkylineLdl<Complex64>,
    start: Vec<Vec<Complex64>>,
    tol: f64,
    max_iter: usize,
) -> Outcome {
    let n = op.dim();
    let mass = &op.mass;
    let apply = |x: &[Complex64]| {
        let mut y = vec![ZERO; n];
        op.apply(x, &mut y);
        y
    };

    let mut basis = Basis::new(mass);
    for v in start {
        basis.push(v);
    }
    let k = basis.vectors.len().max(1);
    if basis.vectors.is_empty() {
        basis.push(vec![Complex64::new(1.0, 0.0); n]);
    }
    let qb: Vec<_> = basis.vectors.iter().map(|v| apply(v)).collect();
    let (mut values, coeff) = rayleigh_ritz(&basis.vectors, &qb, k);
    let mut x: Vec<_> = (0..values.len()).map(|c| combine(&basis.vectors, &coeff, c)).collect();
    let mut qx: Vec<_> = (0..values.len()).map(|c| combine(&qb, &coeff, c)).collect();
    let mut p: Vec<Vec<Complex64>> = Vec::new();
    let mut residual;
    let mut iterations = 0;

    loop {
        // residuals in the M⁻¹ norm (units of λ)
        let r: Vec<Vec<Complex64>> = (0..x.len())
            .map(|c| qx[c].iter().zip(&x[c]).zip(mass).map(|((q, xv), m)| q - xv * (values[c] * m)).collect())
            .collect();
        let norms: Vec<f64> =
            r.iter().map(|rc| rc.iter().zip(mass).map(|(z, m)| z.norm_sqr() / m).sum::<f64>().sqrt()).collect();
        residual = norms[0];
        if residual <= tol || iterations >= max_iter {
            break;
        }
        iterations += 1;

        let mut basis = Basis::new(mass);
        for v in &x {
            basis.push(v.clone());
        }
        for (rc, &nrm) in r.iter().zip(&norms) {
            if nrm > 1e-3 * tol {
                basis.push(precond.solve(rc));
            }
        }
        for v in p.drain(..) {
            basis.push(v);
        }
        let qb: Vec<_> = basis.vectors.iter().map(|v| apply(v)).collect();
        let (vals, coeff) = rayleigh_ritz(&basis.vectors, &qb, x.len());
        let s = basis.vectors.len();
        let kx = x.len();
        let new_x: Vec<_> = (0..vals.len()).map(|c| combine(&basis.vectors, &coeff, c)).collect();
        qx = (0..vals.len()).map(|c| combine(&qb, &coeff, c)).collect();
        // history: the part of the update outside the old block
        if s > kx {
            let mut tail = coeff.clone();
            for r in 0..kx {
                for c in 0..tail.ncols() {
                    tail[(r, c)] = ZERO;
                }
            }
            p = (0..vals.len()).map(|c| combine(&basis.vectors, &tail, c)).collect();
        }
        x = new_x;
        values = vals;
    }
    let converged = residual <= tol;
    Outcome { block: Block { x, values }, iterations, residual, converged }
}

fn finish(op: &MagneticLaplacian, outcome: &Outcome, holonomy: Vec<f64>) -> SpectralResult {
    let mut v = outcome.block.x[0].clone();
    mass_normalize(&op.mass, &mut v);
    if let Some(big) = v.iter().copied().max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr())) {
        if big.norm() > 0.0 {
            let phase = big.conj() / big.norm();
            v.iter_mut().for_each(|z| *z *= phase);
        }
    }
    let lambda1 = op.rayleigh_quotient(&v).max(0.0);
    SpectralResult {
        lambda1,
        eigvector: v,
        holonomy,
        iterations: outcome.iterations,
        residual: outcome.residual,
        converged: outcome.converged,
    }
}

fn check_holonomy(mesh: &SurfaceMesh, holonomy: &[f64]) -> Result<Vec<Vec<f64>>, SpectralError> {
    let cocycles = mesh.cocycle_basis();
    if holonomy.len() != cocycles.len() && !holonomy.is_empty() {
        return Err(SpectralError::HolonomyMismatch { got: holonomy.len(), expected: cocycles.len() });
    }
    Ok(cocycles)
}

/// Lowest eigenpair at a fixed holonomy twist. An empty `holonomy` means
/// no twist.
pub fn smallest_eigenpair(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    holonomy: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SpectralResult, SpectralError> {
    if !(tol > 0.0) {
        return Err(SpectralError::InvalidOption("tol must be positive"));
    }
    let cocycles = check_holonomy(mesh, holonomy)?;
    let twist = if holonomy.is_empty() { vec![0.0; cocycles.len()] } else { holonomy.to_vec() };
    let op = MagneticLaplacian::new(mesh, dec, &background.twisted_phases(&cocycles, &twist))?;
    let precond = op.factor_shifted(default_shift(mesh, background))?;
    let k = SearchOptions::default().block_size.min(op.dim());
    let outcome = lobpcg(&op, &precond, random_block(op.dim(), k, 0x5eed), tol, max_iter);
    let result = finish(&op, &outcome, twist);
    if result.converged {
        Ok(result)
    } else {
        Err(SpectralError::NotConverged(Box::new(result)))
    }
}

struct Search<'a> {
    mesh: &'a SurfaceMesh,
    dec: &'a DecOperators,
    background: &'a BackgroundField,
    // co-closed representatives of the cocycles: the twist is spread over
    // all edges, so the untwisted factorization stays a good preconditioner
    harmonic: Vec<Vec<f64>>,
    precond: SkylineLdl<Complex64>,
    options: SearchOptions,
    warm: Vec<Vec<Complex64>>,
    iterations: usize,
}

impl Search<'_> {
    fn eval(&mut self, holonomy: &[f64]) -> Result<f64, SpectralError> {
        let theta = self.background.twisted_phases(&self.harmonic, holonomy);
        let op = MagneticLaplacian::new(self.mesh, self.dec, &theta)?;
        let outcome = lobpcg(&op, &self.precond, self.warm.clone(), self.options.search_tol, self.options.max_iter);
        self.iterations += outcome.iterations;
        let value = op.rayleigh_quotient(&outcome.block.x[0]);
        self.warm = outcome.block.x;
        debug_assert!(outcome.block.values[0].is_finite());
        Ok(value)
    }

    fn golden(
        &mut self,
        point: &mut [f64],
        coord: usize,
        half_width: f64,
        mut fbest: f64,
    ) -> Result<f64, SpectralError> {
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let centre = point[coord];
        let (mut lo, mut hi) = (centre - half_width, centre + half_width);
        let probe = |s: &mut Self, t: f64, point: &mut [f64]| {
            point[coord] = t;
            s.eval(point)
        };
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let mut f1 = probe(self, x1, point)?;
        let mut f2 = probe(self, x2, point)?;
        while hi - lo > self.options.angle_tol {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = probe(self, x1, point)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = probe(self, x2, point)?;
            }
        }
        let (x, f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        if f < fbest {
            point[coord] = x;
            fbest = f;
        } else {
            point[coord] = centre;
        }
        Ok(fbest)
    }
}

/// `λ₁ = min over holonomy twists of the lowest eigenvalue`: coarse grid on
/// the holonomy torus, golden-section refinement per coordinate, then an
/// exact solve at the best twist. With no generators this is a single solve.
pub fn lambda1(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    options: &SearchOptions,
) -> Result<SpectralResult, SpectralError> {
    options.validate()?;
    let cocycles = mesh.cocycle_basis();
    let b1 = cocycles.len();
    if b1 == 0 {
        return smallest_eigenpair(mesh, dec, background, &[], options.tol, options.max_iter);
    }
    let shift = default_shift(mesh, background);
    let base = MagneticLaplacian::new(mesh, dec, &background.theta0)?;
    let k = options.block_size.min(base.dim());
    // c = η − d0·χ with η co-closed
    let gauge = CoulombGauge::new(mesh, dec)?;
    let potentials: Vec<Vec<f64>> = cocycles.iter().map(|c| gauge.gauge_for(mesh, dec, c)).collect();
    let harmonic = cocycles
        .iter()
        .zip(&potentials)
        .map(|(c, chi)| c.iter().zip(mesh.edges()).map(|(ce, &[t, h])| ce + chi[h] - chi[t]).collect())
        .collect();
    let mut search = Search {
        mesh,
        dec,
        background,
        harmonic,
        precond: base.factor_shifted(shift)?,
        options: *options,
        warm: random_block(base.dim(), k, 0x5eed),
        iterations: 0,
    };

    let g = options.grid_per_generator;
    let step = 2.0 * PI / g as f64;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    // snake order keeps neighbouring grid points adjacent for warm starts
    let total = g.pow(b1 as u32);
    for idx in 0..total {
        let mut point = vec![0.0; b1];
        let mut rem = idx;
        let mut reverse = false;
        for coord in (0..b1).rev() {
            let stride = g.pow(coord as u32);
            let mut digit = rem / stride;
            rem %= stride;
            if reverse {
                digit = g - 1 - digit;
            }
            if digit % 2 == 1 {
                reverse = !reverse;
            }
            point[coord] = digit as f64 * step;
        }
        let value = search.eval(&point)?;
        lo = lo.min(value);
        hi = hi.max(value);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, point));
        }
    }
    let (mut fbest, mut point) = best.expect("non-empty grid");

    // a flat landscape (e.g. magnetic translation symmetry) has nothing to refine
    let flat = hi - lo <= options.search_tol * (1.0 + fbest.abs());
    if !flat {
        let mut half_width = step;
        for _ in 0..options.refine_passes {
            for coord in 0..b1 {
                fbest = search.golden(&mut point, coord, half_width, fbest)?;
            }
            half_width *= 0.5;
        }
    }
    let iterations = search.iterations;
    // polish in the seam gauge: φ_seam = exp(−i Σ h_k χ_k)·φ_harmonic
    let rotation: Vec<Complex64> = (0..mesh.num_vertices())
        .map(|v| Complex64::from_polar(1.0, -point.iter().zip(&potentials).map(|(h, chi)| h * chi[v]).sum::<f64>()))
        .collect();
    let warm = search.warm.iter().map(|x| x.iter().zip(&rotation).map(|(z, r)| z * r).collect()).collect();
    // integer cocycles make the seam twist 2π-periodic
    for h in point.iter_mut() {
        *h = h.rem_euclid(2.0 * PI);
    }
    let op = MagneticLaplacian::new(mesh, dec, &background.twisted_phases(&cocycles, &point))?;
    let precond = op.factor_shifted(shift)?;
    let outcome = lobpcg(&op, &precond, warm, options.tol, options.max_iter);
    let mut result = finish(&op, &outcome, point);
    result.iterations += iterations;
    if result.converged {
        Ok(result)
    } else {
        Err(SpectralError::NotConverged(Box::new(result)))
    }
}

/// `2π|d| / area`, the continuum value of `λ₁` on a closed surface.
pub fn reference_lambda1(mesh: &SurfaceMesh, background: &BackgroundField) -> Option<f64> {
    if mesh.is_closed() {
        Some(background.total_flux().abs() / mesh.total_area())
    } else {
        None
    }
}
