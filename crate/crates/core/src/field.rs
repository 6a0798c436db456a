//! Line-bundle data on a mesh: the fixed background connection carrying
//! the external flux, and the dynamic pair (gauge potential, order
//! parameter) that the free energy depends on.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mesh::{DecOperators, SurfaceMesh};
use crate::sparse::{FactorError, HermitianMatrix, SkylineLdl};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("constant-degree backgrounds need a closed mesh; use make_uniform_background on meshes with boundary")]
    ClosedMeshRequired,
    #[error("uniform backgrounds need a mesh with boundary; use make_constant_background on closed meshes")]
    BoundaryRequired,
    #[error("flux density magnitude must be non-negative and finite (got {0})")]
    InvalidFluxDensity(f64),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("shape mismatch: {what} has {got} entries, mesh needs {expected}")]
    ShapeMismatch { what: &'static str, got: usize, expected: usize },
    #[error("random amplitude must be positive and finite (got {0})")]
    InvalidAmplitude(f64),
    #[error("Coulomb gauge solve failed: {0}")]
    Solve(#[from] FactorError),
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<(), FieldError> {
    if got == expected {
        Ok(())
    } else {
        Err(FieldError::ShapeMismatch { what, got, expected })
    }
}

/// Fixed connection `∇⁰` with curvature `F₀`.
///
/// `external_flux` is authoritative for curvature. The link phases `theta0`
/// only reproduce it modulo 2π per face; on a closed mesh one face absorbs
/// the 2π·degree defect.
#[derive(Clone, Debug)]
pub struct BackgroundField {
    pub theta0: Vec<f64>,
    pub external_flux: Vec<f64>,
    pub degree: Option<i64>,
    pub flux_density: Vec<f64>,
}

impl BackgroundField {
    /// Background with the given per-face fluxes and link phases
    /// reconstructed along a dual spanning tree.
    pub fn from_fluxes(mesh: &SurfaceMesh, external_flux: Vec<f64>, degree: Option<i64>) -> Result<Self, FieldError> {
        check_len("external_flux", external_flux.len(), mesh.num_faces())?;
        if external_flux.iter().any(|x| !x.is_finite()) {
            return Err(FieldError::NonFinite("external_flux"));
        }
        let theta0 = link_phases_for_fluxes(mesh, &external_flux);
        let flux_density = external_flux.iter().zip(mesh.face_areas()).map(|(p, a)| p / a).collect();
        Ok(BackgroundField { theta0, external_flux, degree, flux_density })
    }

    pub fn total_flux(&self) -> f64 {
        self.external_flux.iter().sum()
    }

    /// Largest deviation of the link-phase holonomy from the stored flux,
    /// reduced to (-π, π].
    pub fn holonomy_defect(&self, mesh: &SurfaceMesh) -> f64 {
        (0..mesh.num_faces())
            .map(|f| {
                let loop_sum: f64 = mesh.face_sides(f).iter().map(|s| s.sign as f64 * self.theta0[s.edge]).sum();
                wrap_angle(loop_sum - self.external_flux[f]).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn min_abs_density(&self) -> f64 {
        self.flux_density.iter().map(|b| b.abs()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_density(&self) -> f64 {
        self.flux_density.iter().map(|b| b.abs()).fold(0.0, f64::max)
    }

    /// Whether the flux density is constant to relative precision `1e-9`.
    pub fn has_constant_density(&self) -> bool {
        let (lo, hi) =
            self.flux_density.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &b| (lo.min(b), hi.max(b)));
        hi - lo <= 1e-9 * hi.abs().max(lo.abs()).max(1.0)
    }

    pub fn is_sign_definite(&self) -> bool {
        self.flux_density.iter().all(|&b| b >= 0.0) || self.flux_density.iter().all(|&b| b <= 0.0)
    }

    /// The same background after a gauge transformation.
    pub fn gauge_transformed(&self, mesh: &SurfaceMesh, gauge: &GaugeTransform) -> BackgroundField {
        let mut out = self.clone();
        for (e, &[t, h]) in mesh.edges().iter().enumerate() {
            out.theta0[e] += gauge.chi[h] - gauge.chi[t];
        }
        out
    }

    /// Link phases twisted by the flat connection `Σ_k holonomy[k]·cocycle[k]`.
    pub fn twisted_phases(&self, cocycles: &[Vec<f64>], holonomy: &[f64]) -> Vec<f64> {
        let mut theta = self.theta0.clone();
        for (c, &h) in cocycles.iter().zip(holonomy) {
            for (t, &ce) in theta.iter_mut().zip(c) {
                *t += h * ce;
            }
        }
        theta
    }
}

pub(crate) fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

fn link_phases_for_fluxes(mesh: &SurfaceMesh, flux: &[f64]) -> Vec<f64> {
    let nf = mesh.num_faces();
    let closed = mesh.is_closed();
    // on bounded meshes an outer node adjacent to every boundary edge roots the tree
    let root = if closed { 0 } else { nf };
    let nodes = if closed { nf } else { nf + 1 };
    let mut adjacency = vec![Vec::new(); nodes];
    for e in 0..mesh.num_edges() {
        let (a, b) = match mesh.edge_faces(e) {
            [Some(a), Some(b)] => (a, b),
            [Some(a), None] => (a, nf),
            _ => unreachable!("validated mesh"),
        };
        adjacency[a].push((b, e));
        adjacency[b].push((a, e));
    }
    let mut parent_edge = vec![usize::MAX; nodes];
    let mut seen = vec![false; nodes];
    let mut order = Vec::with_capacity(nodes);
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(n) = queue.pop_front() {
        order.push(n);
        for &(m, e) in &adjacency[n] {
            if !seen[m] {
                seen[m] = true;
                parent_edge[m] = e;
                queue.push_back(m);
            }
        }
    }
    let mut theta = vec![0.0; mesh.num_edges()];
    for &n in order.iter().rev() {
        if n == root {
            continue;
        }
        let e = parent_edge[n];
        let mut rest = 0.0;
        let mut own = 0.0;
        for s in mesh.face_sides(n) {
            if s.edge == e {
                own = s.sign as f64;
            } else {
                rest += s.sign as f64 * theta[s.edge];
            }
        }
        theta[e] = (flux[n] - rest) / own;
    }
    theta
}

/// Constant flux density `2π·degree / Area` on a closed mesh.
pub fn make_constant_background(mesh: &SurfaceMesh, degree: i64) -> Result<BackgroundField, FieldError> {
    if !mesh.is_closed() {
        return Err(FieldError::ClosedMeshRequired);
    }
    let density = 2.0 * PI * degree as f64 / mesh.total_area();
    let flux = mesh.face_areas().iter().map(|a| density * a).collect();
    let mut bg = BackgroundField::from_fluxes(mesh, flux, Some(degree))?;
    // exact constant rather than flux/area round trips
    bg.flux_density.iter_mut().for_each(|b| *b = density);
    Ok(bg)
}

/// Uniform flux density `b0` on a mesh with boundary.
pub fn make_uniform_background(mesh: &SurfaceMesh, b0: f64) -> Result<BackgroundField, FieldError> {
    if mesh.is_closed() {
        return Err(FieldError::BoundaryRequired);
    }
    if !(b0 >= 0.0) || !b0.is_finite() {
        return Err(FieldError::InvalidFluxDensity(b0));
    }
    let flux = mesh.face_areas().iter().map(|a| b0 * a).collect();
    let mut bg = BackgroundField::from_fluxes(mesh, flux, None)?;
    bg.flux_density.iter_mut().for_each(|b| *b = b0);
    Ok(bg)
}

/// Dynamic pair `(a, φ)`: `a` is a real 1-form on oriented edges (the
/// connection is `∇⁰ + i a`), `φ` a complex value per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    a: Vec<f64>,
    phi: Vec<Complex64>,
}

impl Configuration {
    pub fn new(a: Vec<f64>, phi: Vec<Complex64>) -> Result<Self, FieldError> {
        if a.iter().any(|x| !x.is_finite()) {
            return Err(FieldError::NonFinite("a"));
        }
        if phi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FieldError::NonFinite("phi"));
        }
        Ok(Configuration { a, phi })
    }

    /// Configuration checked against the mesh dimensions.
    pub fn for_mesh(mesh: &SurfaceMesh, a: Vec<f64>, phi: Vec<Complex64>) -> Result<Self, FieldError> {
        check_len("a", a.len(), mesh.num_edges())?;
        check_len("phi", phi.len(), mesh.num_vertices())?;
        Self::new(a, phi)
    }

    /// The normal-phase configuration `(0, 0)`.
    pub fn normal(mesh: &SurfaceMesh) -> Self {
        Configuration { a: vec![0.0; mesh.num_edges()], phi: vec![Complex64::new(0.0, 0.0); mesh.num_vertices()] }
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn phi(&self) -> &[Complex64] {
        &self.phi
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<Complex64>) {
        (self.a, self.phi)
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [Complex64]) {
        (&mut self.a, &mut self.phi)
    }

    pub fn phi_max(&self) -> f64 {
        self.phi.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|x| x.is_finite()) && self.phi.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Gauge group element `exp(i·chi)` per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeTransform {
    pub chi: Vec<f64>,
}

impl GaugeTransform {
    pub fn new(chi: Vec<f64>) -> Self {
        GaugeTransform { chi }
    }

    pub fn constant(mesh: &SurfaceMesh, c: f64) -> Self {
        GaugeTransform { chi: vec![c; mesh.num_vertices()] }
    }

    pub fn inverse(&self) -> Self {
        GaugeTransform { chi: self.chi.iter().map(|c| -c).collect() }
    }

    pub fn random(mesh: &SurfaceMesh, seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GaugeTransform { chi: (0..mesh.num_vertices()).map(|_| rng.gen_range(-amplitude..=amplitude)).collect() }
    }
}

/// Total curvature density per face: `(external_flux + d1·a) / area`.
pub fn curvature_density(mesh: &SurfaceMesh, background: &BackgroundField, config: &Configuration) -> Vec<f64> {
    (0..mesh.num_faces())
        .map(|f| (background.external_flux[f] + face_circulation(mesh, config.a(), f)) / mesh.face_areas()[f])
        .collect()
}

pub(crate) fn face_circulation(mesh: &SurfaceMesh, a: &[f64], f: usize) -> f64 {
    mesh.face_sides(f).iter().map(|s| s.sign as f64 * a[s.edge]).sum()
}

/// `D_e = φ_head − exp(i(θ⁰_e + a_e))·φ_tail` per oriented edge.
pub fn covariant_difference(
    mesh: &SurfaceMesh,
    background: &BackgroundField,
    config: &Configuration,
) -> Vec<Complex64> {
    mesh.edges()
        .iter()
        .enumerate()
        .map(|(e, &[t, h])| {
            let link = Complex64::from_polar(1.0, background.theta0[e] + config.a[e]);
            config.phi[h] - link * config.phi[t]
        })
        .collect()
}

pub fn apply_gauge(mesh: &SurfaceMesh, config: &Configuration, gauge: &GaugeTransform) -> Configuration {
    let mut out = config.clone();
    apply_gauge_in_place(mesh, &mut out, &gauge.chi);
    out
}

pub(crate) fn apply_gauge_in_place(mesh: &SurfaceMesh, config: &mut Configuration, chi: &[f64]) {
    for (e, &[t, h]) in mesh.edges().iter().enumerate() {
        config.a[e] += chi[h] - chi[t];
    }
    for (z, &c) in config.phi.iter_mut().zip(chi) {
        *z *= Complex64::from_polar(1.0, c);
    }
}

/// Prefactored Poisson solver for the discrete Coulomb condition
/// `d0ᵀ·star1·a = 0`, Dirichlet `chi = 0` on the boundary, or mean-zero
/// `chi` on closed meshes.
#[derive(Clone, Debug)]
pub struct CoulombGauge {
    closed: bool,
    // vertex -> unknown index
    unknown: Vec<Option<usize>>,
    factor: SkylineLdl<f64>,
}

impl CoulombGauge {
    pub fn new(mesh: &SurfaceMesh, dec: &DecOperators) -> Result<Self, FieldError> {
        let closed = mesh.is_closed();
        let mut unknown = vec![None; mesh.num_vertices()];
        let mut count = 0;
        for (v, slot) in unknown.iter_mut().enumerate() {
            let fixed = if closed { v == 0 } else { mesh.boundary_vertex_flags()[v] };
            if !fixed {
                *slot = Some(count);
                count += 1;
            }
        }
        let mut lap = HermitianMatrix::<f64>::new(count);
        for (e, &[t, h]) in mesh.edges().iter().enumerate() {
            let w = dec.star1[e];
            if let Some(i) = unknown[t] {
                lap.add_diagonal(i, w);
            }
            if let Some(j) = unknown[h] {
                lap.add_diagonal(j, w);
            }
            if let (Some(i), Some(j)) = (unknown[t], unknown[h]) {
                lap.add(i, j, -w);
            }
        }
        let factor = SkylineLdl::factor(&lap)?;
        Ok(CoulombGauge { closed, unknown, factor })
    }

    /// Weak divergence `(d0ᵀ·star1·a)_v` per vertex.
    pub fn divergence(mesh: &SurfaceMesh, dec: &DecOperators, a: &[f64]) -> Vec<f64> {
        let mut div = vec![0.0; mesh.num_vertices()];
        for (e, &[t, h]) in mesh.edges().iter().enumerate() {
            let flow = dec.star1[e] * a[e];
            div[h] += flow;
            div[t] -= flow;
        }
        div
    }

    /// Gauge function `chi` that moves `a` into Coulomb gauge.
    pub fn gauge_for(&self, mesh: &SurfaceMesh, dec: &DecOperators, a: &[f64]) -> Vec<f64> {
        let div = Self::divergence(mesh, dec, a);
        let mut rhs = vec![0.0; self.factor.dim()];
        for (v, slot) in self.unknown.iter().enumerate() {
            if let Some(i) = slot {
                rhs[*i] = -div[v];
            }
        }
        let x = self.factor.solve(&rhs);
        let mut chi: Vec<f64> = self.unknown.iter().map(|slot| slot.map_or(0.0, |i| x[i])).collect();
        if self.closed {
            let mean = chi.iter().sum::<f64>() / chi.len() as f64;
            chi.iter_mut().for_each(|c| *c -= mean);
        }
        chi
    }

    pub fn project(&self, mesh: &SurfaceMesh, dec: &DecOperators, config: &Configuration) -> (Configuration, Vec<f64>) {
        let chi = self.gauge_for(mesh, dec, config.a());
        let mut out = config.clone();
        apply_gauge_in_place(mesh, &mut out, &chi);
        (out, chi)
    }
}

pub fn coulomb_project(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    config: &Configuration,
) -> Result<Configuration, FieldError> {
    let gauge = CoulombGauge::new(mesh, dec)?;
    Ok(gauge.project(mesh, dec, config).0)
}

/// Reproducible random start: `a` uniform in `[-amplitude, amplitude]`,
/// `φ` uniform in the complex disc of radius `amplitude`.
pub fn random_configuration(mesh: &SurfaceMesh, seed: u64, amplitude: f64) -> Result<Configuration, FieldError> {
    random_configuration_scaled(mesh, seed, amplitude, amplitude)
}

/// Random start with separate amplitudes for the two components.
pub fn random_configuration_scaled(
    mesh: &SurfaceMesh,
    seed: u64,
    a_amplitude: f64,
    phi_amplitude: f64,
) -> Result<Configuration, FieldError> {
    for amp in [a_amplitude, phi_amplitude] {
        if !(amp > 0.0) || !amp.is_finite() {
            return Err(FieldError::InvalidAmplitude(amp));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = (0..mesh.num_edges()).map(|_| rng.gen_range(-a_amplitude..=a_amplitude)).collect();
    let phi = (0..mesh.num_vertices())
        .map(|_| {
            let r = phi_amplitude * rng.gen::<f64>().sqrt();
            Complex64::from_polar(r, 2.0 * PI * rng.gen::<f64>())
        })
        .collect();
    Ok(Configuration { a, phi })
}
