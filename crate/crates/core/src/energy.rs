//! Discrete Ginzburg–Landau free energy
//!
//! ```text
//! E = ½ Σ_f (d1·a)_f² / A_f + ½ Σ_e w_e |D_e|² − (α/2) Σ_v m_v |φ_v|² + (β/4) Σ_v m_v |φ_v|⁴
//! ```
//!
//! with `w = star1`, `m = star0` and `D` the covariant difference. The
//! gradient is the Riesz representer of the differential for the diagonal
//! inner products `⟨b, b'⟩ = Σ_e μ_e b_e b'_e` on edges and
//! `⟨ψ, ψ'⟩ = Σ_v m_v Re(conj(ψ_v) ψ'_v)` on vertices, where `μ_e` is the
//! cotangent weight floored by a positive area-based weight (right-angle
//! diagonals have zero cotangent weight).

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::field::{face_circulation, BackgroundField, Configuration};
use crate::mesh::{DecOperators, SurfaceMesh};

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("coupling constants must be positive and finite (alpha = {alpha}, beta = {beta})")]
    InvalidCoupling { alpha: f64, beta: f64 },
    #[error("configuration contains NaN or infinite entries")]
    NonFinite,
    #[error("configuration does not match the mesh ({edges} edges / {vertices} vertices expected)")]
    ShapeMismatch { edges: usize, vertices: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingParams {
    pub alpha: f64,
    pub beta: f64,
}

impl CouplingParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, EnergyError> {
        if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
            Ok(CouplingParams { alpha, beta })
        } else {
            Err(EnergyError::InvalidCoupling { alpha, beta })
        }
    }

    /// Modulus of the homogeneous superconducting state, `√(α/β)`.
    pub fn phi_scale(&self) -> f64 {
        (self.alpha / self.beta).sqrt()
    }

    /// `α²/β`, the natural energy density scale.
    pub fn energy_scale(&self) -> f64 {
        self.alpha * self.alpha / self.beta
    }

    /// Lower bound `−α²/(4β)·area` from completing the square.
    pub fn lower_bound(&self, area: f64) -> f64 {
        -self.energy_scale() / 4.0 * area
    }

    /// `max{α, α/(2β)}`, the cap in the pointwise curvature bound.
    pub fn curvature_cap(&self) -> f64 {
        self.alpha.max(self.alpha / (2.0 * self.beta))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub curvature_term: f64,
    pub dirichlet_term: f64,
    pub alpha_term: f64,
    pub quartic_term: f64,
    pub total: f64,
    pub lower_bound: f64,
    pub phi_max: f64,
    pub phi_l2: f64,
}

/// Tangent vector (or gradient) at a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Tangent {
    pub a: Vec<f64>,
    pub phi: Vec<Complex64>,
}

impl Tangent {
    pub fn zeros(mesh: &SurfaceMesh) -> Self {
        Tangent { a: vec![0.0; mesh.num_edges()], phi: vec![Complex64::new(0.0, 0.0); mesh.num_vertices()] }
    }

    pub fn scaled(&self, s: f64) -> Tangent {
        Tangent { a: self.a.iter().map(|x| x * s).collect(), phi: self.phi.iter().map(|z| z * s).collect() }
    }

    /// `self = s·self + other`
    pub fn scale_add(&mut self, s: f64, other: &Tangent) {
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x = s * *x + y;
        }
        for (x, y) in self.phi.iter_mut().zip(&other.phi) {
            *x = *x * s + y;
        }
    }
}

/// Prepared energy functional on fixed mesh, background and couplings.
#[derive(Clone, Debug)]
pub struct GlFunctional<'a> {
    pub mesh: &'a SurfaceMesh,
    pub dec: &'a DecOperators,
    pub background: &'a BackgroundField,
    pub params: CouplingParams,
    edge_metric: Vec<f64>,
}

/// Positive edge weight used for the Riesz map on 1-forms.
pub fn edge_metric(mesh: &SurfaceMesh, dec: &DecOperators) -> Vec<f64> {
    (0..mesh.num_edges())
        .map(|e| {
            let area: f64 = mesh.edge_faces(e).iter().flatten().map(|&f| mesh.face_areas()[f]).sum();
            let len = mesh.edge_length(e);
            dec.star1[e].max(area / (2.0 * len * len))
        })
        .collect()
}

impl<'a> GlFunctional<'a> {
    pub fn new(
        mesh: &'a SurfaceMesh,
        dec: &'a DecOperators,
        background: &'a BackgroundField,
        params: CouplingParams,
    ) -> Self {
        GlFunctional { mesh, dec, background, params, edge_metric: edge_metric(mesh, dec) }
    }

    pub fn edge_metric(&self) -> &[f64] {
        &self.edge_metric
    }

    pub fn check(&self, config: &Configuration) -> Result<(), EnergyError> {
        if config.a().len() != self.mesh.num_edges() || config.phi().len() != self.mesh.num_vertices() {
            return Err(EnergyError::ShapeMismatch {
                edges: self.mesh.num_edges(),
                vertices: self.mesh.num_vertices(),
            });
        }
        if !config.is_finite() {
            return Err(EnergyError::NonFinite);
        }
        Ok(())
    }

    pub fn report(&self, config: &Configuration) -> EnergyReport {
        let mesh = self.mesh;
        let (a, phi) = (config.a(), config.phi());
        let curvature_term = 0.5
            * (0..mesh.num_faces())
                .map(|f| {
                    let c = face_circulation(mesh, a, f);
                    c * c / mesh.face_areas()[f]
                })
                .sum::<f64>();
        let dirichlet_term = 0.5
            * mesh
                .edges()
                .iter()
                .enumerate()
                .map(|(e, &[t, h])| {
                    let link = Complex64::from_polar(1.0, self.background.theta0[e] + a[e]);
                    self.dec.star1[e] * (phi[h] - link * phi[t]).norm_sqr()
                })
                .sum::<f64>();
        let (mut l2, mut l4, mut phi_max) = (0.0, 0.0, 0.0f64);
        for (z, m) in phi.iter().zip(&self.dec.star0) {
            let r2 = z.norm_sqr();
            l2 += m * r2;
            l4 += m * r2 * r2;
            phi_max = phi_max.max(r2.sqrt());
        }
        let alpha_term = 0.5 * self.params.alpha * l2;
        let quartic_term = 0.25 * self.params.beta * l4;
        EnergyReport {
            curvature_term,
            dirichlet_term,
            alpha_term,
            quartic_term,
            total: curvature_term + dirichlet_term - alpha_term + quartic_term,
            lower_bound: self.params.lower_bound(mesh.total_area()),
            phi_max,
            phi_l2: l2.sqrt(),
        }
    }

    pub fn energy(&self, config: &Configuration) -> f64 {
        self.energy_at(config.a(), config.phi())
    }

    pub(crate) fn energy_at(&self, a: &[f64], phi: &[Complex64]) -> f64 {
        let mesh = self.mesh;
        let mut curvature = 0.0;
        for f in 0..mesh.num_faces() {
            let c = face_circulation(mesh, a, f);
            curvature += c * c * self.dec.star2[f];
        }
        let mut dirichlet = 0.0;
        for (e, &[t, h]) in mesh.edges().iter().enumerate() {
            let w = self.dec.star1[e];
            if w != 0.0 {
                let link = Complex64::from_polar(1.0, self.background.theta0[e] + a[e]);
                dirichlet += w * (phi[h] - link * phi[t]).norm_sqr();
            }
        }
        let (alpha, beta) = (self.params.alpha, self.params.beta);
        let mut potential = 0.0;
        for (z, m) in phi.iter().zip(&self.dec.star0) {
            let r2 = z.norm_sqr();
            potential += m * r2 * (0.25 * beta * r2 - 0.5 * alpha);
        }
        0.5 * curvature + 0.5 * dirichlet + potential
    }

    /// Energy of `config + t·dir`.
    pub fn energy_along(&self, config: &Configuration, dir: &Tangent, t: f64) -> f64 {
        let a: Vec<f64> = config.a().iter().zip(&dir.a).map(|(x, d)| x + t * d).collect();
        let phi: Vec<Complex64> = config.phi().iter().zip(&dir.phi).map(|(x, d)| x + d * t).collect();
        self.energy_at(&a, &phi)
    }

    /// Energy together with its Riesz gradient.
    pub fn energy_and_gradient(&self, config: &Configuration) -> (f64, Tangent) {
        let (energy, mut grad) = self.energy_and_differential(config);
        self.riesz_in_place(&mut grad);
        (energy, grad)
    }

    /// Energy together with the raw differential: `dE(x)[v] = pair(g, v)`.
    pub fn energy_and_differential(&self, config: &Configuration) -> (f64, Tangent) {
        let mesh = self.mesh;
        let (a, phi) = (config.a(), config.phi());
        let mut grad = Tangent::zeros(mesh);

        let mut curvature = 0.0;
        for f in 0..mesh.num_faces() {
            let c = face_circulation(mesh, a, f);
            let s2 = self.dec.star2[f];
            curvature += c * c * s2;
            for side in mesh.face_sides(f) {
                grad.a[side.edge] += side.sign as f64 * c * s2;
            }
        }
        let mut dirichlet = 0.0;
        for (e, &[t, h]) in mesh.edges().iter().enumerate() {
            let w = self.dec.star1[e];
            if w == 0.0 {
                continue;
            }
            let link = Complex64::from_polar(1.0, self.background.theta0[e] + a[e]);
            let transported = link * phi[t];
            let d = phi[h] - transported;
            dirichlet += w * d.norm_sqr();
            // ∂/∂a_e of ½ w |D|² = w Im(conj(φ_h) U φ_t)
            grad.a[e] += w * (phi[h].conj() * transported).im;
            grad.phi[h] += d * w;
            grad.phi[t] -= link.conj() * d * w;
        }
        let (alpha, beta) = (self.params.alpha, self.params.beta);
        let mut potential = 0.0;
        for (v, (z, m)) in phi.iter().zip(&self.dec.star0).enumerate() {
            let r2 = z.norm_sqr();
            potential += m * r2 * (0.25 * beta * r2 - 0.5 * alpha);
            grad.phi[v] += z * (m * (beta * r2 - alpha));
        }
        (0.5 * curvature + 0.5 * dirichlet + potential, grad)
    }

    /// Turn a raw differential into the Riesz gradient.
    pub fn riesz_in_place(&self, g: &mut Tangent) {
        for (x, mu) in g.a.iter_mut().zip(&self.edge_metric) {
            *x /= mu;
        }
        for (x, m) in g.phi.iter_mut().zip(&self.dec.star0) {
            *x /= m;
        }
    }

    /// Norm of the Riesz gradient computed from the raw differential.
    pub fn dual_norm(&self, g: &Tangent) -> f64 {
        let edges: f64 = g.a.iter().zip(&self.edge_metric).map(|(x, mu)| x * x / mu).sum();
        let verts: f64 = g.phi.iter().zip(&self.dec.star0).map(|(z, m)| z.norm_sqr() / m).sum();
        (edges + verts).sqrt()
    }

    /// `E(config + t·dir) − E(config)` evaluated term by term, so that the
    /// difference keeps full relative precision even when it is far below
    /// the rounding error of the energy itself.
    pub fn energy_change(&self, config: &Configuration, dir: &Tangent, t: f64) -> f64 {
        let mesh = self.mesh;
        let (a, phi) = (config.a(), config.phi());
        let mut curvature = 0.0;
        for f in 0..mesh.num_faces() {
            let c = face_circulation(mesh, a, f);
            let dc = t * face_circulation(mesh, &dir.a, f);
            curvature += self.dec.star2[f] * dc * (2.0 * c + dc);
        }
        let mut dirichlet = 0.0;
        for (e, &[tl, h]) in mesh.edges().iter().enumerate() {
            let w = self.dec.star1[e];
            if w == 0.0 {
                continue;
            }
            let link = Complex64::from_polar(1.0, self.background.theta0[e] + a[e]);
            let delta = t * dir.a[e];
            let half = (0.5 * delta).sin();
            let expm1 = Complex64::new(-2.0 * half * half, delta.sin());
            let moved_tail = phi[tl] + dir.phi[tl] * t;
            let d = phi[h] - link * phi[tl];
            let dd = dir.phi[h] * t - link * (expm1 * moved_tail + dir.phi[tl] * t);
            dirichlet += w * (dd.conj() * (d * 2.0 + dd)).re;
        }
        let (alpha, beta) = (self.params.alpha, self.params.beta);
        let mut potential = 0.0;
        for ((z, dz), m) in phi.iter().zip(&dir.phi).zip(&self.dec.star0) {
            let step = dz * t;
            let r2 = z.norm_sqr();
            let dr2 = (step.conj() * (z * 2.0 + step)).re;
            potential += m * dr2 * (0.25 * beta * (2.0 * r2 + dr2) - 0.5 * alpha);
        }
        0.5 * curvature + 0.5 * dirichlet + potential
    }

    /// Raw pairing of a differential with a tangent vector.
    pub fn pair(g: &Tangent, v: &Tangent) -> f64 {
        let edges: f64 = g.a.iter().zip(&v.a).map(|(x, y)| x * y).sum();
        let verts: f64 = g.phi.iter().zip(&v.phi).map(|(x, y)| (x.conj() * y).re).sum();
        edges + verts
    }

    pub fn gradient(&self, config: &Configuration) -> Tangent {
        self.energy_and_gradient(config).1
    }

    /// Inner product on tangent vectors.
    pub fn inner(&self, x: &Tangent, y: &Tangent) -> f64 {
        let edges: f64 = x.a.iter().zip(&y.a).zip(&self.edge_metric).map(|((p, q), mu)| mu * p * q).sum();
        let verts: f64 = x.phi.iter().zip(&y.phi).zip(&self.dec.star0).map(|((p, q), m)| m * (p.conj() * q).re).sum();
        edges + verts
    }

    pub fn norm(&self, x: &Tangent) -> f64 {
        self.inner(x, x).sqrt()
    }

    pub fn residual(&self, config: &Configuration) -> f64 {
        self.dual_norm(&self.energy_and_differential(config).1)
    }

    /// Default stopping threshold `1e-8·(1 + α²/β·area)`.
    pub fn default_grad_tol(&self) -> f64 {
        1e-8 * (1.0 + self.params.energy_scale() * self.mesh.total_area())
    }

    pub fn bounds(&self, config: &Configuration, mesh_tol: Option<f64>) -> BoundReport {
        let mesh = self.mesh;
        let params = self.params;
        let mesh_tol = mesh_tol.unwrap_or_else(|| default_mesh_tol(mesh));
        let phi = config.phi();
        let phi_max = config.phi_max();
        let phi_bound = params.phi_scale();
        let identically_zero = phi.iter().all(|z| z.norm_sqr() == 0.0);

        let deviation_max = (0..mesh.num_faces())
            .map(|f| (face_circulation(mesh, config.a(), f) / mesh.face_areas()[f]).abs())
            .fold(0.0, f64::max);

        let cap = params.curvature_cap();
        let curvature_gap = if identically_zero {
            Some(deviation_max)
        } else if self.background.has_constant_density() {
            let b = crate::field::curvature_density(mesh, self.background, config);
            let gap = mesh
                .faces()
                .iter()
                .enumerate()
                .map(|(f, tri)| {
                    let mean_sq = tri.iter().map(|&v| phi[v].norm_sqr()).sum::<f64>() / 3.0;
                    b[f].abs() - (cap - 0.5 * mean_sq)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            Some(gap)
        } else {
            None
        };
        let phi_gap = phi_max - phi_bound;
        BoundReport {
            phi_max,
            phi_bound,
            phi_gap,
            curvature_cap: cap,
            curvature_gap,
            deviation_max,
            phi_identically_zero: identically_zero,
            weights_nonnegative: self.dec.has_nonnegative_weights(),
            mesh_tol,
            phi_ok: phi_gap <= mesh_tol,
            curvature_ok: curvature_gap.is_none_or(|g| g <= mesh_tol),
        }
    }
}

/// `5·h` with `h` the longest edge.
pub fn default_mesh_tol(mesh: &SurfaceMesh) -> f64 {
    5.0 * mesh.longest_edge()
}

/// A priori bounds on critical points: `|φ| ≤ √(α/β)` and, for constant
/// external field, `|F| ≤ max{α, α/2β} − ½|φ|²` per face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub phi_max: f64,
    pub phi_bound: f64,
    /// `max|φ| − √(α/β)`
    pub phi_gap: f64,
    pub curvature_cap: f64,
    /// `max_f (|b_f| − (cap − ½⟨|φ|²⟩_f))`; for `φ ≡ 0` this is the largest
    /// deviation density instead. `None` when the external density varies.
    pub curvature_gap: Option<f64>,
    pub deviation_max: f64,
    pub phi_identically_zero: bool,
    /// The modulus bound is only meaningful when every cotangent weight is
    /// non-negative.
    pub weights_nonnegative: bool,
    pub mesh_tol: f64,
    pub phi_ok: bool,
    pub curvature_ok: bool,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        (self.phi_ok || !self.weights_nonnegative) && self.curvature_ok
    }
}

pub fn evaluate_energy(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    config: &Configuration,
    params: CouplingParams,
) -> Result<EnergyReport, EnergyError> {
    let functional = GlFunctional::new(mesh, dec, background, params);
    functional.check(config)?;
    Ok(functional.report(config))
}

pub fn evaluate_gradient(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    config: &Configuration,
    params: CouplingParams,
) -> Result<Tangent, EnergyError> {
    let functional = GlFunctional::new(mesh, dec, background, params);
    functional.check(config)?;
    Ok(functional.gradient(config))
}

pub fn residual_norm(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    config: &Configuration,
    params: CouplingParams,
) -> Result<f64, EnergyError> {
    let functional = GlFunctional::new(mesh, dec, background, params);
    functional.check(config)?;
    Ok(functional.residual(config))
}

pub fn verify_bounds(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    config: &Configuration,
    params: CouplingParams,
    mesh_tol: Option<f64>,
) -> BoundReport {
    GlFunctional::new(mesh, dec, background, params).bounds(config, mesh_tol)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::field::{apply_gauge, make_constant_background, random_configuration, GaugeTransform};
    use crate::mesh::{build_dec, build_flat_torus, build_icosphere};

    fn torus(n: usize, degree: i64) -> (SurfaceMesh, DecOperators, BackgroundField) {
        let mesh = build_flat_torus(n, n, 1.0, 1.0).unwrap();
        let dec = build_dec(&mesh);
        let bg = make_constant_background(&mesh, degree).unwrap();
        (mesh, dec, bg)
    }

    #[test]
    fn coupling_validation() {
        assert!(CouplingParams::new(1.0, 1.0).is_ok());
        assert!(CouplingParams::new(0.0, 1.0).is_err());
        assert!(CouplingParams::new(1.0, -2.0).is_err());
        assert!(CouplingParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn normal_phase_has_zero_energy_and_gradient() {
        let (mesh, dec, bg) = torus(6, 1);
        let f = GlFunctional::new(&mesh, &dec, &bg, CouplingParams::new(3.0, 1.0).unwrap());
        let normal = Configuration::normal(&mesh);
        assert_eq!(f.energy(&normal), 0.0);
        let g = f.gradient(&normal);
        assert!(g.a.iter().all(|&x| x == 0.0));
        assert!(g.phi.iter().all(|z| z.norm() == 0.0));
        assert_eq!(f.residual(&normal), 0.0);
    }

    #[test]
    fn homogeneous_state_attains_lower_bound() {
        for n in [4, 7, 12] {
            let (mesh, dec, bg) = torus(n, 0);
            let params = CouplingParams::new(1.0, 1.0).unwrap();
            let cfg = Configuration::for_mesh(
                &mesh,
                vec![0.0; mesh.num_edges()],
                vec![Complex64::new(1.0, 0.0); mesh.num_vertices()],
            )
            .unwrap();
            let r = evaluate_energy(&mesh, &dec, &bg, &cfg, params).unwrap();
            assert!((r.total + 0.25).abs() < 1e-14, "{n}: {}", r.total);
            assert!((r.total - r.lower_bound).abs() < 1e-14);
        }
    }

    #[test]
    fn report_terms_add_up() {
        let (mesh, dec, bg) = torus(5, 1);
        let cfg = random_configuration(&mesh, 4, 0.8).unwrap();
        let r = evaluate_energy(&mesh, &dec, &bg, &cfg, CouplingParams::new(2.0, 0.7).unwrap()).unwrap();
        let f = GlFunctional::new(&mesh, &dec, &bg, CouplingParams::new(2.0, 0.7).unwrap());
        assert!((r.curvature_term + r.dirichlet_term - r.alpha_term + r.quartic_term - r.total).abs() < 1e-12);
        assert!((f.energy(&cfg) - r.total).abs() < 1e-10 * (1.0 + r.total.abs()));
        assert!((f.energy_and_gradient(&cfg).0 - r.total).abs() < 1e-10 * (1.0 + r.total.abs()));
    }

    #[test]
    fn doubling_beta_only_changes_quartic_term() {
        let (mesh, dec, bg) = torus(5, 1);
        let cfg = random_configuration(&mesh, 2, 1.0).unwrap();
        let r1 = evaluate_energy(&mesh, &dec, &bg, &cfg, CouplingParams::new(2.0, 0.5).unwrap()).unwrap();
        let r2 = evaluate_energy(&mesh, &dec, &bg, &cfg, CouplingParams::new(2.0, 1.0).unwrap()).unwrap();
        assert_eq!(r1.curvature_term, r2.curvature_term);
        assert_eq!(r1.dirichlet_term, r2.dirichlet_term);
        assert_eq!(r1.alpha_term, r2.alpha_term);
        assert!((r2.quartic_term - 2.0 * r1.quartic_term).abs() < 1e-12 * r2.quartic_term);
    }

    #[test]
    fn gauge_direction_is_orthogonal_to_gradient() {
        let (mesh, dec, bg) = torus(6, 1);
        let f = GlFunctional::new(&mesh, &dec, &bg, CouplingParams::new(5.0, 1.0).unwrap());
        let cfg = random_configuration(&mesh, 12, 1.0).unwrap();
        let g = f.gradient(&cfg);
        let chi = GaugeTransform::random(&mesh, 3, 1.0).chi;
        let b_mu: Vec<f64> = mesh.edges().iter().map(|&[t, h]| chi[h] - chi[t]).collect();
        // directional derivative uses the raw (non-Riesz) pairing, so undo the metric
        let dir =
            Tangent { a: b_mu, phi: cfg.phi().iter().zip(&chi).map(|(z, c)| Complex64::new(0.0, *c) * z).collect() };
        let slope = f.inner(&g, &dir);
        assert!(slope.abs() < 1e-9 * f.norm(&g) * f.norm(&dir), "{slope}");
    }

    #[test]
    fn energy_is_gauge_invariant() {
        let mesh = build_icosphere(2, 1.0).unwrap();
        let dec = build_dec(&mesh);
        let bg = make_constant_background(&mesh, 2).unwrap();
        let params = CouplingParams::new(1.3, 0.6).unwrap();
        let cfg = random_configuration(&mesh, 21, 1.2).unwrap();
        let e0 = evaluate_energy(&mesh, &dec, &bg, &cfg, params).unwrap().total;
        for seed in 0..5 {
            let moved = apply_gauge(&mesh, &cfg, &GaugeTransform::random(&mesh, seed, 4.0));
            let e1 = evaluate_energy(&mesh, &dec, &bg, &moved, params).unwrap().total;
            assert!((e1 - e0).abs() <= 1e-10 * e0.abs().max(1.0), "{e0} vs {e1}");
        }
    }

    #[test]
    fn nan_input_is_rejected() {
        let (mesh, dec, bg) = torus(3, 0);
        let functional = GlFunctional::new(&mesh, &dec, &bg, CouplingParams::new(1.0, 1.0).unwrap());
        let short = Configuration::new(vec![0.0; 2], vec![]).unwrap();
        assert!(matches!(functional.check(&short), Err(EnergyError::ShapeMismatch { .. })));
    }

    #[test]
    fn bounds_on_normal_state() {
        let (mesh, dec, bg) = torus(6, 1);
        let params = CouplingParams::new(10.0, 1.0).unwrap();
        let r = verify_bounds(&mesh, &dec, &bg, &Configuration::normal(&mesh), params, None);
        assert!(r.phi_identically_zero);
        assert!(r.phi_gap <= 0.0);
        assert_eq!(r.curvature_gap, Some(0.0));
        assert!(r.holds());
        assert!((r.mesh_tol - 5.0 * (2.0f64).sqrt() / 6.0).abs() < 1e-12);
    }

    #[test]
    fn random_residual_is_positive() {
        let (mesh, dec, bg) = torus(4, 1);
        let cfg = random_configuration(&mesh, 1, 0.5).unwrap();
        let r = residual_norm(&mesh, &dec, &bg, &cfg, CouplingParams::new(1.0, 1.0).unwrap()).unwrap();
        assert!(r > 0.0);
    }

    #[test]
    fn edge_metric_is_positive_and_matches_healthy_weights() {
        let (mesh, dec, _) = torus(4, 0);
        let mu = edge_metric(&mesh, &dec);
        for e in 0..mesh.num_edges() {
            assert!(mu[e] > 0.0);
            if dec.star1[e] > 0.5 {
                assert_eq!(mu[e], dec.star1[e]);
            }
        }
    }
}
