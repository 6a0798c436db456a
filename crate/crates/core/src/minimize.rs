//! Descent to critical points of the free energy.
//!
//! Polak–Ribière nonlinear conjugate gradients with an Armijo backtracking
//! line search, preconditioned by fixed sparse factorizations:
//! `curl·star2·curl + σ_a·μ` on the gauge potential and the background
//! magnetic Laplacian shifted by `α·star0` on the order parameter. The
//! stopping test always uses the unpreconditioned residual, so the
//! preconditioner only changes the path, not the certificate.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::energy::{BoundReport, CouplingParams, EnergyError, EnergyReport, GlFunctional, Tangent};
use crate::field::{apply_gauge_in_place, BackgroundField, Configuration, CoulombGauge, FieldError};
use crate::mesh::{DecOperators, SurfaceMesh};
use crate::sparse::{FactorError, HermitianMatrix, SkylineLdl};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Classification {
    Reducible,
    Irreducible,
    Unconverged,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Reducible => "Reducible",
            Classification::Irreducible => "Irreducible",
            Classification::Unconverged => "Unconverged",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum MinimizeError {
    #[error("invalid solver option: {0}")]
    InvalidOption(&'static str),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("preconditioner factorization failed: {0}")]
    Factor(#[from] FactorError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Residual threshold; `None` selects `1e-8·(1 + α²/β·area)`.
    pub grad_tol: Option<f64>,
    pub max_iters: usize,
    /// Coulomb projection period in iterations; 0 disables it.
    pub coulomb_every: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    /// Largest backtracking contraction per rejected trial.
    pub backtrack: f64,
    /// Conjugate-gradient restart period; 1 gives steepest descent.
    pub restart_every: usize,
    /// Precondition with sparse factorizations instead of the diagonal metric.
    pub precondition: bool,
    /// Keep the accepted energies in the report.
    pub record_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            grad_tol: None,
            max_iters: 20_000,
            coulomb_every: 25,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            restart_every: 50,
            precondition: true,
            record_history: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), MinimizeError> {
        if let Some(tol) = self.grad_tol {
            if !(tol > 0.0) || !tol.is_finite() {
                return Err(MinimizeError::InvalidOption("grad_tol must be positive"));
            }
        }
        if self.max_iters == 0 {
            return Err(MinimizeError::InvalidOption("max_iters must be at least 1"));
        }
        if !(self.armijo_c1 > 0.0 && self.armijo_c1 < 0.5) {
            return Err(MinimizeError::InvalidOption("armijo_c1 must lie in (0, 1/2)"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(MinimizeError::InvalidOption("backtrack must lie in (0, 1)"));
        }
        if self.restart_every == 0 {
            return Err(MinimizeError::InvalidOption("restart_every must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub final_energy: f64,
    pub residual: f64,
    pub grad_tol: f64,
    pub iterations: usize,
    pub classification: Classification,
    pub phi_max: f64,
    pub energy: EnergyReport,
    pub bound_report: BoundReport,
    /// The line search could not decrease the energy at any representable step.
    pub line_search_stalled: bool,
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Default relative threshold for calling `φ` non-zero.
pub const DEFAULT_PHI_TOL: f64 = 1e-3;

/// Irreducible iff `phi_max > phi_tol·√(α/β)`; ties count as reducible.
pub fn classify_solution(phi_max: f64, params: CouplingParams, phi_tol: f64) -> Classification {
    if phi_max > phi_tol * params.phi_scale() {
        Classification::Irreducible
    } else {
        Classification::Reducible
    }
}

struct Preconditioner {
    edges: SkylineLdl<f64>,
    vertices: SkylineLdl<Complex64>,
}

impl Preconditioner {
    fn new(functional: &GlFunctional<'_>) -> Result<Self, FactorError> {
        let mesh = functional.mesh;
        let dec = functional.dec;
        let params = functional.params;

        let sigma_a = params.alpha / params.beta;
        let mut pa = HermitianMatrix::<f64>::new(mesh.num_edges());
        for (e, mu) in functional.edge_metric().iter().enumerate() {
            pa.add_diagonal(e, sigma_a * mu);
        }
        for f in 0..mesh.num_faces() {
            let s2 = dec.star2[f];
            let sides = mesh.face_sides(f);
            for (k, p) in sides.iter().enumerate() {
                for q in &sides[..=k] {
                    let v = s2 * (p.sign * q.sign) as f64;
                    if p.edge == q.edge {
                        pa.add_diagonal(p.edge, v);
                    } else {
                        pa.add(p.edge, q.edge, v);
                    }
                }
            }
        }

        // |w| keeps the vertex block definite on meshes with obtuse pairs
        let mut pv = HermitianMatrix::<Complex64>::new(mesh.num_vertices());
        for (v, m) in dec.star0.iter().enumerate() {
            pv.add_diagonal(v, params.alpha * m);
        }
        for (e, &[t, h]) in mesh.edges().iter().enumerate() {
            let w = dec.star1[e].abs();
            if w == 0.0 {
                continue;
            }
            pv.add_diagonal(h, w);
            pv.add_diagonal(t, w);
            pv.add(h, t, -Complex64::from_polar(w, functional.background.theta0[e]));
        }
        Ok(Preconditioner { edges: SkylineLdl::factor(&pa)?, vertices: SkylineLdl::factor(&pv)? })
    }

    fn apply(&self, g: &Tangent) -> Tangent {
        Tangent { a: self.edges.solve(&g.a), phi: self.vertices.solve(&g.phi) }
    }
}

/// Reusable solver for one mesh, background and coupling pair. Building it
/// factors the preconditioner and the Coulomb Poisson problem once; each
/// [`Minimizer::run`] is then independent and single-threaded.
pub struct Minimizer<'a> {
    functional: GlFunctional<'a>,
    gauge: Option<CoulombGauge>,
    precond: Option<Preconditioner>,
    options: SolverOptions,
    grad_tol: f64,
}

impl<'a> Minimizer<'a> {
    pub fn new(
        mesh: &'a SurfaceMesh,
        dec: &'a DecOperators,
        background: &'a BackgroundField,
        params: CouplingParams,
        options: SolverOptions,
    ) -> Result<Self, MinimizeError> {
        options.validate()?;
        let functional = GlFunctional::new(mesh, dec, background, params);
        let gauge = if options.coulomb_every > 0 { Some(CoulombGauge::new(mesh, dec)?) } else { None };
        let precond = if options.precondition { Some(Preconditioner::new(&functional)?) } else { None };
        let grad_tol = options.grad_tol.unwrap_or_else(|| functional.default_grad_tol());
        Ok(Minimizer { functional, gauge, precond, options, grad_tol })
    }

    pub fn functional(&self) -> &GlFunctional<'a> {
        &self.functional
    }

    pub fn grad_tol(&self) -> f64 {
        self.grad_tol
    }

    fn search_direction(&self, g: &Tangent) -> Tangent {
        match &self.precond {
            Some(p) => p.apply(g),
            None => {
                let mut z = g.clone();
                self.functional.riesz_in_place(&mut z);
                z
            }
        }
    }

    fn project(&self, config: &mut Configuration, carried: &mut [&mut Tangent]) {
        let Some(gauge) = &self.gauge else { return };
        let f = &self.functional;
        let chi = gauge.gauge_for(f.mesh, f.dec, config.a());
        apply_gauge_in_place(f.mesh, config, &chi);
        // vectors attached to φ rotate with it; edge components are invariant
        for t in carried.iter_mut() {
            for (z, &c) in t.phi.iter_mut().zip(&chi) {
                *z *= Complex64::from_polar(1.0, c);
            }
        }
    }

    /// Descend from `start`. Always returns a configuration and a report;
    /// failures to converge are recorded in the classification.
    pub fn run(&self, start: &Configuration) -> Result<(Configuration, SolveReport), MinimizeError> {
        let f = &self.functional;
        f.check(start)?;
        let opts = &self.options;
        let mut x = start.clone();
        let mut history = Vec::new();

        let (mut energy, mut g) = f.energy_and_differential(&x);
        if self.gauge.is_some() {
            self.project(&mut x, &mut [&mut g]);
            let fresh = f.energy_and_differential(&x);
            energy = fresh.0;
            g = fresh.1;
        }
        let mut residual = f.dual_norm(&g);
        let mut z = self.search_direction(&g);
        let mut d = z.scaled(-1.0);
        let mut gz = GlFunctional::pair(&g, &z);
        let mut step = 1.0;
        let mut prev_slope = f64::NAN;
        let mut iterations = 0;
        let mut since_restart = 0;
        let mut stalled = false;
        if opts.record_history {
            history.push(energy);
        }

        while residual > self.grad_tol && iterations < opts.max_iters {
            let mut slope = GlFunctional::pair(&g, &d);
            if !(slope < 0.0) {
                d = z.scaled(-1.0);
                slope = -gz;
                since_restart = 0;
            }
            // initial trial from the previous accepted step, scaled by slope ratio
            let mut t = if prev_slope.is_finite() { (step * prev_slope / slope).min(4.0 * step) } else { 1.0 };
            if self.precond.is_none() && !prev_slope.is_finite() {
                t = 1.0 / (1.0 + f.norm(&d));
            }
            let accepted = self.line_search(&x, &d, slope, &mut t);
            let Some(delta) = accepted else {
                if since_restart > 0 {
                    // retry once along the plain preconditioned gradient
                    d = z.scaled(-1.0);
                    since_restart = 0;
                    prev_slope = f64::NAN;
                    continue;
                }
                stalled = true;
                break;
            };
            iterations += 1;
            since_restart += 1;
            step = t;
            prev_slope = slope;

            {
                let (a, phi) = x.parts_mut();
                for (xa, da) in a.iter_mut().zip(&d.a) {
                    *xa += t * da;
                }
                for (xp, dp) in phi.iter_mut().zip(&d.phi) {
                    *xp += dp * t;
                }
            }
            let (new_energy, mut g_new) = f.energy_and_differential(&x);
            debug_assert!(delta <= 0.0);
            energy = new_energy;

            if let Some(k) = (opts.coulomb_every > 0).then_some(opts.coulomb_every) {
                if iterations % k == 0 {
                    self.project(&mut x, &mut [&mut d, &mut z, &mut g_new, &mut g]);
                    let fresh = f.energy_and_differential(&x);
                    energy = fresh.0;
                    g_new = fresh.1;
                }
            }
            if opts.record_history {
                history.push(energy);
            }

            residual = f.dual_norm(&g_new);
            let z_new = self.search_direction(&g_new);
            let gz_new = GlFunctional::pair(&g_new, &z_new);
            let beta = if since_restart >= opts.restart_every {
                since_restart = 0;
                0.0
            } else {
                // Polak–Ribière+, preconditioned
                let mut y = g_new.clone();
                y.scale_add(1.0, &g.scaled(-1.0));
                (GlFunctional::pair(&y, &z_new) / gz).max(0.0)
            };
            d.scale_add(beta, &z_new.scaled(-1.0));
            g = g_new;
            z = z_new;
            gz = gz_new;
        }

        if let Some(gauge) = &self.gauge {
            let (projected, _) = gauge.project(f.mesh, f.dec, &x);
            x = projected;
            let fresh = f.energy_and_differential(&x);
            energy = fresh.0;
            residual = f.dual_norm(&fresh.1);
        }
        let report = f.report(&x);
        let phi_max = x.phi_max();
        let classification = if residual > self.grad_tol {
            Classification::Unconverged
        } else {
            classify_solution(phi_max, f.params, DEFAULT_PHI_TOL)
        };
        let report = SolveReport {
            final_energy: energy,
            residual,
            grad_tol: self.grad_tol,
            iterations,
            classification,
            phi_max,
            energy: report,
            bound_report: f.bounds(&x, None),
            line_search_stalled: stalled,
            history,
        };
        Ok((x, report))
    }

    /// Armijo backtracking with quadratic interpolation; on success `t`
    /// holds the accepted step and the energy change is returned.
    fn line_search(&self, x: &Configuration, d: &Tangent, slope: f64, t: &mut f64) -> Option<f64> {
        let f = &self.functional;
        let c1 = self.options.armijo_c1;
        let rho = self.options.backtrack;
        for _ in 0..80 {
            let delta = f.energy_change(x, d, *t);
            if delta.is_finite() && delta <= c1 * *t * slope {
                // try the minimiser of the fitted parabola when it lies further out
                let curv = delta - slope * *t;
                if curv > 0.0 {
                    let tq = (-slope * *t * *t / (2.0 * curv)).min(4.0 * *t);
                    if tq > 1.5 * *t {
                        let dq = f.energy_change(x, d, tq);
                        if dq.is_finite() && dq < delta {
                            *t = tq;
                            return Some(dq);
                        }
                    }
                    return Some(delta);
                }
                // concave along d: keep doubling while the energy keeps falling
                let mut best = delta;
                for _ in 0..30 {
                    let dq = f.energy_change(x, d, 2.0 * *t);
                    if !(dq.is_finite() && dq < best) {
                        break;
                    }
                    *t *= 2.0;
                    best = dq;
                }
                return Some(best);
            }
            let shrink = if delta.is_finite() {
                let curv = delta - slope * *t;
                let tq = -slope * *t * *t / (2.0 * curv);
                (tq / *t).clamp(0.1, rho)
            } else {
                0.1
            };
            *t *= shrink;
            if *t < f64::EPSILON * 1e-4 {
                break;
            }
        }
        None
    }
}

pub fn minimize_energy(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    start: &Configuration,
    params: CouplingParams,
    options: &SolverOptions,
) -> Result<(Configuration, SolveReport), MinimizeError> {
    Minimizer::new(mesh, dec, background, params, *options)?.run(start)
}
