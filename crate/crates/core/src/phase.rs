//! Phase-diagram sweeps in the couplings `(α, β)`, location of the
//! reducible/irreducible boundary, and multi-start estimates of critical
//! values.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::energy::{BoundReport, CouplingParams};
use crate::field::{random_configuration_scaled, BackgroundField, Configuration};
use crate::mesh::{DecOperators, SurfaceMesh};
use crate::minimize::{Classification, MinimizeError, Minimizer, SolveReport, SolverOptions, DEFAULT_PHI_TOL};
use crate::spectral::{lambda1, SearchOptions, SpectralError};

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("bracket endpoints alpha = {lower} and alpha = {upper} both classify {class}")]
    SameClassification { lower: f64, upper: f64, class: Classification },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
}

/// Which analytic existence result, if any, settles a coupling pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TheoryRegion {
    /// `max{α, α/2β} ≤ λ₁`: no irreducible solutions.
    NonExistence,
    /// `α > λ₁`: the minimum is negative, hence irreducible.
    Existence,
    /// `β < ½` and `2βλ₁ < α ≤ λ₁`: not settled by either result.
    Indeterminate,
}

impl TheoryRegion {
    pub fn of(alpha: f64, beta: f64, lambda1: f64) -> Self {
        if alpha > lambda1 {
            TheoryRegion::Existence
        } else if alpha.max(alpha / (2.0 * beta)) <= lambda1 {
            TheoryRegion::NonExistence
        } else {
            TheoryRegion::Indeterminate
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TheoryRegion::NonExistence => "A",
            TheoryRegion::Existence => "B",
            TheoryRegion::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub alpha: f64,
    pub beta: f64,
    pub lambda1_ref: f64,
    pub classification: Classification,
    pub min_energy: f64,
    pub phi_max: f64,
    pub starts_used: usize,
    pub converged_starts: usize,
    pub theory: TheoryRegion,
    /// Some start (converged or not) went below `−ε` with non-trivial `φ`.
    pub negative_energy_found: bool,
    /// Problems that did not abort the sweep.
    pub flag: Option<String>,
    /// Bound checks of every converged irreducible start.
    #[serde(skip)]
    pub irreducible_bounds: Vec<BoundReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalValueReport {
    pub energies: Vec<f64>,
    pub cluster_tolerance: f64,
    pub samples: usize,
    pub contains_zero: bool,
    /// Members per cluster, aligned with `energies`.
    pub cluster_sizes: Vec<usize>,
    /// `max − min` of the members of each cluster.
    pub cluster_spreads: Vec<f64>,
    pub unconverged: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseOptions {
    pub solver: SolverOptions,
    pub spectral: SearchOptions,
    /// Precomputed `λ₁`; computed from the background when absent.
    pub lambda1: Option<f64>,
    /// Random `φ` starts are uniform in the disc of radius `scale·√(α/β)`.
    pub phi_amplitude: f64,
    /// Random `a` starts are uniform in `[−a_amplitude, a_amplitude]`.
    pub a_amplitude: f64,
    pub phi_tol: f64,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        PhaseOptions {
            solver: SolverOptions::default(),
            spectral: SearchOptions::default(),
            lambda1: None,
            phi_amplitude: 1.0,
            a_amplitude: 0.1,
            phi_tol: DEFAULT_PHI_TOL,
        }
    }
}

/// SplitMix64 finaliser; used to derive independent seeds from a master.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Energy threshold `ε = 1e-9·α²/β·area` for calling an energy negative.
pub fn energy_epsilon(params: CouplingParams, area: f64) -> f64 {
    1e-9 * params.energy_scale() * area
}

struct Sample {
    seed: Option<u64>,
    report: SolveReport,
}

fn run_starts(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    params: CouplingParams,
    starts: usize,
    seed: u64,
    options: &PhaseOptions,
) -> Result<Vec<Sample>, PhaseError> {
    let solver = Minimizer::new(mesh, dec, background, params, options.solver)?;
    let phi_amp = options.phi_amplitude * params.phi_scale();
    let jobs: Vec<Option<u64>> =
        std::iter::once(None).chain((0..starts as u64).map(|s| Some(mix_seed(seed, s)))).collect();
    jobs.into_par_iter()
        .map(|job| {
            let start = match job {
                None => Configuration::normal(mesh),
                Some(s) => {
                    random_configuration_scaled(mesh, s, options.a_amplitude, phi_amp).map_err(MinimizeError::from)?
                }
            };
            let (_, report) = solver.run(&start)?;
            Ok(Sample { seed: job, report })
        })
        .collect()
}

fn summarise(samples: &[Sample], alpha: f64, beta: f64, lambda1_ref: f64, area: f64, phi_tol: f64) -> PhasePoint {
    let params = CouplingParams { alpha, beta };
    let eps = energy_epsilon(params, area);
    // deterministic order: energy, then the normal start first, then seed
    let key = |s: &Sample| (s.report.final_energy, s.seed.map_or(0, |x| x as u128 + 1));
    let by_energy = |a: &&Sample, b: &&Sample| {
        let (ea, sa) = key(a);
        let (eb, sb) = key(b);
        ea.total_cmp(&eb).then(sa.cmp(&sb))
    };
    let converged: Vec<&Sample> =
        samples.iter().filter(|s| s.report.classification != Classification::Unconverged).collect();
    let best_any = samples.iter().min_by(by_energy).expect("at least the normal start");
    let best_conv = converged.iter().copied().min_by(by_energy);
    let scale = params.phi_scale();
    let negative_energy_found =
        samples.iter().any(|s| s.report.final_energy < -eps && s.report.phi_max > phi_tol * scale);

    let mut flag = None;
    let stalled = samples.iter().filter(|s| s.report.line_search_stalled).count();
    let unconverged = samples.len() - converged.len();
    if unconverged > 0 {
        flag = Some(format!("{unconverged} unconverged start(s)"));
    }
    if stalled > 0 {
        flag = Some(format!("{}{stalled} stalled line search(es)", flag.map_or(String::new(), |f| f + "; ")));
    }

    let (classification, chosen) = match best_conv {
        None => (Classification::Unconverged, best_any),
        Some(b) if best_any.report.final_energy < b.report.final_energy - eps => {
            (Classification::Unconverged, best_any)
        }
        Some(b) => {
            let irreducible = b.report.final_energy < -eps && b.report.phi_max > phi_tol * scale;
            let class = if irreducible { Classification::Irreducible } else { Classification::Reducible };
            (class, b)
        }
    };
    PhasePoint {
        alpha,
        beta,
        lambda1_ref,
        classification,
        min_energy: chosen.report.final_energy,
        phi_max: chosen.report.phi_max,
        starts_used: samples.len(),
        converged_starts: converged.len(),
        theory: TheoryRegion::of(alpha, beta, lambda1_ref),
        negative_energy_found,
        flag,
        irreducible_bounds: converged
            .iter()
            .filter(|s| s.report.classification == Classification::Irreducible)
            .map(|s| s.report.bound_report)
            .collect(),
    }
}

fn resolve_lambda1(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    options: &PhaseOptions,
) -> Result<f64, PhaseError> {
    match options.lambda1 {
        Some(l) => Ok(l),
        None => Ok(lambda1(mesh, dec, background, &options.spectral)?.lambda1),
    }
}

/// Classify one coupling pair from the normal start plus `starts` random
/// starts seeded from `seed`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_point(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    params: CouplingParams,
    starts: usize,
    seed: u64,
    lambda1_ref: f64,
    options: &PhaseOptions,
) -> Result<PhasePoint, PhaseError> {
    let samples = run_starts(mesh, dec, background, params, starts, seed, options)?;
    Ok(summarise(&samples, params.alpha, params.beta, lambda1_ref, mesh.total_area(), options.phi_tol))
}

fn error_point(alpha: f64, beta: f64, lambda1_ref: f64, starts: usize, err: &PhaseError) -> PhasePoint {
    PhasePoint {
        alpha,
        beta,
        lambda1_ref,
        classification: Classification::Unconverged,
        min_energy: f64::NAN,
        phi_max: f64::NAN,
        starts_used: starts + 1,
        converged_starts: 0,
        theory: TheoryRegion::of(alpha, beta, lambda1_ref),
        negative_energy_found: false,
        flag: Some(err.to_string()),
        irreducible_bounds: Vec::new(),
    }
}

/// Every `(α, β)` of the grid, ordered by `β` then `α`. Failures at single
/// points are flagged in place rather than aborting the sweep.
#[allow(clippy::too_many_arguments)]
pub fn sweep_phase_diagram(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    alpha_grid: &[f64],
    beta_grid: &[f64],
    starts_per_point: usize,
    seed: u64,
    options: &PhaseOptions,
) -> Result<Vec<PhasePoint>, PhaseError> {
    if alpha_grid.is_empty() || beta_grid.is_empty() {
        return Err(PhaseError::InvalidArgument("alpha and beta grids must be non-empty".into()));
    }
    if starts_per_point == 0 {
        return Err(PhaseError::InvalidArgument("starts_per_point must be at least 1".into()));
    }
    let mut grid = Vec::with_capacity(alpha_grid.len() * beta_grid.len());
    for &beta in beta_grid {
        for &alpha in alpha_grid {
            CouplingParams::new(alpha, beta).map_err(|e| PhaseError::InvalidArgument(e.to_string()))?;
            grid.push((alpha, beta));
        }
    }
    grid.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.total_cmp(&y.0)));
    let lambda1_ref = resolve_lambda1(mesh, dec, background, options)?;

    let points = grid
        .par_iter()
        .enumerate()
        .map(|(index, &(alpha, beta))| {
            let params = CouplingParams { alpha, beta };
            let point_seed = mix_seed(seed, index as u64);
            evaluate_point(mesh, dec, background, params, starts_per_point, point_seed, lambda1_ref, options)
                .unwrap_or_else(|e| error_point(alpha, beta, lambda1_ref, starts_per_point, &e))
        })
        .collect();
    Ok(points)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundarySearch {
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub points: Vec<PhasePoint>,
}

/// Bisection in `α` at fixed `β`. A point counts as irreducible when some
/// start reaches negative energy with non-trivial `φ`; that certificate does
/// not depend on the descent having converged.
#[allow(clippy::too_many_arguments)]
pub fn bisect_phase_boundary(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    beta: f64,
    alpha_bracket: (f64, f64),
    tol_alpha: f64,
    starts: usize,
    seed: u64,
    options: &PhaseOptions,
) -> Result<BoundarySearch, PhaseError> {
    let (mut lo, mut hi) = alpha_bracket;
    if !(lo > 0.0 && hi > lo && tol_alpha > 0.0) {
        return Err(PhaseError::InvalidArgument("need 0 < alpha_lo < alpha_hi and tol_alpha > 0".into()));
    }
    let lambda1_ref = resolve_lambda1(mesh, dec, background, options)?;
    let mut points = Vec::new();
    let probe = |alpha: f64, step: u64, points: &mut Vec<PhasePoint>| -> Result<bool, PhaseError> {
        let params = CouplingParams::new(alpha, beta).map_err(|e| PhaseError::InvalidArgument(e.to_string()))?;
        let p = evaluate_point(mesh, dec, background, params, starts, mix_seed(seed, step), lambda1_ref, options)?;
        let exists = p.negative_energy_found;
        points.push(p);
        Ok(exists)
    };
    let lo_exists = probe(lo, 0, &mut points)?;
    let hi_exists = probe(hi, 1, &mut points)?;
    if lo_exists == hi_exists {
        let class = if lo_exists { Classification::Irreducible } else { Classification::Reducible };
        return Err(PhaseError::SameClassification { lower: lo, upper: hi, class });
    }
    let mut step = 2;
    while hi - lo > tol_alpha {
        let mid = 0.5 * (lo + hi);
        if probe(mid, step, &mut points)? == hi_exists {
            hi = mid;
        } else {
            lo = mid;
        }
        step += 1;
    }
    Ok(BoundarySearch { alpha: 0.5 * (lo + hi), lower: lo, upper: hi, points })
}

#[allow(clippy::too_many_arguments)]
pub fn locate_phase_boundary(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    beta: f64,
    alpha_bracket: (f64, f64),
    tol_alpha: f64,
    starts: usize,
    seed: u64,
    options: &PhaseOptions,
) -> Result<f64, PhaseError> {
    Ok(bisect_phase_boundary(mesh, dec, background, beta, alpha_bracket, tol_alpha, starts, seed, options)?.alpha)
}

/// Single-linkage clusters of `values`: `(mean, size, spread)` per cluster
/// in increasing order. Independent of the input order.
pub fn cluster_energies(values: &[f64], tolerance: f64) -> Vec<(f64, usize, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > tolerance {
            let members = &sorted[start..i];
            if !members.is_empty() {
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                clusters.push((mean, members.len(), members[members.len() - 1] - members[0]));
            }
            start = i;
        }
    }
    clusters
}

/// Multi-start sample of critical values: the normal start plus `n_starts`
/// random starts, converged energies clustered by single linkage.
#[allow(clippy::too_many_arguments)]
pub fn estimate_critical_values(
    mesh: &SurfaceMesh,
    dec: &DecOperators,
    background: &BackgroundField,
    params: CouplingParams,
    n_starts: usize,
    seed: u64,
    cluster_tolerance: f64,
    options: &PhaseOptions,
) -> Result<CriticalValueReport, PhaseError> {
    if n_starts == 0 {
        return Err(PhaseError::InvalidArgument("n_starts must be at least 1".into()));
    }
    if !(cluster_tolerance > 0.0) {
        return Err(PhaseError::InvalidArgument("cluster_tolerance must be positive".into()));
    }
    let samples = run_starts(mesh, dec, background, params, n_starts, seed, options)?;
    let energies: Vec<f64> = samples
        .iter()
        .filter(|s| s.report.classification != Classification::Unconverged)
        .map(|s| s.report.final_energy)
        .collect();
    let clusters = cluster_energies(&energies, cluster_tolerance);
    Ok(CriticalValueReport {
        contains_zero: clusters.iter().any(|c| c.0.abs() <= cluster_tolerance),
        energies: clusters.iter().map(|c| c.0).collect(),
        cluster_sizes: clusters.iter().map(|c| c.1).collect(),
        cluster_spreads: clusters.iter().map(|c| c.2).collect(),
        cluster_tolerance,
        samples: samples.len(),
        unconverged: samples.len() - energies.len(),
    })
}
