//! One function per subcommand. Each returns the text to emit and the
//! process status; side files (configuration dumps) are written here.

use glfield::field::random_configuration_scaled;
use glfield::spectral::reference_lambda1;
use glfield::{
    estimate_critical_values, lambda1, minimize_energy, sweep_phase_diagram, Classification, Configuration,
    CouplingParams, CriticalValueReport, SolveReport, SpectralError, SpectralResult,
};
use serde::Serialize;

use crate::config::{AlphaUnit, Problem, RunConfig, StartKind};
use crate::format::{csv_number, to_json};
use crate::CliError;

/// Process status of a finished command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Unconverged,
    SpectralFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::SpectralFailure => 3,
            Status::Unconverged => 4,
        }
    }
}

pub struct Output {
    pub body: String,
    pub status: Status,
}

impl Output {
    fn ok(body: String) -> Self {
        Output { body, status: Status::Ok }
    }
}

#[derive(Serialize)]
struct MeshInfo {
    vertices: usize,
    edges: usize,
    faces: usize,
    euler_characteristic: i64,
    first_betti_number: usize,
    closed: bool,
    total_area: f64,
    boundary_edges: usize,
    boundary_vertices: usize,
    min_star1: f64,
    max_star1: f64,
    negative_star1: usize,
    longest_edge: f64,
    mesh_hash: String,
}

pub fn mesh_info(config: &RunConfig) -> Result<Output, CliError> {
    let mesh = config.build_mesh()?;
    let dec = glfield::build_dec(&mesh);
    let info = MeshInfo {
        vertices: mesh.num_vertices(),
        edges: mesh.num_edges(),
        faces: mesh.num_faces(),
        euler_characteristic: mesh.euler_characteristic(),
        first_betti_number: mesh.first_betti_number(),
        closed: mesh.is_closed(),
        total_area: mesh.total_area(),
        boundary_edges: mesh.num_boundary_edges(),
        boundary_vertices: mesh.num_boundary_vertices(),
        min_star1: dec.min_star1(),
        max_star1: dec.max_star1(),
        negative_star1: dec.negative_weight_edges().len(),
        longest_edge: mesh.longest_edge(),
        mesh_hash: mesh.content_hash(),
    };
    Ok(Output::ok(to_json(&info)))
}

#[derive(Serialize)]
struct Lambda1Report<'a> {
    #[serde(flatten)]
    result: &'a SpectralResult,
    /// `2π|d|/area` on closed meshes.
    reference: Option<f64>,
    total_area: f64,
    total_flux: f64,
    mesh_hash: String,
}

fn spectral_error(err: SpectralError) -> CliError {
    match err {
        SpectralError::InvalidOption(msg) => CliError::Input(msg.to_string()),
        other => CliError::Spectral(other.to_string()),
    }
}

pub fn lambda1_cmd(config: &RunConfig) -> Result<Output, CliError> {
    let p = config.build_problem()?;
    let (result, status) = match lambda1(&p.mesh, &p.dec, &p.background, &config.search_options()) {
        Ok(r) => (r, Status::Ok),
        // still worth reporting what the solver reached
        Err(SpectralError::NotConverged(r)) => (*r, Status::SpectralFailure),
        Err(e) => return Err(spectral_error(e)),
    };
    let report = Lambda1Report {
        result: &result,
        reference: reference_lambda1(&p.mesh, &p.background),
        total_area: p.mesh.total_area(),
        total_flux: p.background.total_flux(),
        mesh_hash: p.mesh.content_hash(),
    };
    Ok(Output { body: to_json(&report), status })
}

fn solve_lambda1(config: &RunConfig, p: &Problem) -> Result<f64, CliError> {
    lambda1(&p.mesh, &p.dec, &p.background, &config.search_options()).map(|r| r.lambda1).map_err(spectral_error)
}

/// Coupling pair with `alpha` made absolute; λ₁ is returned when it had to
/// be computed.
fn coupling(config: &RunConfig, p: &Problem) -> Result<(CouplingParams, Option<f64>), CliError> {
    let spec = config.params()?;
    let l1 = match spec.alpha_unit {
        AlphaUnit::Absolute => None,
        AlphaUnit::Lambda1 => Some(solve_lambda1(config, p)?),
    };
    let alpha = spec.alpha * l1.unwrap_or(1.0);
    let params = CouplingParams::new(alpha, spec.beta).map_err(|e| CliError::Input(e.to_string()))?;
    Ok((params, l1))
}

#[derive(Serialize)]
struct MinimizeOutput<'a> {
    alpha: f64,
    beta: f64,
    seed: u64,
    lambda1: Option<f64>,
    total_area: f64,
    mesh_hash: String,
    #[serde(flatten)]
    report: &'a SolveReport,
}

#[derive(Serialize)]
struct Dump {
    a: Vec<f64>,
    phi_re: Vec<f64>,
    phi_im: Vec<f64>,
    mesh_hash: String,
}

pub fn minimize_cmd(config: &RunConfig, seed: u64) -> Result<Output, CliError> {
    let p = config.build_problem()?;
    let (params, l1) = coupling(config, &p)?;
    let start = match config.start.kind {
        StartKind::Normal => Configuration::normal(&p.mesh),
        StartKind::Random => {
            let phi_amp = config.start.phi_amplitude.unwrap_or(1.0) * params.phi_scale();
            random_configuration_scaled(&p.mesh, seed, config.start.a_amplitude.unwrap_or(0.1), phi_amp)
                .map_err(|e| CliError::Input(e.to_string()))?
        }
    };
    let (x, report) = minimize_energy(&p.mesh, &p.dec, &p.background, &start, params, &config.solver_options())
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let mesh_hash = p.mesh.content_hash();
    if let Some(path) = &config.output.dump {
        let dump = Dump {
            a: x.a().to_vec(),
            phi_re: x.phi().iter().map(|z| z.re).collect(),
            phi_im: x.phi().iter().map(|z| z.im).collect(),
            mesh_hash: mesh_hash.clone(),
        };
        crate::write_file(&config.resolve(path), &to_json(&dump))?;
    }
    let out = MinimizeOutput {
        alpha: params.alpha,
        beta: params.beta,
        seed,
        lambda1: l1,
        total_area: p.mesh.total_area(),
        mesh_hash,
        report: &report,
    };
    let status = if report.classification == Classification::Unconverged { Status::Unconverged } else { Status::Ok };
    Ok(Output { body: to_json(&out), status })
}

pub const SWEEP_HEADER: &str = "alpha,beta,lambda1,classification,min_energy,phi_max,starts_used,converged_starts";

pub fn sweep_cmd(config: &RunConfig, seed: u64) -> Result<Output, CliError> {
    let spec = config.sweep.as_ref().ok_or_else(|| CliError::Input("missing [sweep] table".into()))?;
    let p = config.build_problem()?;
    let l1 = solve_lambda1(config, &p)?;
    let unit = if spec.alpha_unit == AlphaUnit::Lambda1 { l1 } else { 1.0 };
    let alphas: Vec<f64> = spec.alpha.iter().map(|a| a * unit).collect();
    let points = sweep_phase_diagram(
        &p.mesh,
        &p.dec,
        &p.background,
        &alphas,
        &spec.beta,
        spec.starts_per_point,
        seed,
        &config.phase_options(Some(l1)),
    )
    .map_err(|e| CliError::Input(e.to_string()))?;

    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let mut header: Vec<&str> = SWEEP_HEADER.split(',').collect();
    if config.output.flag_column {
        header.push("flag");
    }
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    writer.write_record(&header).map_err(csv_err)?;
    for pt in &points {
        if let Some(flag) = &pt.flag {
            log::warn!("alpha={} beta={}: {flag}", pt.alpha, pt.beta);
        }
        let mut row = vec![
            csv_number(pt.alpha),
            csv_number(pt.beta),
            csv_number(pt.lambda1_ref),
            pt.classification.as_str().to_string(),
            csv_number(pt.min_energy),
            csv_number(pt.phi_max),
            pt.starts_used.to_string(),
            pt.converged_starts.to_string(),
        ];
        if config.output.flag_column {
            row.push(pt.flag.clone().unwrap_or_default());
        }
        writer.write_record(&row).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Output::ok(String::from_utf8(bytes).expect("CSV output is UTF-8")))
}

#[derive(Serialize)]
struct CriticalOutput<'a> {
    alpha: f64,
    beta: f64,
    seed: u64,
    total_area: f64,
    #[serde(flatten)]
    report: &'a CriticalValueReport,
}

pub fn critical_values_cmd(config: &RunConfig, seed: u64) -> Result<Output, CliError> {
    let p = config.build_problem()?;
    let (params, l1) = coupling(config, &p)?;
    let area = p.mesh.total_area();
    let spec = &config.critical_values;
    let tol = spec.tolerance.unwrap_or(1e-5 * params.energy_scale() * area);
    let report = estimate_critical_values(
        &p.mesh,
        &p.dec,
        &p.background,
        params,
        spec.n_starts,
        seed,
        tol,
        &config.phase_options(l1),
    )
    .map_err(|e| CliError::Solver(e.to_string()))?;
    let status = if report.unconverged >= spec.n_starts { Status::Unconverged } else { Status::Ok };
    let out = CriticalOutput { alpha: params.alpha, beta: params.beta, seed, total_area: area, report: &report };
    Ok(Output { body: to_json(&out), status })
}
