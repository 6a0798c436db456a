//! Run configuration. The file is TOML: top-level `seed`, then one table
//! per concern. Only `[mesh]` is mandatory.
//!
//! ```toml
//! seed = 7
//!
//! [mesh]
//! kind = "torus"          # torus | rectangle | icosphere | off
//! nx = 32
//! ny = 32
//!
//! [background]
//! degree = 1              # closed meshes; use b0 on meshes with boundary
//!
//! [params]
//! alpha = 2.0
//! beta = 1.0
//! alpha_unit = "lambda1"  # alpha is a multiple of λ₁
//! ```
//!
//! Further tables: `[solver]`, `[spectral]`, `[start]`, `[sweep]`,
//! `[critical_values]`, `[output]`. See the README for every key.

use std::path::{Path, PathBuf};

use glfield::phase::PhaseOptions;
use glfield::{
    build_dec, build_flat_torus, build_icosphere, build_rectangle, load_off, make_constant_background,
    make_uniform_background, BackgroundField, DecOperators, SearchOptions, SolverOptions, SurfaceMesh,
};
use serde::Deserialize;

use crate::CliError;

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshSpec {
    Torus {
        nx: usize,
        ny: usize,
        #[serde(default = "one")]
        lx: f64,
        #[serde(default = "one")]
        ly: f64,
    },
    Rectangle {
        nx: usize,
        ny: usize,
        #[serde(default = "one")]
        lx: f64,
        #[serde(default = "one")]
        ly: f64,
    },
    Icosphere {
        subdivisions: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Off {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSpec {
    /// Bundle degree on a closed mesh.
    pub degree: Option<i64>,
    /// Flux density on a mesh with boundary.
    pub b0: Option<f64>,
    /// Only `"constant"` is supported.
    pub profile: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaUnit {
    #[default]
    Absolute,
    Lambda1,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub alpha_unit: AlphaUnit,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub grad_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub coulomb_every: Option<usize>,
    pub restart_every: Option<usize>,
    pub precondition: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSpec {
    pub grid_per_generator: Option<usize>,
    pub refine_passes: Option<usize>,
    pub angle_tol: Option<f64>,
    pub tol: Option<f64>,
    pub search_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub block_size: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartKind {
    #[default]
    Random,
    Normal,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    #[serde(default)]
    pub kind: StartKind,
    /// Radius of random `φ` values in units of `√(α/β)`.
    pub phi_amplitude: Option<f64>,
    /// Half-width of random `a` values.
    pub a_amplitude: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub alpha_unit: AlphaUnit,
    #[serde(default = "default_starts")]
    pub starts_per_point: usize,
}

fn default_starts() -> usize {
    8
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalSpec {
    #[serde(default = "default_critical_starts")]
    pub n_starts: usize,
    /// Absolute cluster tolerance; defaults to `1e-5·α²/β·area`.
    pub tolerance: Option<f64>,
}

fn default_critical_starts() -> usize {
    20
}

impl Default for CriticalSpec {
    fn default() -> Self {
        CriticalSpec { n_starts: default_critical_starts(), tolerance: None }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    /// Where `minimize` writes the final configuration.
    pub dump: Option<PathBuf>,
    /// Append a `flag` column to sweep CSV output.
    #[serde(default)]
    pub flag_column: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub background: BackgroundSpec,
    pub params: Option<ParamsSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub spectral: SpectralSpec,
    #[serde(default)]
    pub start: StartSpec,
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub critical_values: CriticalSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Mesh, operators and background built from a configuration.
pub struct Problem {
    pub mesh: SurfaceMesh,
    pub dec: DecOperators,
    pub background: BackgroundField,
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Input(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match &self.mesh {
            MeshSpec::Torus { lx, ly, .. } | MeshSpec::Rectangle { lx, ly, .. } => {
                positive("mesh.lx", *lx)?;
                positive("mesh.ly", *ly)?;
            }
            MeshSpec::Icosphere { radius, .. } => positive("mesh.radius", *radius)?,
            MeshSpec::Off { .. } => {}
        }
        let bg = &self.background;
        if bg.degree.is_some() && bg.b0.is_some() {
            return Err(CliError::Input("background: give either degree or b0, not both".into()));
        }
        if let Some(profile) = &bg.profile {
            if profile != "constant" {
                return Err(CliError::Input(format!("background.profile {profile:?} is not supported")));
            }
        }
        if let Some(p) = &self.params {
            positive("params.alpha", p.alpha)?;
            positive("params.beta", p.beta)?;
        }
        if let Some(s) = &self.sweep {
            if s.alpha.is_empty() || s.beta.is_empty() {
                return Err(CliError::Input("sweep grids must be non-empty".into()));
            }
            for &a in &s.alpha {
                positive("sweep.alpha", a)?;
            }
            for &b in &s.beta {
                positive("sweep.beta", b)?;
            }
            if s.starts_per_point == 0 {
                return Err(CliError::Input("sweep.starts_per_point must be at least 1".into()));
            }
        }
        if self.critical_values.n_starts == 0 {
            return Err(CliError::Input("critical_values.n_starts must be at least 1".into()));
        }
        if let Some(t) = self.critical_values.tolerance {
            positive("critical_values.tolerance", t)?;
        }
        for (name, v) in
            [("start.phi_amplitude", self.start.phi_amplitude), ("start.a_amplitude", self.start.a_amplitude)]
        {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        self.solver_options().validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<SurfaceMesh, CliError> {
        let mesh = match &self.mesh {
            MeshSpec::Torus { nx, ny, lx, ly } => build_flat_torus(*nx, *ny, *lx, *ly),
            MeshSpec::Rectangle { nx, ny, lx, ly } => build_rectangle(*nx, *ny, *lx, *ly),
            MeshSpec::Icosphere { subdivisions, radius } => build_icosphere(*subdivisions, *radius),
            MeshSpec::Off { path } => load_off(self.base_dir.join(path)),
        };
        mesh.map_err(|e| CliError::Input(format!("invalid mesh: {e}")))
    }

    pub fn build_problem(&self) -> Result<Problem, CliError> {
        let mesh = self.build_mesh()?;
        let dec = build_dec(&mesh);
        let bg = &self.background;
        let background = match (mesh.is_closed(), bg.degree, bg.b0) {
            (true, None, None) => make_constant_background(&mesh, 0),
            (true, Some(d), None) => make_constant_background(&mesh, d),
            (false, None, None) => make_uniform_background(&mesh, 0.0),
            (false, None, Some(b0)) => make_uniform_background(&mesh, b0),
            (true, _, Some(_)) => return Err(CliError::Input("background.b0 needs a mesh with boundary".into())),
            (false, Some(_), _) => return Err(CliError::Input("background.degree needs a closed mesh".into())),
        }
        .map_err(|e| CliError::Input(format!("invalid background: {e}")))?;
        Ok(Problem { mesh, dec, background })
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.solver;
        let d = SolverOptions::default();
        SolverOptions {
            grad_tol: s.grad_tol.or(d.grad_tol),
            max_iters: s.max_iters.unwrap_or(d.max_iters),
            coulomb_every: s.coulomb_every.unwrap_or(d.coulomb_every),
            restart_every: s.restart_every.unwrap_or(d.restart_every),
            precondition: s.precondition.unwrap_or(d.precondition),
            ..d
        }
    }

    pub fn search_options(&self) -> SearchOptions {
        let s = &self.spectral;
        let d = SearchOptions::default();
        SearchOptions {
            grid_per_generator: s.grid_per_generator.unwrap_or(d.grid_per_generator),
            refine_passes: s.refine_passes.unwrap_or(d.refine_passes),
            angle_tol: s.angle_tol.unwrap_or(d.angle_tol),
            tol: s.tol.unwrap_or(d.tol),
            search_tol: s.search_tol.unwrap_or(d.search_tol),
            max_iter: s.max_iter.unwrap_or(d.max_iter),
            block_size: s.block_size.unwrap_or(d.block_size),
        }
    }

    pub fn phase_options(&self, lambda1: Option<f64>) -> PhaseOptions {
        let d = PhaseOptions::default();
        PhaseOptions {
            solver: self.solver_options(),
            spectral: self.search_options(),
            lambda1,
            phi_amplitude: self.start.phi_amplitude.unwrap_or(d.phi_amplitude),
            a_amplitude: self.start.a_amplitude.unwrap_or(d.a_amplitude),
            ..d
        }
    }

    pub fn params(&self) -> Result<&ParamsSpec, CliError> {
        self.params.as_ref().ok_or_else(|| CliError::Input("missing [params] table".into()))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }
}
