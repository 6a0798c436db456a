//! Discrete Ginzburg–Landau fields on triangulated compact surfaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: oriented triangle meshes, builders, OFF I/O and the discrete
//!   exterior calculus operators.
//! - [`field`]: background connection with prescribed flux, the dynamic
//!   gauge potential and order parameter, gauge action, Coulomb projection.
//! - [`energy`]: free energy, its gradient, residuals and a priori bounds.
//! - [`spectral`]: lowest eigenvalue of the magnetic Laplacian, minimised
//!   over flat holonomies.
//! - [`minimize`]: nonlinear conjugate gradient descent to critical points.
//! - [`phase`]: phase-diagram sweeps, boundary location, critical values.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod field;
pub mod mesh;
pub mod minimize;
pub mod phase;
pub mod sparse;
pub mod spectral;

pub use energy::{
    evaluate_energy, evaluate_gradient, residual_norm, verify_bounds, BoundReport, CouplingParams, EnergyReport,
    GlFunctional, Tangent,
};
pub use field::{
    apply_gauge, coulomb_project, covariant_difference, curvature_density, make_constant_background,
    make_uniform_background, random_configuration, BackgroundField, Configuration, FieldError, GaugeTransform,
};
pub use mesh::{
    build_dec, build_flat_torus, build_icosphere, build_rectangle, load_off, save_off, DecOperators, MeshError,
    SurfaceMesh,
};
pub use minimize::{classify_solution, minimize_energy, Classification, SolveReport, SolverOptions};
pub use phase::{
    estimate_critical_values, locate_phase_boundary, sweep_phase_diagram, CriticalValueReport, PhasePoint,
};
pub use spectral::{lambda1, smallest_eigenpair, SearchOptions, SpectralError, SpectralResult};

pub use num_complex::Complex64;
