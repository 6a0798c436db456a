//! Shared fixtures for the benchmarks.

use glfield::field::random_configuration_scaled;
use glfield::{
    build_dec, build_flat_torus, make_constant_background, BackgroundField, Configuration, CouplingParams,
    DecOperators, SurfaceMesh,
};

pub struct Fixture {
    pub mesh: SurfaceMesh,
    pub dec: DecOperators,
    pub background: BackgroundField,
}

/// Unit torus with `n × n` vertices carrying one flux quantum.
pub fn torus(n: usize) -> Fixture {
    let mesh = build_flat_torus(n, n, 1.0, 1.0).expect("valid torus");
    let dec = build_dec(&mesh);
    let background = make_constant_background(&mesh, 1).expect("closed mesh");
    Fixture { mesh, dec, background }
}

pub fn random_start(fixture: &Fixture, params: CouplingParams, seed: u64) -> Configuration {
    random_configuration_scaled(&fixture.mesh, seed, 0.1, params.phi_scale()).expect("positive amplitudes")
}
