mod common;

use std::f64::consts::PI;

use common::{rel, ReferenceGeometry};
use glfield::field::random_configuration_scaled;
use glfield::minimize::Minimizer;
use glfield::{
    apply_gauge, build_dec, build_flat_torus, build_icosphere, lambda1, make_constant_background, minimize_energy,
    residual_norm, verify_bounds, Classification, Configuration, CouplingParams, GaugeTransform, SearchOptions,
    SolverOptions,
};

#[test]
fn normal_start_returns_normal_state() {
    let mesh = build_flat_torus(16, 16, 1.0, 1.0).unwrap();
    let dec = build_dec(&mesh);
    let bg = make_constant_background(&mesh, 1).unwrap();
    let params = CouplingParams::new(4.0 * PI, 1.0).unwrap();
    let normal = Configuration::normal(&mesh);
    let (x, r) = minimize_energy(&mesh, &dec, &bg, &normal, params, &SolverOptions::default()).unwrap();
    assert!(r.iterations <= 1);
    assert_eq!(r.final_energy, 0.0);
    assert_eq!(x, normal);
    assert_eq!(r.classification, Classification::Reducible);
}

#[test]
fn strong_coupling_minimizer_is_irreducible_and_bounded() {
    let mesh = build_flat_torus(32, 32, 1.0, 1.0).unwrap();
    let dec = build_dec(&mesh);
    let bg = make_constant_background(&mesh, 1).unwrap();
    let params = CouplingParams::new(2.0 * 2.0 * PI, 1.0).unwrap();
    let start = random_configuration_scaled(&mesh, 4, 0.1, params.phi_scale()).unwrap();
    let (x, r) = minimize_energy(&mesh, &dec, &bg, &start, params, &SolverOptions::default()).unwrap();
    assert_eq!(r.classification, Classification::Irreducible);
    assert!(r.final_energy < 0.0);
    assert!(r.final_energy >= params.lower_bound(mesh.total_area()));
    // independent certificate of criticality and of the reported energy
    let res = residual_norm(&mesh, &dec, &bg, &x, params).unwrap();
    assert!(res <= r.grad_tol);
    let geo = ReferenceGeometry::new(&mesh);
    assert!(rel(geo.energy_of(&mesh, &bg, &x, params.alpha, params.beta), r.final_energy) < 1e-10);
    let h = mesh.longest_edge();
    let bounds = verify_bounds(&mesh, &dec, &bg, &x, params, None);
    assert!(bounds.phi_gap <= 5.0 * h, "{bounds:?}");
    assert!(bounds.curvature_gap.unwrap() <= 5.0 * h, "{bounds:?}");
    assert!(bounds.holds());
}

#[test]
fn trivial_sector_in_every_start() {
    let mesh = build_flat_torus(16, 16, 1.0, 1.0).unwrap();
    let dec = build_dec(&mesh);
    let bg = make_constant_background(&mesh, 0).unwrap();
    let params = CouplingParams::new(1.0, 1.0).unwrap();
    let solver = Minimizer::new(&mesh, &dec, &bg, params, SolverOptions::default()).unwrap();
    for seed in 0..5 {
        let start = random_configuration_scaled(&mesh, seed, 0.2, 1.0).unwrap();
        let (_, r) = solver.run(&start).unwrap();
        assert!((r.final_energy + 0.25).abs() < 1e-6, "seed {seed}: {}", r.final_energy);
    }
}

#[test]
fn gauge_equivalent_starts_reach_equal_energies() {
    let mesh = build_flat_torus(16, 16, 1.0, 1.0).unwrap();
    let dec = build_dec(&mesh);
    let bg = make_constant_background(&mesh, 2).unwrap();
    let params = CouplingParams::new(40.0, 1.0).unwrap();
    let solver = Minimizer::new(&mesh, &dec, &bg, params, SolverOptions::default()).unwrap();
    let start = random_configuration_scaled(&mesh, 21, 0.1, params.phi_scale()).unwrap();
    let (_, base) = solver.run(&start).unwrap();
    for seed in 0..3 {
        let moved = apply_gauge(&mesh, &start, &GaugeTransform::random(&mesh, seed, 3.0));
        let (_, other) = solver.run(&moved).unwrap();
        let diff = (other.final_energy - base.final_energy).abs();
        assert!(diff <= 1e-8 * (1.0 + base.final_energy.abs()), "seed {seed}: {diff:e}");
    }
}

#[test]
fn descent_is_monotone_and_deterministic() {
    let mesh = build_icosphere(2, 1.0).unwrap();
    let dec = build_dec(&mesh);
    let bg = make_constant_background(&mesh, 2).unwrap();
    let params = CouplingParams::new(3.0, 0.7).unwrap();
    let options = SolverOptions { record_history: true, ..SolverOptions::default() };
    let start = random_configuration_scaled(&mesh, 2, 0.3, 2.0).unwrap();
    let (x1, r1) = minimize_energy(&mesh, &dec, &bg, &start, params, &options).unwrap();
    let (x2, r2) = minimize_energy(&mesh, &dec, &bg, &start, params, &options).unwrap();
    assert_eq!(x1, x2);
    assert_eq!(r1, r2);
    for w in r1.history.windows(2) {
        assert!(w[1] <= w[0] + 1e-13 * w[0].abs().max(1.0));
    }
    assert_ne!(r1.classification, Classification::Unconverged);
}

#[test]
fn below_threshold_best_start_is_reducible() {
    let mesh = build_flat_torus(16, 16, 1.0, 1.0).unwrap();
    let dec = build_dec(&mesh);
    let bg = make_constant_background(&mesh, 1).unwrap();
    let l1 = lambda1(&mesh, &dec, &bg, &SearchOptions::default()).unwrap().lambda1;
    let params = CouplingParams::new(0.5 * l1, 1.0).unwrap();
    let solver = Minimizer::new(&mesh, &dec, &bg, params, SolverOptions::default()).unwrap();
    let best = (0..4)
        .map(|s| solver.run(&random_configuration_scaled(&mesh, s, 0.1, params.phi_scale()).unwrap()).unwrap().1)
        .min_by(|a, b| a.final_energy.total_cmp(&b.final_energy))
        .unwrap();
    assert_eq!(best.classification, Classification::Reducible);
    assert!(best.final_energy.abs() < 1e-9);
}

#[test]
fn iteration_cap_is_reported_as_unconverged() {
    let mesh = build_flat_torus(16, 16, 1.0, 1.0).unwrap();
    let dec = build_dec(&mesh);
    let bg = make_constant_background(&mesh, 1).unwrap();
    let params = CouplingParams::new(30.0, 1.0).unwrap();
    let options = SolverOptions { max_iters: 2, ..SolverOptions::default() };
    let start = random_configuration_scaled(&mesh, 1, 0.1, params.phi_scale()).unwrap();
    let (_, r) = minimize_energy(&mesh, &dec, &bg, &start, params, &options).unwrap();
    assert_eq!(r.classification, Classification::Unconverged);
    assert!(r.residual > r.grad_tol);
    assert_eq!(r.iterations, 2);
}
