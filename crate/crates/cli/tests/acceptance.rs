//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use glfield::field::random_configuration_scaled;
use glfield::phase::{bisect_phase_boundary, PhaseOptions, PhasePoint};
use glfield::{
    apply_gauge, build_dec, build_flat_torus, build_icosphere, build_rectangle, curvature_density,
    estimate_critical_values, evaluate_energy, evaluate_gradient, lambda1, make_constant_background,
    make_uniform_background, minimize_energy, sweep_phase_diagram, BackgroundField, Classification, Complex64,
    CouplingParams, DecOperators, GaugeTransform, GlFunctional, SearchOptions, SolverOptions, SurfaceMesh, Tangent,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Problem {
    mesh: SurfaceMesh,
    dec: DecOperators,
    bg: BackgroundField,
}

fn torus(n: usize, degree: i64) -> Problem {
    let mesh = build_flat_torus(n, n, 1.0, 1.0).unwrap();
    let dec = build_dec(&mesh);
    let bg = make_constant_background(&mesh, degree).unwrap();
    Problem { mesh, dec, bg }
}

fn sphere(subdivisions: usize, degree: i64) -> Problem {
    let mesh = build_icosphere(subdivisions, 1.0).unwrap();
    let dec = build_dec(&mesh);
    let bg = make_constant_background(&mesh, degree).unwrap();
    Problem { mesh, dec, bg }
}

fn lambda(p: &Problem) -> f64 {
    lambda1(&p.mesh, &p.dec, &p.bg, &SearchOptions::default()).unwrap().lambda1
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn lambda_chern_weil() -> Verdict {
    let t = lambda(&torus(64, 1));
    let s = lambda(&sphere(4, 1));
    let rt = t / (2.0 * PI);
    let rs = s / 0.5;
    let pass = (0.99..=1.01).contains(&rt) && (0.98..=1.02).contains(&rs);
    verdict(pass, format!("torus64 lambda1/2pi = {rt:.6}, icosphere4 lambda1/0.5 = {rs:.6}"))
}

fn trivial_sector() -> Verdict {
    let p = torus(32, 0);
    let params = CouplingParams::new(1.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let start = random_configuration_scaled(&p.mesh, seed, 0.2, 1.0).unwrap();
        let (_, r) = minimize_energy(&p.mesh, &p.dec, &p.bg, &start, params, &SolverOptions::default()).unwrap();
        worst = worst.max((r.final_energy + 0.25).abs());
    }
    verdict(worst <= 1e-6, format!("max |E + 0.25| over 5 starts = {worst:.3e}"))
}

/// Irreducible points may not sit below reducible ones at the same β.
fn monotone(points: &[PhasePoint]) -> bool {
    let mut sorted: Vec<&PhasePoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let first_reducible_above =
        |i: usize| sorted[i + 1..].iter().any(|q| q.classification == Classification::Reducible);
    !(0..sorted.len()).any(|i| sorted[i].classification == Classification::Irreducible && first_reducible_above(i))
}

struct Shared {
    l1: f64,
    h: f64,
    generated: Vec<PhasePoint>,
}

fn phase_boundary(shared: &mut Shared) -> Verdict {
    let p = torus(32, 1);
    let l1 = shared.l1;
    let opts = PhaseOptions { lambda1: Some(l1), ..PhaseOptions::default() };
    let mut details = Vec::new();
    let mut pass = true;
    for (k, beta) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let search = bisect_phase_boundary(
            &p.mesh,
            &p.dec,
            &p.bg,
            beta,
            (0.5 * l1, 2.0 * l1),
            0.01 * l1,
            4,
            100 + k as u64,
            &opts,
        )
        .unwrap();
        let ratio = search.alpha / l1;
        let ok = (ratio - 1.0).abs() <= 0.05 && monotone(&search.points);
        pass &= ok;
        details.push(format!("beta={beta}: alpha*/lambda1 = {ratio:.4}{}", if ok { "" } else { " (bad)" }));
        shared.generated.extend(search.points);
    }
    verdict(pass, format!("lambda1 = {l1:.6}; {}", details.join(", ")))
}

fn non_existence(shared: &mut Shared) -> Verdict {
    let p = torus(32, 1);
    let l1 = shared.l1;
    let opts = PhaseOptions { lambda1: Some(l1), ..PhaseOptions::default() };
    let alphas: Vec<f64> = [0.5, 0.8, 0.95].iter().map(|f| f * l1).collect();
    let points = sweep_phase_diagram(&p.mesh, &p.dec, &p.bg, &alphas, &[1.0], 8, 4242, &opts).unwrap();
    let mut pass = true;
    let mut worst = f64::INFINITY;
    for pt in &points {
        let floor = -1e-7 * pt.alpha * pt.alpha / pt.beta;
        pass &= pt.classification == Classification::Reducible && pt.min_energy >= floor;
        worst = worst.min(pt.min_energy / (pt.alpha * pt.alpha / pt.beta));
    }
    shared.generated.extend(points);
    verdict(pass, format!("3 points Reducible: {pass}; min E/(alpha^2/beta) = {worst:.3e}"))
}

fn solution_bounds(shared: &Shared) -> Verdict {
    let tol = 5.0 * shared.h;
    let mut count = 0;
    let mut worst_phi = f64::NEG_INFINITY;
    let mut worst_curv = f64::NEG_INFINITY;
    let mut pass = true;
    for b in shared.generated.iter().flat_map(|p| &p.irreducible_bounds) {
        count += 1;
        let curv = b.curvature_gap.unwrap_or(f64::INFINITY);
        worst_phi = worst_phi.max(b.phi_gap);
        worst_curv = worst_curv.max(curv);
        pass &= b.phi_gap <= tol && curv <= tol;
    }
    pass &= count > 0;
    verdict(
        pass,
        format!("{count} irreducible minimizers; max phi gap {worst_phi:.3e}, max curvature gap {worst_curv:.3e}, 5h = {tol:.3e}"),
    )
}

fn jittered_rectangle() -> SurfaceMesh {
    let base = build_rectangle(5, 5, 1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let step = 0.2 * 0.3;
    let vertices = base
        .vertices()
        .iter()
        .map(|v| {
            let on_x = v[0] <= 1e-12 || v[0] >= 1.0 - 1e-12;
            let on_y = v[1] <= 1e-12 || v[1] >= 1.0 - 1e-12;
            let dx = if on_x { 0.0 } else { rng.gen_range(-step..step) };
            let dy = if on_y { 0.0 } else { rng.gen_range(-step..step) };
            [v[0] + dx, v[1] + dy, v[2]]
        })
        .collect();
    SurfaceMesh::from_triangles(vertices, base.faces().to_vec()).unwrap()
}

fn families() -> Vec<(&'static str, Problem)> {
    let rect = build_rectangle(5, 4, 1.0, 0.8).unwrap();
    let jitter = jittered_rectangle();
    vec![
        ("torus", {
            let mesh = build_flat_torus(6, 5, 1.0, 1.3).unwrap();
            let dec = build_dec(&mesh);
            let bg = make_constant_background(&mesh, 1).unwrap();
            Problem { mesh, dec, bg }
        }),
        ("icosphere", sphere(1, 2)),
        ("rectangle", Problem { dec: build_dec(&rect), bg: make_uniform_background(&rect, 3.0).unwrap(), mesh: rect }),
        (
            "jittered",
            Problem { dec: build_dec(&jitter), bg: make_uniform_background(&jitter, 5.0).unwrap(), mesh: jitter },
        ),
    ]
}

fn gradient_checks() -> Verdict {
    let params = CouplingParams::new(3.0, 1.2).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for (name, p) in families() {
        let functional = GlFunctional::new(&p.mesh, &p.dec, &p.bg, params);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut worst: f64 = 0.0;
        for trial in 0..20 {
            let cfg = random_configuration_scaled(&p.mesh, 500 + trial, 0.4, 1.2).unwrap();
            let grad = evaluate_gradient(&p.mesh, &p.dec, &p.bg, &cfg, params).unwrap();
            let dir = Tangent {
                a: (0..p.mesh.num_edges()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                phi: (0..p.mesh.num_vertices())
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect(),
            };
            let slope = functional.inner(&grad, &dir);
            let central =
                |h: f64| (functional.energy_along(&cfg, &dir, h) - functional.energy_along(&cfg, &dir, -h)) / (2.0 * h);
            let fd = (4.0 * central(5e-4) - central(1e-3)) / 3.0;
            worst = worst.max((slope - fd).abs() / slope.abs().max(fd.abs()).max(1e-300));
        }
        pass &= worst < 1e-6;
        details.push(format!("{name} {worst:.1e}"));
    }
    verdict(pass, format!("worst relative error per family: {}", details.join(", ")))
}

fn gauge_invariance() -> Verdict {
    let p = torus(12, 1);
    let params = CouplingParams::new(10.0, 0.8).unwrap();
    let cfg = random_configuration_scaled(&p.mesh, 77, 0.5, 2.0).unwrap();
    let energy = evaluate_energy(&p.mesh, &p.dec, &p.bg, &cfg, params).unwrap().total;
    let curvature = curvature_density(&p.mesh, &p.bg, &cfg);
    let opts = SearchOptions::default();
    let l1 = lambda1(&p.mesh, &p.dec, &p.bg, &opts).unwrap().lambda1;
    let (mut de, mut dc, mut dl) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..10 {
        let g = GaugeTransform::random(&p.mesh, 1000 + seed, 4.0);
        let moved = apply_gauge(&p.mesh, &cfg, &g);
        let e = evaluate_energy(&p.mesh, &p.dec, &p.bg, &moved, params).unwrap().total;
        de = de.max((e - energy).abs() / (1.0 + energy.abs()));
        let c = curvature_density(&p.mesh, &p.bg, &moved);
        dc = dc.max(c.iter().zip(&curvature).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        let bg = p.bg.gauge_transformed(&p.mesh, &g);
        let l = lambda1(&p.mesh, &p.dec, &bg, &opts).unwrap().lambda1;
        dl = dl.max((l - l1).abs());
    }
    let pass = de <= 1e-10 && dc <= 1e-12 && dl <= opts.tol;
    verdict(pass, format!("energy {de:.1e} (rel), curvature {dc:.1e}, lambda1 {dl:.1e} (tol {:.0e})", opts.tol))
}

fn critical_values() -> Verdict {
    let p = torus(16, 1);
    let l1 = lambda(&p);
    let area = p.mesh.total_area();
    let opts = PhaseOptions { lambda1: Some(l1), ..PhaseOptions::default() };
    let mut pass = true;
    let mut details = Vec::new();
    for (k, (fa, beta)) in [(1.5, 1.0), (2.0, 1.0), (2.0, 0.7)].into_iter().enumerate() {
        let params = CouplingParams::new(fa * l1, beta).unwrap();
        let spread_cap = 1e-5 * params.energy_scale() * area;
        let r = estimate_critical_values(&p.mesh, &p.dec, &p.bg, params, 20, 31 + k as u64, spread_cap, &opts).unwrap();
        let spread = r.cluster_spreads.iter().copied().fold(0.0, f64::max);
        pass &= spread < spread_cap && r.contains_zero && r.energies.len() <= 5;
        details.push(format!("alpha={fa}l1 beta={beta}: {} clusters, spread {spread:.1e}", r.energies.len()));
    }
    let d = torus(16, 0);
    let params = CouplingParams::new(1.0, 1.0).unwrap();
    let area = d.mesh.total_area();
    let r =
        estimate_critical_values(&d.mesh, &d.dec, &d.bg, params, 20, 5, 1e-5 * area, &PhaseOptions::default()).unwrap();
    let expected = [-0.25 * area, 0.0];
    let exact = r.energies.len() == 2 && r.energies.iter().zip(expected).all(|(e, x)| (e - x).abs() <= 1e-9);
    pass &= exact;
    details.push(format!("decoupled {:?}", r.energies));
    verdict(pass, details.join("; "))
}

fn sweep_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "seed = 2024\n[mesh]\nkind = \"torus\"\nnx = 16\nny = 16\n[background]\ndegree = 1\n\
         [sweep]\nalpha = [0.6, 0.9, 1.1, 1.6, 2.5]\nbeta = [0.5, 1.0, 2.0]\nalpha_unit = \"lambda1\"\nstarts_per_point = 4\n",
    )
    .unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_glfield"))
            .args(["sweep", "--config", cfg.to_str().unwrap(), "--threads", threads, "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let a = run("1", "a.csv");
    let b = run("1", "b.csv");
    let c = run("4", "c.csv");
    let pass = a == b && a == c && !a.is_empty();
    verdict(pass, format!("{} bytes, repeat identical {}, threads 1 vs 4 identical {}", a.len(), a == b, a == c))
}

fn main() {
    let started = Instant::now();
    let t32 = torus(32, 1);
    let mut shared = Shared { l1: lambda(&t32), h: t32.mesh.longest_edge(), generated: Vec::new() };

    let mut failures = 0;
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        if !v.pass {
            failures += 1;
        }
        println!(
            "{} criterion {n} ({name}): {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    };
    report(1, "lambda1 degree formula", &mut lambda_chern_weil);
    report(2, "trivial-sector minimum", &mut trivial_sector);
    report(3, "phase boundary", &mut || phase_boundary(&mut shared));
    report(4, "non-existence region", &mut || non_existence(&mut shared));
    report(5, "solution bounds", &mut || solution_bounds(&shared));
    report(6, "gradient correctness", &mut gradient_checks);
    report(7, "gauge invariance", &mut gauge_invariance);
    report(8, "critical-value clustering", &mut critical_values);
    report(9, "sweep determinism", &mut sweep_determinism);
    println!("acceptance: {} of 9 criteria passed in {:.1}s", 9 - failures, started.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}
