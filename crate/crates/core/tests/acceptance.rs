//! End-to-end acceptance suite: one test per shipped guarantee, each printing
//! a `[PASS]` line with the measured quantities (run with `--nocapture` to
//! see them).

mod common;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use tdg_core::analysis::{
    auto_truncation, diffraction_efficiencies, error_norms, extended_domain_check,
    replicate_config, run_convergence, solve_once, SweepSpec, SweepVariable,
};
use tdg_core::geometry::build_structured;
use tdg_core::linalg::{cholesky_in_place, Mat};
use tdg_core::oracles::{critical_angles, guided_mode, guided_mode_wavenumbers, three_layer, FieldEval};
use tdg_core::scenario::Scenario;
use tdg_core::solver::SolveOptions;
use tdg_core::spectral::{build_ladder, m_star};

type C = Complex<f64>;

fn load(name: &str) -> Scenario {
    let path = format!("{}/../../configs/{}", env!("CARGO_MANIFEST_DIR"), name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    Scenario::from_toml_str(&text).unwrap()
}

/// Runs a p-sweep of a scenario against its analytic reference and returns
/// the relative L2 errors.
fn p_sweep(scenario: &Scenario, values: &[usize]) -> Vec<f64> {
    let problem = scenario.build::<f64>().unwrap();
    let reference = scenario.analytic_reference::<f64>().unwrap().unwrap();
    let spec = SweepSpec {
        variable: SweepVariable::PlaneWaves,
        values: values.to_vec(),
    };
    let table = run_convergence(
        &problem.config,
        &problem.mesh,
        &spec,
        problem.p,
        problem.m,
        problem.rotation,
        reference.as_ref(),
        15,
        &SolveOptions::default(),
    )
    .unwrap();
    table.rows.iter().map(|r| r.l2_rel).collect()
}

#[test]
fn two_layer_lossless_p_convergence() {
    let start = Instant::now();
    let scenario = load("twolayer_lossless.toml");
    let values: Vec<usize> = (3..=30).collect();
    let errs = p_sweep(&scenario, &values);
    let seconds = start.elapsed().as_secs_f64();

    let first = errs[0];
    let (argmin, &min) = errs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    assert!(first / min >= 1e4, "decay {:.1e} < 4 orders", first / min);
    assert!(min <= 1e-5, "best error {min:.3e} > 1e-5");
    // Exponential decay up to the conditioning plateau: the large majority of
    // steps before the minimum must decrease.
    let decreasing = errs[..=argmin]
        .windows(2)
        .filter(|w| w[1] < w[0])
        .count();
    assert!(
        4 * decreasing >= 3 * argmin,
        "convergence not exponential: {decreasing} decreasing steps of {argmin}"
    );
    assert!(seconds <= 60.0, "sweep took {seconds:.1} s");
    println!(
        "[PASS] two-layer lossless p-sweep: {first:.2e} -> {min:.2e} \
         over p = 3..30 ({seconds:.1} s)"
    );
}

#[test]
fn two_layer_lossy_p_convergence_and_damping() {
    let scenario = load("twolayer_lossy.toml");
    let errs = p_sweep(&scenario, &[4, 8, 12, 16, 20, 24]);
    let first = errs[0];
    let last = *errs.last().unwrap();
    assert!(first / last >= 1e4, "decay {:.1e} < 4 orders", first / last);

    // The transmitted field must decay with depth in the absorbing medium.
    let problem = scenario.build::<f64>().unwrap();
    let sol = solve_once(
        &problem.config,
        &problem.mesh,
        20,
        problem.m,
        problem.rotation,
        &SolveOptions::default(),
    )
    .unwrap();
    let l = problem.config.period;
    let h = problem.config.half_height;
    let magnitude = |x2: f64| -> f64 {
        (0..40)
            .map(|i| sol.value([(i as f64 + 0.5) / 40.0 * l, x2]).norm())
            .fold(0.0, f64::max)
    };
    let near = magnitude(-0.05);
    let deep = magnitude(-h + 0.05);
    assert!(deep < near, "no decay with depth: |u|({:.2}) = {deep:.3e} >= |u|(-0.05) = {near:.3e}", -h + 0.05);
    println!(
        "[PASS] two-layer lossy: p-sweep {first:.2e} -> {last:.2e}, \
         field max {near:.3e} near the interface vs {deep:.3e} at depth"
    );
}

#[test]
fn slab_oracle_residual_and_p_convergence() {
    // Interface residual of the slab solution, checked algebraically.
    let mut worst = 0.0f64;
    for (k, theta, eps_in, d) in [(5.0, -PI / 3.0, 2.0, 2.0), (5.0, -PI / 4.0, 10.0, 2.0)] {
        let sol = three_layer(k, theta, eps_in, d).unwrap();
        let i = C::i();
        let s = theta.sin();
        let g = sol.gamma;
        let e = |z: f64| (i * z).exp();
        let up = e(k * d * s) + sol.r * e(-k * d * s);
        let up_d = i * k * s * (e(k * d * s) - sol.r * e(-k * d * s));
        let mid_top = sol.t1 * e(-k * d * g) + sol.t2 * e(k * d * g);
        let mid_top_d = i * k * g * (-sol.t1 * e(-k * d * g) + sol.t2 * e(k * d * g));
        let mid_bot = sol.t1 * e(k * d * g) + sol.t2 * e(-k * d * g);
        let mid_bot_d = i * k * g * (-sol.t1 * e(k * d * g) + sol.t2 * e(-k * d * g));
        let low = sol.t3 * e(-k * d * s);
        let low_d = i * k * s * sol.t3 * e(-k * d * s);
        for r in [
            (up - mid_top).norm(),
            (up_d - mid_top_d).norm() / k,
            (mid_bot - low).norm(),
            (mid_bot_d - low_d).norm() / k,
        ] {
            worst = worst.max(r);
        }
    }
    assert!(worst < 1e-12, "interface residual {worst:.3e}");

    // Mesh cardinality and exponential p-convergence for both slabs.
    let s2 = load("threelayer_eps2.toml");
    let s10 = load("threelayer_eps10.toml");
    let n2 = build_structured(&s2.config::<f64>().unwrap(), 1.5).unwrap().elements.len();
    let n10 = build_structured(&s10.config::<f64>().unwrap(), 0.6).unwrap().elements.len();
    assert!((n2 as f64 - 68.0).abs() <= 0.2 * 68.0, "slab mesh has {n2} triangles");
    assert!((n10 as f64 - 392.0).abs() <= 0.2 * 392.0, "fine slab mesh has {n10} triangles");

    let errs2 = p_sweep(&s2, &[3, 6, 9, 12, 15, 18, 21, 24]);
    let r2 = errs2[0] / errs2.last().unwrap();
    assert!(r2 >= 1e4, "slab eps=2 decay {r2:.1e} < 4 orders");
    let errs10 = p_sweep(&s10, &[3, 7, 11, 15, 19]);
    let r10 = errs10[0] / errs10.last().unwrap();
    assert!(r10 >= 1e4, "slab eps=10 decay {r10:.1e} < 4 orders");
    println!(
        "[PASS] slab cases: oracle residual {worst:.2e}, meshes {n2}/{n10} triangles, \
         p-sweep decays {r2:.1e} / {r10:.1e}"
    );
}

#[test]
fn guided_modes_critical_angles_and_resonance_spike() {
    // Dispersion roots and the corresponding resonant incidence angles.
    let expect: [(f64, f64, f64); 2] = [
        (2.0, 0.713775889382297, -1.563806234657490),
        (10.0, 2.279902057511183, -1.441203660687987),
    ];
    for (eps_in, k2_ref, theta_ref) in expect {
        let roots = guided_mode_wavenumbers(5.0, 1.0, eps_in, 2.0);
        let k2 = roots
            .iter()
            .copied()
            .min_by(|a, b| {
                (a - k2_ref).abs().partial_cmp(&(b - k2_ref).abs()).unwrap()
            })
            .unwrap();
        assert!(
            (k2 - k2_ref).abs() <= 1e-12 * k2_ref.abs(),
            "eps_in = {eps_in}: k2 = {k2:.15} vs {k2_ref:.15}"
        );
        let mode = guided_mode(5.0, 1.0, eps_in, 2.0, k2);
        let angles = critical_angles(5.0, mode.k1, 2.0 * PI);
        let best = angles
            .iter()
            .map(|&(_, th)| th)
            .min_by(|a, b| {
                (a - theta_ref).abs().partial_cmp(&(b - theta_ref).abs()).unwrap()
            })
            .unwrap();
        assert!(
            (best - theta_ref).abs() <= 1e-10,
            "eps_in = {eps_in}: critical angle {best:.15} vs {theta_ref:.15}"
        );
    }

    // Sweeping theta through the resonance shows an error spike.
    let scenario = load("threelayer_eps2.toml");
    let k2: f64 = guided_mode_wavenumbers(5.0, 1.0, 2.0, 2.0)
        .into_iter()
        .min_by(|a: &f64, b: &f64| {
            (a - 0.7138).abs().partial_cmp(&(b - 0.7138).abs()).unwrap()
        })
        .unwrap();
    let mode = guided_mode(5.0, 1.0, 2.0, 2.0, k2);
    let theta_c = critical_angles(5.0, mode.k1, 2.0 * PI)
        .into_iter()
        .map(|(_, th)| th)
        .min_by(|a, b| (a + 1.5638).abs().partial_cmp(&(b + 1.5638).abs()).unwrap())
        .unwrap();
    let p = 28;
    let mut errs = Vec::new();
    for j in 0..9 {
        let dt = -2e-4 + 4e-4 * j as f64 / 8.0;
        let mut s = scenario.clone();
        s.physics.theta = theta_c + dt;
        let problem = s.build::<f64>().unwrap();
        let reference = s.analytic_reference::<f64>().unwrap().unwrap();
        let sol = solve_once(
            &problem.config,
            &problem.mesh,
            p,
            problem.m,
            problem.rotation,
            &SolveOptions::default(),
        )
        .unwrap();
        errs.push(error_norms(&sol, reference.as_ref(), 15).l2_rel);
    }
    let peak = errs.iter().copied().fold(0.0, f64::max);
    let mut edges = [errs[0], errs[1], errs[7], errs[8]];
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let edge_median = 0.5 * (edges[1] + edges[2]);
    assert!(
        peak >= 10.0 * edge_median,
        "spike {peak:.3e} < 10 x edge median {edge_median:.3e}"
    );
    println!(
        "[PASS] guided modes: roots and angles reproduced; resonance spike \
         {peak:.2e} vs edge median {edge_median:.2e} ({:.0}x)",
        peak / edge_median
    );
}

#[test]
fn dtn_truncation_plateau_moves_with_wavenumber() {
    let base = load("corners.toml");
    let m_values: Vec<usize> = (1..=12).map(|j| 2 * j).collect();
    let mut plateaus = Vec::new();
    for k in [4.0, 6.0, 8.0, 10.0] {
        let mut s = base.clone();
        s.physics.k = k;
        let problem = s.build::<f64>().unwrap();
        let opts = SolveOptions::default();
        let reference = solve_once(&problem.config, &problem.mesh, 20, 26, problem.rotation, &opts)
            .unwrap();
        let spec = SweepSpec { variable: SweepVariable::DtnModes, values: m_values.clone() };
        let table = run_convergence(
            &problem.config,
            &problem.mesh,
            &spec,
            16,
            0,
            problem.rotation,
            &reference,
            12,
            &opts,
        )
        .unwrap();
        let errs: Vec<f64> = table.rows.iter().map(|r| r.l2_rel).collect();
        let last = *errs.last().unwrap();
        let first = errs[0];
        assert!(first > 5.0 * last, "k = {k}: no initial decrease ({first:.2e} -> {last:.2e})");
        let plateau = m_values[errs.iter().position(|&e| e <= 1.25 * last).unwrap()];
        plateaus.push((k, plateau));
    }
    for w in plateaus.windows(2) {
        assert!(
            w[1].1 >= w[0].1,
            "plateau M decreased from k = {} (M = {}) to k = {} (M = {})",
            w[0].0, w[0].1, w[1].0, w[1].1
        );
    }
    println!("[PASS] DtN truncation: error flattens, plateau M per k: {plateaus:?}");
}

#[test]
fn replicated_cell_matches_quasi_periodic_extension() {
    let scenario = load("five_materials.toml");
    let config = scenario.config::<f64>().unwrap();
    let m_base = scenario.truncation(&config).unwrap();
    let m_ext = auto_truncation(&replicate_config(&config, 2)).unwrap();
    let report = extended_domain_check(
        &config,
        0.5,
        15,
        m_base,
        m_ext,
        2,
        0.0,
        &SolveOptions::default(),
    )
    .unwrap();
    println!(
        "replicated-cell mismatch: L2 = {:.6e}, H1 = {:.6e} (copies = {}, M = {}/{})",
        report.l2_rel, report.h1_rel, report.copies, report.base_m, report.extended_m
    );
    assert!(report.l2_rel <= 1e-4, "L2 mismatch {:.3e}", report.l2_rel);
    assert!(report.h1_rel <= 1e-2, "H1 mismatch {:.3e}", report.h1_rel);
    println!(
        "[PASS] replicated cell: L2 = {:.2e} <= 1e-4, H1 = {:.2e} <= 1e-2",
        report.l2_rel, report.h1_rel
    );
}

#[test]
fn lossless_systems_have_passive_imaginary_part() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = Vec::new();
    for name in [
        "twolayer_lossless.toml",
        "threelayer_eps2.toml",
        "threelayer_eps10.toml",
        "obstacle_uniform.toml",
        "five_materials.toml",
    ] {
        let scenario = load(name);
        let problem = scenario.build::<f64>().unwrap();
        let config = &problem.config;
        let m = (m_star(config).unwrap().ceil() as usize) + 1;
        let sol_m = problem.m.max(m);
        let basis = Arc::new(tdg_core::basis::GlobalBasis::new(&problem.mesh, 4, 0.0));
        let ladder = build_ladder(config, sol_m);
        let sys = tdg_core::assembly::assemble_system(
            config,
            &problem.mesh,
            &basis,
            &ladder,
            tdg_core::assembly::PhaseConvention::LeftCell,
        )
        .unwrap();
        let a = sys.to_dense();
        let n = sys.n;
        let norm1 = sys.norm_one_estimate();

        // S = -(A - A^H) / (2i) must be positive semi-definite.
        let mut s = Mat::<f64>::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                *s.at_mut(r, c) = -(a.at(r, c) - a.at(c, r).conj()) / C::new(0.0, 2.0);
            }
        }
        cholesky_in_place(&mut s, 1e-10 * norm1)
            .unwrap_or_else(|_| panic!("{name}: -Im part not PSD within tolerance"));
        for _ in 0..100 {
            let v: Vec<C> = (0..n)
                .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let av = sys.matvec(&v);
            let quad: C = v.iter().zip(&av).map(|(vi, avi)| vi.conj() * avi).sum();
            let nv: f64 = v.iter().map(|vi| vi.norm_sqr()).sum();
            assert!(
                -quad.im >= -1e-10 * nv * norm1,
                "{name}: -Im(v^H A v) = {:.3e}",
                -quad.im
            );
        }
        checked.push((name, n));
    }
    println!("[PASS] passivity: -Im part PSD + 100 random vectors on {checked:?}");
}

#[test]
fn closed_form_assembly_matches_quadrature_oracle() {
    let start = Instant::now();
    let mut faces = 0;
    for name in ["twolayer_lossless.toml", "twolayer_lossy.toml", "obstacle_uniform.toml"] {
        let scenario = load(name);
        let config = scenario.config::<f64>().unwrap();
        faces += common::compare(&config, 1.0, 3, 3, 0.23);
    }
    let seconds = start.elapsed().as_secs_f64();
    assert!(faces >= 50, "only {faces} faces exercised");
    assert!(seconds <= 120.0, "quadrature comparison took {seconds:.1} s");
    println!("[PASS] quadrature oracle: {faces} faces matched within 1e-10 ({seconds:.1} s)");
}

#[test]
fn diffraction_efficiencies_balance_energy() {
    let mut lines = Vec::new();
    for (name, lossless) in [
        ("twolayer_lossless.toml", true),
        ("threelayer_eps2.toml", true),
        ("twolayer_lossy.toml", false),
    ] {
        let scenario = load(name);
        let problem = scenario.build::<f64>().unwrap();
        let sol = solve_once(
            &problem.config,
            &problem.mesh,
            20,
            problem.m,
            problem.rotation,
            &SolveOptions::default(),
        )
        .unwrap();
        let ladder = build_ladder(&problem.config, problem.m);
        let eff = diffraction_efficiencies(&problem.config, &ladder, &sol).unwrap();
        if lossless {
            assert!(
                (eff.total - 1.0).abs() <= 1e-3,
                "{name}: efficiency total {:.6}",
                eff.total
            );
        } else {
            assert!(eff.total < 1.0, "{name}: lossy total {:.6} >= 1", eff.total);
        }
        lines.push(format!("{name}: {:.6}", eff.total));
    }
    println!("[PASS] energy balance: {}", lines.join(", "));
}

#[test]
fn obstacle_convergence_with_corner_error_concentration() {
    let scenario = load("obstacle_uniform.toml");
    let problem = scenario.build::<f64>().unwrap();
    let opts = SolveOptions::default();
    let reference = solve_once(&problem.config, &problem.mesh, 20, problem.m, problem.rotation, &opts)
        .unwrap();
    let spec = SweepSpec {
        variable: SweepVariable::PlaneWaves,
        values: vec![3, 7, 11, 15, 19],
    };
    let table = run_convergence(
        &problem.config,
        &problem.mesh,
        &spec,
        0,
        problem.m,
        problem.rotation,
        &reference,
        15,
        &opts,
    )
    .unwrap();
    let errs: Vec<f64> = table.rows.iter().map(|r| r.l2_rel).collect();
    let ratio = errs[0] / errs.last().unwrap();
    assert!(ratio >= 1e3, "decay {ratio:.1e} < 3 orders");

    // The pointwise error of a mid-accuracy solve concentrates at the
    // obstacle corners.
    let sol = solve_once(&problem.config, &problem.mesh, 12, problem.m, problem.rotation, &opts)
        .unwrap();
    let l = problem.config.period;
    let hh = problem.config.half_height;
    let corners = [
        [2.0 * PI / 3.0, -1.0],
        [2.0 * PI / 3.0, 1.0],
        [4.0 * PI / 3.0, -1.0],
        [4.0 * PI / 3.0, 1.0],
    ];
    let h = 0.75;
    let mut all = Vec::new();
    let mut corner_max = 0.0f64;
    for ix in 0..160 {
        for iy in 0..120 {
            let x = [(ix as f64 + 0.5) / 160.0 * l, -hh + (iy as f64 + 0.5) / 120.0 * 2.0 * hh];
            let (Some(u), Some(r)) = (sol.eval(x), reference.eval(x)) else {
                continue;
            };
            let e = (u - r).norm();
            all.push(e);
            let near = corners
                .iter()
                .any(|c| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt() <= h);
            if near {
                corner_max = corner_max.max(e);
            }
        }
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = all[all.len() / 2];
    assert!(
        corner_max >= 10.0 * median,
        "corner max {corner_max:.3e} < 10 x median {median:.3e}"
    );
    println!(
        "[PASS] obstacle: p-sweep decay {ratio:.1e}, corner error {corner_max:.2e} \
         vs median {median:.2e} ({:.0}x)",
        corner_max / median
    );
}
