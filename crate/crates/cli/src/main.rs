//! Command-line front end: solve scenarios, run convergence sweeps, inspect
//! guided modes and report diffraction efficiencies.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use tdg_core::analysis::{
    auto_truncation, diffraction_efficiencies, error_norms, extended_domain_check,
    run_convergence, solve_once, SweepSpec, SweepVariable,
};
use tdg_core::geometry::check_non_trapping;
use tdg_core::oracles::{critical_angles, guided_mode, guided_mode_wavenumbers};
use tdg_core::scenario::{load_with_overrides, Scenario};
use tdg_core::solver::SolveOptions;
use tdg_core::spectral::{build_ladder, m_star, rayleigh_wood_distance};
use tdg_core::Error;

#[derive(Parser)]
#[command(name = "tdg", about = "Trefftz DG solver for periodic gratings", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Override scenario entries, e.g. --set discretization.p=14.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory for CSV/field/matrix files.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario once and report the solution.
    Solve(Common),
    /// Run the convergence study from the scenario's [study] section.
    Sweep(Common),
    /// Print guided-mode wavenumbers and critical angles for a slab.
    Modes(Common),
    /// Validate the scenario: mesh, well-posedness, spectral quantities.
    Check(Common),
    /// Solve and print the diffraction efficiencies of all orders.
    Efficiencies(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Solve(c)
        | Command::Sweep(c)
        | Command::Modes(c)
        | Command::Check(c)
        | Command::Efficiencies(c) => c,
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn load(common: &Common) -> Result<Scenario, Error> {
    let text = std::fs::read_to_string(&common.config)?;
    load_with_overrides(&text, &common.overrides)
}

fn out_path(common: &Common, name: &str) -> Result<PathBuf, Error> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir.join(name))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into())
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Solve(c) => solve_cmd(c),
        Command::Sweep(c) => sweep_cmd(c),
        Command::Modes(c) => modes_cmd(c),
        Command::Check(c) => check_cmd(c),
        Command::Efficiencies(c) => efficiencies_cmd(c),
    }
}

fn solve_cmd(common: &Common) -> Result<(), Error> {
    let scenario = load(common)?;
    let prob = scenario.build::<f64>()?;
    let opts = SolveOptions::default();
    let sol = solve_once(&prob.config, &prob.mesh, prob.p, prob.m, prob.rotation, &opts)?;
    println!(
        "solved: {} elements, {} dofs (p = {}, M = {})",
        prob.mesh.elements.len(),
        prob.mesh.elements.len() * prob.p,
        prob.p,
        prob.m
    );
    println!(
        "backward error = {:.3e}, condition estimate = {:.3e}, {} path",
        sol.report.backward_error,
        sol.report.cond_estimate,
        if sol.report.used_dense { "dense" } else { "banded" }
    );
    for w in &sol.report.warnings {
        println!("warning: {w}");
    }
    if let Some(reference) = scenario.analytic_reference::<f64>()? {
        let norms = error_norms(&sol, reference.as_ref(), 12);
        println!(
            "error vs analytic reference: L2 = {:.6e}, H1 = {:.6e}",
            norms.l2_rel, norms.h1_rel
        );
    }
    let output = scenario.output.clone().unwrap_or_default();
    if let Some([nx, ny]) = output.field_grid {
        let path = out_path(common, &format!("{}_field.txt", stem(&common.config)))?;
        let mut f = std::fs::File::create(&path)?;
        sol.write_field(&mut f, nx, ny)?;
        println!("field written to {}", path.display());
    }
    if output.matrix {
        let ladder = build_ladder(&prob.config, prob.m);
        let basis = Arc::new(tdg_core::basis::GlobalBasis::new(
            &prob.mesh,
            prob.p,
            prob.rotation,
        ));
        let sys = tdg_core::assembly::assemble_system(
            &prob.config,
            &prob.mesh,
            &basis,
            &ladder,
            tdg_core::assembly::PhaseConvention::LeftCell,
        )?;
        let path = out_path(common, &format!("{}_matrix.txt", stem(&common.config)))?;
        let mut f = std::fs::File::create(&path)?;
        sys.write_matrix(&mut f)?;
        println!("matrix written to {}", path.display());
    }
    Ok(())
}

fn sweep_cmd(common: &Common) -> Result<(), Error> {
    let scenario = load(common)?;
    let study = scenario
        .study
        .clone()
        .ok_or_else(|| Error::Config("scenario has no [study] section".into()))?;
    let prob = scenario.build::<f64>()?;
    let opts = SolveOptions::default();
    let variable = match study.sweep.as_str() {
        "p" => SweepVariable::PlaneWaves,
        "m" => SweepVariable::DtnModes,
        other => return Err(Error::Config(format!("unknown sweep variable '{other}'"))),
    };
    let refined: tdg_core::solver::DiscreteSolution<f64>;
    let reference: &dyn tdg_core::oracles::FieldEval<f64>;
    let analytic = scenario.analytic_reference::<f64>()?;
    if let Some(a) = &analytic {
        reference = a.as_ref();
    } else {
        let p_ref = study.p_ref.unwrap_or(prob.p + 5);
        let m_ref = study.m_ref.unwrap_or(prob.m);
        refined = solve_once(&prob.config, &prob.mesh, p_ref, m_ref, prob.rotation, &opts)?;
        reference = &refined;
        println!("refined reference: p = {p_ref}, M = {m_ref}");
    }

    // Solve value by value so that partial results are flushed on failure.
    println!("{:>6} {:>12} {:>12} {:>10} {:>8}", "sweep", "l2_rel", "h1_rel", "cond", "secs");
    let mut table = tdg_core::analysis::ConvergenceTable { rows: Vec::new() };
    let mut failure = None;
    for &v in &study.values {
        let spec = SweepSpec { variable, values: vec![v] };
        match run_convergence(
            &prob.config,
            &prob.mesh,
            &spec,
            prob.p,
            prob.m,
            prob.rotation,
            reference,
            study.quad_order,
            &opts,
        ) {
            Ok(partial) => {
                for r in &partial.rows {
                    println!(
                        "{:>6} {:>12.4e} {:>12.4e} {:>10.2e} {:>8.2}",
                        r.value, r.l2_rel, r.h1_rel, r.cond, r.seconds
                    );
                }
                table.rows.extend(partial.rows);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    if !table.rows.is_empty() {
        let path = out_path(common, &format!("{}_sweep.csv", stem(&common.config)))?;
        let mut f = std::fs::File::create(&path)?;
        table.write_csv(&mut f)?;
        println!("csv written to {}", path.display());
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn modes_cmd(common: &Common) -> Result<(), Error> {
    let scenario = load(common)?;
    let config = scenario.config::<f64>()?;
    // The slab is the single region differing from the exterior.
    let slab = scenario
        .regions
        .iter()
        .find(|r| {
            let e = r.eps.to_complex::<f64>();
            e.im == 0.0 && (e.re - scenario.physics.eps_plus).abs() > 1e-14
        })
        .ok_or_else(|| Error::Config("no real slab region found".into()))?;
    let d = slab.x2[1];
    let eps_in = slab.eps.to_complex::<f64>().re;
    let roots = guided_mode_wavenumbers(config.k, config.eps_plus, eps_in, d);
    if roots.is_empty() {
        println!("no guided modes for k = {}, eps_in = {eps_in}", config.k);
        return Ok(());
    }
    println!("guided-mode slab wavenumbers (k = {}, eps_in = {eps_in}, d = {d}):", config.k);
    for r in &roots {
        println!("  k2 = {r:.15}");
    }
    println!("critical incidence angles:");
    for r in &roots {
        let gm = guided_mode(config.k, config.eps_plus, eps_in, d, *r);
        for (n, theta) in critical_angles(config.k, gm.k1, config.period) {
            println!("  theta = {theta:.15}  (k2 = {:.15}, n = {n})", *r);
        }
    }
    Ok(())
}

fn check_cmd(common: &Common) -> Result<(), Error> {
    let scenario = load(common)?;
    let prob = scenario.build::<f64>()?;
    let config = &prob.config;
    println!(
        "mesh: {} elements, {} faces, width {:.4}",
        prob.mesh.elements.len(),
        prob.mesh.faces.len(),
        prob.mesh.mesh_width()
    );
    println!("alpha0 = {:.12}", config.alpha0());
    match m_star(config) {
        Ok(ms) => println!("propagative cutoff M* = {ms:.12} (auto M = {})", auto_truncation(config)?),
        Err(_) => println!("propagative cutoff M*: not defined (absorbing lower medium)"),
    }
    println!("DtN truncation M = {}", prob.m);
    let delta_plus = rayleigh_wood_distance(config, true);
    println!("Rayleigh-Wood distance: upper {delta_plus:.6e}");
    if config.eps_minus.im == 0.0 {
        println!(
            "Rayleigh-Wood distance: lower {:.6e}",
            rayleigh_wood_distance(config, false)
        );
    }
    let report = check_non_trapping(config);
    if report.trivial_scattering {
        println!("note: permittivity is 1 everywhere and no obstacle; scattering is trivial");
    }
    if !report.monotonicity_applicable {
        println!("non-trapping monotonicity: not applicable (absorbing material)");
    } else if report.satisfied {
        println!("non-trapping condition: satisfied");
    } else {
        println!("non-trapping condition: NOT satisfied");
        for v in &report.violations {
            println!("  {v}");
        }
    }
    // Extended-domain consistency at reduced order for a quick check.
    if scenario.obstacles.is_empty() && prob.mesh.elements.len() <= 400 {
        let m_ext = match auto_truncation(&tdg_core::analysis::replicate_config(config, 2)) {
            Ok(m) => m,
            Err(_) => 2 * prob.m,
        };
        let rep = extended_domain_check(
            config,
            prob.mesh.mesh_width(),
            prob.p.min(12),
            prob.m,
            m_ext,
            2,
            prob.rotation,
            &SolveOptions::default(),
        )?;
        println!(
            "extended-domain mismatch (x{} cell, M = {} vs {}): L2 = {:.6e}, H1 = {:.6e}",
            rep.copies, rep.base_m, rep.extended_m, rep.l2_rel, rep.h1_rel
        );
    }
    Ok(())
}

fn efficiencies_cmd(common: &Common) -> Result<(), Error> {
    let scenario = load(common)?;
    let prob = scenario.build::<f64>()?;
    let opts = SolveOptions::default();
    let sol = solve_once(&prob.config, &prob.mesh, prob.p, prob.m, prob.rotation, &opts)?;
    let ladder = build_ladder(&prob.config, prob.m);
    let eff = diffraction_efficiencies(&prob.config, &ladder, &sol)?;
    println!("reflected orders:");
    for (n, e) in &eff.reflected {
        println!("  n = {n:>3}: {e:.8}");
    }
    if prob.config.eps_minus.im == 0.0 {
        println!("transmitted orders:");
        for (n, e) in &eff.transmitted {
            println!("  n = {n:>3}: {e:.8}");
        }
        println!("total = {:.8}", eff.total);
        let lossless = prob
            .config
            .regions
            .iter()
            .all(|r| r.eps.im == 0.0)
            && prob.config.obstacles.is_empty();
        if lossless {
            println!("energy balance defect = {:.3e}", (eff.total - 1.0).abs());
        }
    } else {
        println!("absorbing substrate: reflected total = {:.8} (< 1 expected)", eff.total);
    }
    Ok(())
}
