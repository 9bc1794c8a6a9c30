//! `nlfeti`: solve, study and inspect nonlocal problems from the command line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nlfeti::harness::{
    energy_difference, expand_solvers, export_artifacts, run_study, solver_disagreements, solver_registry,
    write_solution_csv, write_subdivision_csv, Discretization, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "nlfeti", version, about = "Nonlocal diffusion and peridynamics with one-level FETI")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set mesh.n=64`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Use the large reference configuration (horizon 0.008, n = 250).
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write the nodal solution.
    Solve {
        #[command(flatten)]
        common: Common,
        /// feti, cg, direct or both.
        #[arg(long)]
        solver: Option<String>,
        /// Directory for Matrix Market exports of the single-domain system.
        #[arg(long)]
        export_mm: Option<PathBuf>,
        /// Solution CSV path.
        #[arg(long, default_value = "solution.csv")]
        out: PathBuf,
    },
    /// Run a convergence or scalability ladder.
    Study {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the nonlocal subdivision as CSV.
    DumpSubdivision {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::read_unvalidated(p)?,
        None => ExperimentConfig::default(),
    };
    if common.paper_scale {
        cfg.kernel.delta = 0.008;
        cfg.n = 250;
    }
    for o in &common.overrides {
        cfg.set_pair(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn solve(mut cfg: ExperimentConfig, solver: Option<String>, export_mm: Option<PathBuf>, out: PathBuf) -> Result<bool> {
    if let Some(s) = solver {
        cfg.set("solver", &s)?;
        cfg.validate()?;
    }
    let d = Discretization::new(&cfg)?;
    if let Some(dir) = &export_mm {
        let sys = d.assemble_global()?;
        for p in export_artifacts(dir, &d.mesh, &sys)? {
            println!("wrote {}", p.display());
        }
    }
    let registry = solver_registry();
    let mut ok = true;
    let mut runs = Vec::new();
    for name in expand_solvers(&cfg.solver) {
        let o = registry.get(name)?.solve(&d)?;
        let err = d.l2_error(&o.interior)?;
        println!(
            "{name}: iterations {} residual {:.3e} converged {} L2 error {:.6e} time {:.2}s",
            o.iterations, o.residual, o.converged, err, o.seconds
        );
        ok &= o.converged;
        runs.push((o, err));
    }
    if runs.len() == 2 {
        let (a, ea) = &runs[0];
        let (b, eb) = &runs[1];
        let sys = d.assemble_global()?;
        let ed = energy_difference(&sys.a, &a.interior, &b.interior);
        println!("relative energy-norm difference {}/{}: {ed:.3e}", a.solver, b.solver);
        if (ea - eb).abs() > 1e-6 * eb.abs() {
            eprintln!("L2 errors of {} and {} disagree", a.solver, b.solver);
            ok = false;
        }
    }
    let full = d.full_coefficients(&runs[0].0.interior);
    write_solution_csv(&out, &d.mesh, &full, d.components())?;
    println!("wrote {}", out.display());
    Ok(ok)
}

fn study(mut cfg: ExperimentConfig, paper_scale: bool, out: PathBuf) -> Result<bool> {
    if cfg.study == "single" {
        bail!("set `study` to fixed_horizon, fixed_ratio or strong_scaling");
    }
    if paper_scale && cfg.study == "fixed_horizon" {
        cfg.kernel.delta = 0.008;
    }
    let report = run_study(&cfg, &mut |r| {
        let roc = r.roc.map_or("-".to_string(), |x| format!("{x:.3}"));
        let status = r.status.as_deref().unwrap_or("ok");
        println!(
            "{} n={} K={}x{} {}: its {} L2 {:.4e} RoC {roc} ({status})",
            r.study, r.n, r.k1, r.k2, r.solver, r.iterations, r.l2_error
        );
    })?;
    let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = BufWriter::new(file);
    report.write_csv(&mut w)?;
    w.flush()?;
    println!("wrote {}", out.display());
    let disagreements = solver_disagreements(&report, 1e-6);
    for d in &disagreements {
        eprintln!("{d}");
    }
    Ok(report.all_ok() && disagreements.is_empty())
}

fn run() -> Result<bool> {
    match Cli::parse().command {
        Command::Solve { common, solver, export_mm, out } => solve(load(&common)?, solver, export_mm, out),
        Command::Study { common, out } => study(load(&common)?, common.paper_scale, out),
        Command::DumpSubdivision { common, out } => {
            let cfg = load(&common)?;
            let comps = if cfg.kernel.family == "peridynamic" { 2 } else { 1 };
            let kernel = nlfeti::kernels::create_kernel(&cfg.kernel)?;
            let mesh = nlfeti::mesh::build_structured_mesh(cfg.n, cfg.kernel.delta, kernel.ball_norm())?;
            let sub = nlfeti::subdivision::Subdivision::build(&mesh, cfg.k1, cfg.k2, comps)?;
            write_subdivision_csv(&out, &mesh, &sub)?;
            println!("wrote {}", out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
