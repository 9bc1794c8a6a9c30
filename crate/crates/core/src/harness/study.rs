//! Convergence and scalability ladders.

use std::io::Write;

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::solvers::{expand_solvers, solver_registry, Discretization};

/// Column schema of the study CSV; a `status` column follows only when some rung failed.
pub const STUDY_HEADER: &str = "study,kernel,K,h,delta,solver,iterations,residual,l2_error,roc,seconds";

/// One solver run on one ladder rung.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub study: String,
    pub kernel: String,
    pub k1: usize,
    pub k2: usize,
    pub n: usize,
    pub delta: f64,
    pub solver: String,
    pub dofs: usize,
    pub iterations: usize,
    pub residual: f64,
    pub l2_error: f64,
    /// `log(e_prev / e) / log(h_prev / h)` against the previous rung of the same solver.
    pub roc: Option<f64>,
    pub seconds: f64,
    /// `None` on success, otherwise the failure message.
    pub status: Option<String>,
}

impl RunRecord {
    /// Grid spacing `1/n`.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn ok(&self) -> bool {
        self.status.is_none()
    }
}

/// The configurations of every rung of the configured study.
pub fn ladder(cfg: &ExperimentConfig) -> Result<Vec<ExperimentConfig>> {
    let mut rungs = Vec::with_capacity(cfg.study_rungs);
    for i in 0..cfg.study_rungs {
        let f = 1usize << i;
        let mut c = cfg.clone();
        match cfg.study.as_str() {
            "single" => {
                if i > 0 {
                    break;
                }
            }
            "fixed_horizon" => {
                // δ/h = 2, 4, 8, ...
                let n = 2.0 * f as f64 / cfg.kernel.delta;
                if (n - n.round()).abs() > 1e-9 * n {
                    return Err(Error::Config(format!("fixed_horizon needs 2/delta to be an integer, got {n}")));
                }
                c.n = n.round() as usize;
            }
            "fixed_ratio" => {
                let ratio = cfg.kernel.delta * cfg.n as f64;
                c.n = cfg.n * f;
                c.kernel.delta = ratio / c.n as f64;
                c.k1 = cfg.k1 * f;
                c.k2 = cfg.k2 * f;
            }
            "strong_scaling" => {
                c.k1 = cfg.k1 * f;
                c.k2 = cfg.k2 * f;
            }
            other => return Err(Error::Config(format!("unknown study '{other}'"))),
        }
        c.study = cfg.study.clone();
        rungs.push(c);
    }
    Ok(rungs)
}

/// Records of one study in execution order.
#[derive(Clone, Debug, Default)]
pub struct StudyReport {
    pub records: Vec<RunRecord>,
}

impl StudyReport {
    pub fn all_ok(&self) -> bool {
        self.records.iter().all(RunRecord::ok)
    }

    /// Records of one solver, in rung order.
    pub fn series(&self, solver: &str) -> Vec<&RunRecord> {
        self.records.iter().filter(|r| r.solver == solver).collect()
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let with_status = !self.all_ok();
        if with_status {
            writeln!(out, "{STUDY_HEADER},status")?;
        } else {
            writeln!(out, "{STUDY_HEADER}")?;
        }
        for r in &self.records {
            let roc = r.roc.map_or(String::new(), |x| format!("{x:.4}"));
            write!(
                out,
                "{},{},{}x{},{},{},{},{},{:.3e},{:.6e},{},{:.3}",
                r.study,
                r.kernel,
                r.k1,
                r.k2,
                r.h(),
                r.delta,
                r.solver,
                r.iterations,
                r.residual,
                r.l2_error,
                roc,
                r.seconds
            )?;
            if with_status {
                let s = r.status.as_deref().unwrap_or("ok").replace([',', '\n'], ";");
                write!(out, ",{s}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn run_one(cfg: &ExperimentConfig, solver: &str, disc: &Result<Discretization>) -> RunRecord {
    let mut rec = RunRecord {
        study: cfg.study.clone(),
        kernel: cfg.kernel.family.clone(),
        k1: cfg.k1,
        k2: cfg.k2,
        n: cfg.n,
        delta: cfg.kernel.delta,
        solver: solver.to_string(),
        dofs: 0,
        iterations: 0,
        residual: f64::NAN,
        l2_error: f64::NAN,
        roc: None,
        seconds: 0.0,
        status: None,
    };
    let d = match disc {
        Ok(d) => d,
        Err(e) => {
            rec.status = Some(format!("setup failed: {e}"));
            return rec;
        }
    };
    rec.dofs = d.mesh.interior_nodes().len() * d.components();
    let result = solver_registry().get(solver).map(|s| s.clone()).and_then(|s| s.solve(d));
    match result {
        Ok(out) => {
            rec.iterations = out.iterations;
            rec.residual = out.residual;
            rec.seconds = out.seconds;
            match d.l2_error(&out.interior) {
                Ok(e) => rec.l2_error = e,
                Err(e) => rec.status = Some(format!("error norm failed: {e}")),
            }
            if !out.converged {
                rec.status = Some(format!("not converged after {} iterations", out.iterations));
            }
        }
        Err(e) => rec.status = Some(e.to_string()),
    }
    rec
}

/// Runs every rung and solver; failed rungs are recorded and the ladder continues.
pub fn run_study(cfg: &ExperimentConfig, progress: &mut dyn FnMut(&RunRecord)) -> Result<StudyReport> {
    cfg.validate()?;
    let mut report = StudyReport::default();
    for rung in ladder(cfg)? {
        let disc = Discretization::new(&rung);
        for solver in expand_solvers(&rung.solver) {
            let mut rec = run_one(&rung, solver, &disc);
            if let Some(prev) = report.records.iter().rev().find(|r| r.solver == rec.solver) {
                if prev.ok() && rec.ok() && prev.n != rec.n && prev.l2_error > 0.0 && rec.l2_error > 0.0 {
                    rec.roc = Some((prev.l2_error / rec.l2_error).ln() / (rec.n as f64 / prev.n as f64).ln());
                }
            }
            progress(&rec);
            report.records.push(rec);
        }
    }
    Ok(report)
}

/// Rungs where FETI and CG L² errors differ by more than `rel`.
pub fn solver_disagreements(report: &StudyReport, rel: f64) -> Vec<String> {
    let feti = report.series("feti");
    let cg = report.series("cg");
    feti.iter()
        .zip(&cg)
        .filter(|(f, c)| f.ok() && c.ok())
        .filter(|(f, c)| (f.l2_error - c.l2_error).abs() > rel * c.l2_error.abs())
        .map(|(f, c)| format!("n = {}: FETI L2 error {:e} vs CG {:e}", f.n, f.l2_error, c.l2_error))
        .collect()
}
