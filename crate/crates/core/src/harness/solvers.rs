//! Discretization pipeline and the runtime-selectable solver registry.

use std::fmt::Debug;
use std::sync::Arc;
use std::time::Instant;

use crate::assembly::{assemble_global, assemble_subdomain, AssembledSystem, PairIntegrator, PairTable, QuadratureOptions};
use crate::error::{Error, Result};
use crate::feti::FetiSystem;
use crate::kernels::{create_kernel, create_strategy, BallStrategy, Kernel};
use crate::mesh::{build_structured_mesh, Mesh};
use crate::registry::Registry;
use crate::sparse_linalg::{cg, dot, CholeskyFactor};
use crate::subdivision::Subdivision;

use super::config::ExperimentConfig;
use super::problem::{manufactured_problem, Problem};

/// Mesh, kernel, pair table and problem for one configuration.
#[derive(Debug)]
pub struct Discretization {
    pub config: ExperimentConfig,
    pub kernel: Arc<dyn Kernel>,
    pub strategy: Arc<dyn BallStrategy>,
    pub mesh: Mesh,
    pub table: PairTable,
    pub problem: Problem,
}

impl Discretization {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        Self::with_quadrature(config, QuadratureOptions::default())
    }

    pub fn with_quadrature(config: &ExperimentConfig, quad: QuadratureOptions) -> Result<Self> {
        config.validate()?;
        let kernel = create_kernel(&config.kernel)?;
        let name = config.ball_strategy.as_deref().unwrap_or(kernel.default_strategy());
        let strategy = create_strategy(name, kernel.ball_norm())?;
        let mesh = build_structured_mesh(config.n, config.kernel.delta, kernel.ball_norm())?;
        let integrator = PairIntegrator::new(kernel.clone(), strategy.clone(), quad)?;
        let table = PairTable::build(&integrator, config.n)?;
        let problem = manufactured_problem(&config.kernel.family, config.orientation)?;
        Ok(Discretization { config: config.clone(), kernel, strategy, mesh, table, problem })
    }

    pub fn components(&self) -> usize {
        self.problem.components
    }

    pub fn assemble_global(&self) -> Result<AssembledSystem> {
        assemble_global(&self.mesh, &self.table, &*self.problem.source, &*self.problem.dirichlet)
    }

    pub fn subdivision(&self) -> Result<Subdivision> {
        Subdivision::build(&self.mesh, self.config.k1, self.config.k2, self.components())
    }

    /// Assembles and factorizes every subdomain of `sub`.
    pub fn feti_system(&self, sub: &Subdivision) -> Result<FetiSystem> {
        let systems = (0..sub.num_subdomains())
            .map(|k| {
                assemble_subdomain(&self.mesh, &self.table, sub, k, &*self.problem.source, &*self.problem.dirichlet)
            })
            .collect::<Result<Vec<_>>>()?;
        FetiSystem::new(&self.mesh, sub, systems, self.config.feti)
    }

    /// Nodal coefficients over all mesh nodes: the interior solution plus
    /// the Dirichlet data on boundary nodes.
    pub fn full_coefficients(&self, interior: &[f64]) -> Vec<f64> {
        let c = self.components();
        let mut out = vec![0.0; self.mesh.num_vertices() * c];
        for (v, x) in self.mesh.vertices().iter().enumerate() {
            let slot = self.mesh.node_slot(v);
            match self.mesh.node_label(v) {
                crate::mesh::NodeLabel::Interior => {
                    out[v * c..(v + 1) * c].copy_from_slice(&interior[slot * c..(slot + 1) * c])
                }
                crate::mesh::NodeLabel::Boundary => {
                    out[v * c..(v + 1) * c].copy_from_slice(&(self.problem.dirichlet)(*x)[..c])
                }
            }
        }
        out
    }

    /// `‖u_h − u‖_{L²}` over the interior domain.
    pub fn l2_error(&self, interior: &[f64]) -> Result<f64> {
        self.mesh.l2_error(&self.full_coefficients(interior), self.components(), &*self.problem.exact)
    }
}

/// `‖u − v‖_A / ‖v‖_A`.
pub fn energy_difference(a: &crate::sparse_linalg::CsrMatrix, u: &[f64], v: &[f64]) -> f64 {
    let d: Vec<f64> = u.iter().zip(v).map(|(x, y)| x - y).collect();
    let num = dot(&d, &a.mul_vec(&d)).max(0.0).sqrt();
    let den = dot(v, &a.mul_vec(v)).max(0.0).sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// Result of one solver run, in interior slot order.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub solver: &'static str,
    pub interior: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub seconds: f64,
    pub trace: Vec<f64>,
}

pub trait Solver: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    fn solve(&self, d: &Discretization) -> Result<SolveOutcome>;
}

/// Jacobi-preconditioned CG on the single-domain system.
#[derive(Debug, Default)]
pub struct JacobiCg;

/// Sparse Cholesky on the single-domain system.
#[derive(Debug, Default)]
pub struct DirectSolver;

/// One-level FETI on the configured `k1 × k2` subdivision.
#[derive(Debug, Default)]
pub struct FetiSolver;

impl Solver for JacobiCg {
    fn name(&self) -> &'static str {
        "cg"
    }

    fn solve(&self, d: &Discretization) -> Result<SolveOutcome> {
        let start = Instant::now();
        let sys = d.assemble_global()?;
        let b = sys.rhs();
        let inv_diag: Vec<f64> = sys
            .a
            .diagonal()
            .iter()
            .map(|&x| if x > 0.0 { 1.0 / x } else { f64::NAN })
            .collect();
        if inv_diag.iter().any(|x| x.is_nan()) {
            return Err(Error::NotPositiveDefinite { pivot: 0, value: 0.0 });
        }
        let mut apply_a = |x: &[f64], y: &mut [f64]| -> Result<()> {
            sys.a.mul_vec_into(x, y);
            Ok(())
        };
        let mut apply_m = |x: &[f64], y: &mut [f64]| -> Result<()> {
            for ((yi, xi), di) in y.iter_mut().zip(x).zip(&inv_diag) {
                *yi = xi * di;
            }
            Ok(())
        };
        let out = cg(&mut apply_a, &mut apply_m, &b, d.config.cg_tol, d.config.cg_maxit)?;
        Ok(SolveOutcome {
            solver: self.name(),
            interior: out.solution,
            iterations: out.iterations,
            residual: out.residual,
            converged: out.converged,
            seconds: start.elapsed().as_secs_f64(),
            trace: out.trace,
        })
    }
}

impl Solver for DirectSolver {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn solve(&self, d: &Discretization) -> Result<SolveOutcome> {
        let start = Instant::now();
        let sys = d.assemble_global()?;
        let b = sys.rhs();
        let x = CholeskyFactor::factorize(&sys.a)?.solve(&b);
        let r: Vec<f64> = sys.a.mul_vec(&x).iter().zip(&b).map(|(ax, bi)| ax - bi).collect();
        let residual = dot(&r, &r).sqrt() / dot(&b, &b).sqrt().max(f64::MIN_POSITIVE);
        Ok(SolveOutcome {
            solver: self.name(),
            interior: x,
            iterations: 0,
            residual,
            converged: true,
            seconds: start.elapsed().as_secs_f64(),
            trace: Vec::new(),
        })
    }
}

impl Solver for FetiSolver {
    fn name(&self) -> &'static str {
        "feti"
    }

    fn solve(&self, d: &Discretization) -> Result<SolveOutcome> {
        let start = Instant::now();
        let sub = d.subdivision()?;
        let sys = d.feti_system(&sub)?;
        let sol = sys.solve()?;
        let interior = sys.gather_solution(&d.mesh, &sol)?;
        Ok(SolveOutcome {
            solver: self.name(),
            interior,
            iterations: sol.krylov.iterations,
            residual: sol.krylov.residual,
            converged: sol.krylov.converged,
            seconds: start.elapsed().as_secs_f64(),
            trace: sol.krylov.trace,
        })
    }
}

pub fn solver_registry() -> Registry<Arc<dyn Solver>> {
    let mut r: Registry<Arc<dyn Solver>> = Registry::new("solver");
    r.register("cg", Arc::new(JacobiCg));
    r.register("direct", Arc::new(DirectSolver));
    r.register("feti", Arc::new(FetiSolver));
    r
}

/// Solver names run for a `solver` setting; `both` expands to FETI then CG.
pub fn expand_solvers(setting: &str) -> Vec<&str> {
    if setting == "both" {
        vec!["feti", "cg"]
    } else {
        vec![setting]
    }
}
