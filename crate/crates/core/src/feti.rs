//! One-level FETI on an overlapping nonlocal subdivision.
//!
//! Unknowns are the Lagrange multipliers `λ` of the chain constraints
//! `B u_Γ = 0`. The interface problem
//!
//! ```text
//! F λ − G α = d,   Gᵀ λ = e,   F = B S⁺ Bᵀ,   G = B Z
//! ```
//!
//! is solved by projected PCG with the scaled Dirichlet preconditioner
//! `B_D S B_Dᵀ`. `F` and `S` are never formed.

use crate::assembly::SubdomainSystem;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse_linalg::{dot, norm, projected_pcg, CholeskyFactor, DenseCholesky, KrylovOutcome, Reorthogonalization};
use crate::subdivision::{build_constraints, build_rigid_modes, ConstraintSet, RigidModes, SubdomainModes, Subdivision};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Preconditioner {
    #[default]
    Dirichlet,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FetiOptions {
    pub tol: f64,
    pub maxit: usize,
    pub preconditioner: Preconditioner,
    pub reortho: Reorthogonalization,
}

impl Default for FetiOptions {
    fn default() -> Self {
        FetiOptions { tol: 1e-10, maxit: 1000, preconditioner: Preconditioner::Dirichlet, reortho: Reorthogonalization::Off }
    }
}

/// Factorized blocks of one subdomain.
#[derive(Debug)]
pub struct SubdomainSolver {
    pub system: SubdomainSystem,
    oo: CholeskyFactor,
    neumann: CholeskyFactor,
    modes: Option<SubdomainModes>,
}

/// Scalar dofs pinned in a floating Neumann matrix, one per null-space dimension.
fn pinned_dofs(mesh: &Mesh, sys: &SubdomainSystem, modes: &SubdomainModes) -> Result<Vec<usize>> {
    let c = sys.components;
    let nodes: Vec<usize> = sys.omega_nodes.iter().chain(&sys.gamma_nodes).copied().collect();
    let (ia, &a) = nodes.iter().enumerate().min_by_key(|(_, v)| **v).ok_or_else(|| {
        Error::Subdivision(format!("floating subdomain {} has no dofs", sys.k))
    })?;
    let pins = if c == 1 {
        vec![ia]
    } else {
        let pa = mesh.vertices()[a];
        let mut best = (ia, -1.0);
        for (i, &v) in nodes.iter().enumerate() {
            let p = mesh.vertices()[v];
            let d = (p[0] - pa[0]).powi(2) + (p[1] - pa[1]).powi(2);
            if d > best.1 {
                best = (i, d);
            }
        }
        let pb = mesh.vertices()[nodes[best.0]];
        // Pin the component of b transverse to a→b so the rotation is fixed.
        let comp = if (pb[0] - pa[0]).abs() >= (pb[1] - pa[1]).abs() { 1 } else { 0 };
        vec![2 * ia, 2 * ia + 1, 2 * best.0 + comp]
    };
    // The pinned rows of Z must be nonsingular.
    let m = pins.len();
    let mut block = vec![0.0; m * m];
    for (r, &p) in pins.iter().enumerate() {
        for (col, z) in modes.full.iter().enumerate() {
            block[r * m + col] = z[p];
        }
    }
    let gram: Vec<f64> =
        (0..m * m).map(|ij| (0..m).map(|r| block[r * m + ij / m] * block[r * m + ij % m]).sum()).collect();
    DenseCholesky::factor(m, &gram)
        .map_err(|_| Error::Singular(format!("pinned dofs of subdomain {} do not fix its rigid modes", sys.k)))?;
    let mut pins = pins;
    pins.sort_unstable();
    Ok(pins)
}

impl SubdomainSolver {
    pub fn new(mesh: &Mesh, system: SubdomainSystem, modes: Option<SubdomainModes>) -> Result<Self> {
        let oo = CholeskyFactor::factorize(&system.a_oo)?;
        let pins = match &modes {
            Some(m) => pinned_dofs(mesh, &system, m)?,
            None => Vec::new(),
        };
        let neumann = CholeskyFactor::factorize_pinned(&system.a_full, &pins).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => {
                Error::Singular(format!("Neumann matrix of subdomain {} is singular after pinning: {e}", system.k))
            }
            other => other,
        })?;
        Ok(SubdomainSolver { system, oo, neumann, modes })
    }

    pub fn is_floating(&self) -> bool {
        self.modes.is_some()
    }

    pub fn modes(&self) -> Option<&SubdomainModes> {
        self.modes.as_ref()
    }

    /// `Sᵏ v = A_ΓΓ v − A_ΓΩ A_ΩΩ⁻¹ A_ΩΓ v`.
    pub fn schur_apply(&self, v: &[f64]) -> Vec<f64> {
        let s = &self.system;
        let mut out = s.a_gg.mul_vec(v);
        if s.n_omega() > 0 {
            let mut t = s.a_og.mul_vec(v);
            self.oo.solve_in_place(&mut t);
            let mut corr = vec![0.0; v.len()];
            s.a_og.mul_vec_transpose_add(&t, &mut corr);
            for (o, c) in out.iter_mut().zip(&corr) {
                *o -= c;
            }
        }
        out
    }

    fn project_out_modes(&self, v: &mut [f64]) {
        if let Some(m) = &self.modes {
            for z in &m.gamma {
                let c = dot(z, v);
                for (x, zi) in v.iter_mut().zip(z) {
                    *x -= c * zi;
                }
            }
        }
    }

    /// Moore–Penrose pseudoinverse `Sᵏ⁺ v` (the inverse when not floating).
    pub fn schur_pinv_apply(&self, v: &[f64]) -> Vec<f64> {
        let no = self.system.n_omega();
        let mut rhs = vec![0.0; no + v.len()];
        rhs[no..].copy_from_slice(v);
        self.project_out_modes(&mut rhs[no..]);
        self.neumann.solve_in_place(&mut rhs);
        let mut out = rhs[no..].to_vec();
        self.project_out_modes(&mut out);
        out
    }

    /// `f̃_Γ = f_Γ − A_ΓΩ A_ΩΩ⁻¹ f_Ω`.
    pub fn reduced_forcing(&self) -> Vec<f64> {
        let s = &self.system;
        let mut out = s.f_g.clone();
        if s.n_omega() > 0 {
            let t = self.oo.solve(&s.f_o);
            let mut corr = vec![0.0; out.len()];
            s.a_og.mul_vec_transpose_add(&t, &mut corr);
            for (o, c) in out.iter_mut().zip(&corr) {
                *o -= c;
            }
        }
        out
    }

    /// `u_Ω = A_ΩΩ⁻¹ (f_Ω − A_ΩΓ u_Γ)`.
    pub fn backward_substitute(&self, u_gamma: &[f64]) -> Vec<f64> {
        let s = &self.system;
        let ag = s.a_og.mul_vec(u_gamma);
        let mut rhs: Vec<f64> = s.f_o.iter().zip(&ag).map(|(f, a)| f - a).collect();
        self.oo.solve_in_place(&mut rhs);
        rhs
    }
}

/// Sparse coarse matrix `G = B Z` stored by column.
#[derive(Clone, Debug)]
pub struct CoarseSpace {
    pub columns: Vec<Vec<(usize, f64)>>,
    gtg: Option<DenseCholesky>,
    pub e: Vec<f64>,
}

impl CoarseSpace {
    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    /// `Gᵀ λ`.
    pub fn apply_gt(&self, lambda: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|col| col.iter().map(|&(r, v)| v * lambda[r]).sum()).collect()
    }

    /// `out += G a`.
    pub fn apply_g_add(&self, a: &[f64], out: &mut [f64]) {
        for (col, &ai) in self.columns.iter().zip(a) {
            for &(r, v) in col {
                out[r] += v * ai;
            }
        }
    }

    /// `(GᵀG)⁻¹ x`.
    pub fn solve_gtg(&self, x: &[f64]) -> Vec<f64> {
        match &self.gtg {
            Some(f) => f.solve(x),
            None => Vec::new(),
        }
    }

    /// `P λ = λ − G (GᵀG)⁻¹ Gᵀ λ`.
    pub fn project(&self, lambda: &[f64], out: &mut [f64]) {
        out.copy_from_slice(lambda);
        if self.columns.is_empty() {
            return;
        }
        let a = self.solve_gtg(&self.apply_gt(lambda));
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        self.apply_g_add(&neg, out);
    }
}

/// Assembled FETI operators for one subdivision.
#[derive(Debug)]
pub struct FetiSystem {
    pub solvers: Vec<SubdomainSolver>,
    pub constraints: ConstraintSet,
    pub modes: RigidModes,
    pub coarse: CoarseSpace,
    /// `f̃` per subdomain.
    pub reduced_rhs: Vec<Vec<f64>>,
    /// `d = B S⁺ f̃`.
    pub d: Vec<f64>,
    pub options: FetiOptions,
}

/// Outcome of [`FetiSystem::solve`].
#[derive(Clone, Debug)]
pub struct FetiSolution {
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub u_gamma: Vec<Vec<f64>>,
    pub u_omega: Vec<Vec<f64>>,
    pub krylov: KrylovOutcome,
}

impl FetiSystem {
    /// Factorizes the subdomains and sets up constraints and the coarse space.
    pub fn new(mesh: &Mesh, sub: &Subdivision, systems: Vec<SubdomainSystem>, options: FetiOptions) -> Result<Self> {
        if systems.len() != sub.num_subdomains() {
            return Err(Error::Dimension("one subdomain system per subdomain is required".into()));
        }
        let constraints = build_constraints(sub)?;
        let modes = build_rigid_modes(mesh, sub)?;
        let mut solvers = Vec::with_capacity(systems.len());
        for (k, sys) in systems.into_iter().enumerate() {
            if sys.k != k || sys.n_gamma() != constraints.gamma_sizes()[k] {
                return Err(Error::Consistency(format!("subdomain system {k} does not match the subdivision")));
            }
            solvers.push(SubdomainSolver::new(mesh, sys, modes.modes[k].clone())?);
        }
        let reduced_rhs: Vec<Vec<f64>> = solvers.iter().map(|s| s.reduced_forcing()).collect();
        let coarse = coarse_setup(&constraints, &modes, &reduced_rhs)?;
        let mut sys = FetiSystem { solvers, constraints, modes, coarse, reduced_rhs, d: Vec::new(), options };
        let spf = sys.pinv_apply(&sys.reduced_rhs);
        sys.d = sys.constraints.apply_b(&spf);
        Ok(sys)
    }

    pub fn num_multipliers(&self) -> usize {
        self.constraints.num_rows()
    }

    /// Block `S` over all subdomains.
    pub fn schur_apply(&self, v: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.solvers.iter().zip(v).map(|(s, x)| s.schur_apply(x)).collect()
    }

    /// Block `S⁺` over all subdomains.
    pub fn pinv_apply(&self, v: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.solvers.iter().zip(v).map(|(s, x)| s.schur_pinv_apply(x)).collect()
    }

    /// `F λ = B S⁺ Bᵀ λ`.
    pub fn apply_f(&self, lambda: &[f64]) -> Vec<f64> {
        let mut t = self.constraints.zero_gamma();
        self.constraints.apply_bt_add(lambda, &mut t);
        self.constraints.apply_b(&self.pinv_apply(&t))
    }

    /// `M⁻¹ r = B_D S B_Dᵀ r`, or the identity when disabled.
    pub fn preconditioner_apply(&self, r: &[f64]) -> Vec<f64> {
        match self.options.preconditioner {
            Preconditioner::None => r.to_vec(),
            Preconditioner::Dirichlet => {
                let t = self.constraints.apply_bd_transpose(r);
                self.constraints.apply_bd(&self.schur_apply(&t))
            }
        }
    }

    /// `λ0 = G (GᵀG)⁻¹ e`.
    pub fn initial_multiplier(&self) -> Vec<f64> {
        let mut l = vec![0.0; self.num_multipliers()];
        if self.coarse.num_columns() > 0 {
            let a = self.coarse.solve_gtg(&self.coarse.e);
            self.coarse.apply_g_add(&a, &mut l);
        }
        l
    }

    /// Runs projected PCG and recovers the subdomain solutions.
    pub fn solve(&self) -> Result<FetiSolution> {
        let lambda0 = self.initial_multiplier();
        let mut f = |x: &[f64], y: &mut [f64]| -> Result<()> {
            y.copy_from_slice(&self.apply_f(x));
            Ok(())
        };
        let mut p = |x: &[f64], y: &mut [f64]| -> Result<()> {
            self.coarse.project(x, y);
            Ok(())
        };
        let mut m = |x: &[f64], y: &mut [f64]| -> Result<()> {
            y.copy_from_slice(&self.preconditioner_apply(x));
            Ok(())
        };
        let krylov = projected_pcg(
            &mut f,
            &mut p,
            &mut m,
            &self.d,
            &lambda0,
            self.options.tol,
            self.options.maxit,
            self.options.reortho,
        )?;
        if !krylov.converged {
            return Err(Error::NotConverged { iterations: krylov.iterations, residual: krylov.residual });
        }
        let lambda = krylov.solution.clone();
        let fl = self.apply_f(&lambda);
        let resid: Vec<f64> = self.d.iter().zip(&fl).map(|(a, b)| a - b).collect();
        let alpha = if self.coarse.num_columns() > 0 {
            self.coarse.solve_gtg(&self.coarse.apply_gt(&resid))
        } else {
            Vec::new()
        };
        let mut rhs = self.reduced_rhs.clone();
        let mut btl = self.constraints.zero_gamma();
        self.constraints.apply_bt_add(&lambda, &mut btl);
        for (r, b) in rhs.iter_mut().zip(&btl) {
            for (x, y) in r.iter_mut().zip(b) {
                *x -= y;
            }
        }
        let mut u_gamma = self.pinv_apply(&rhs);
        for (k, u) in u_gamma.iter_mut().enumerate() {
            if let Some(m) = &self.modes.modes[k] {
                let off = self.modes.offsets[k];
                for (j, z) in m.gamma.iter().enumerate() {
                    for (x, zi) in u.iter_mut().zip(z) {
                        *x -= alpha[off + j] * zi;
                    }
                }
            }
        }
        let u_omega = self.solvers.iter().zip(&u_gamma).map(|(s, u)| s.backward_substitute(u)).collect();
        Ok(FetiSolution { lambda, alpha, u_gamma, u_omega, krylov })
    }

    /// Global coefficients over the interior nodes (mesh slot order).
    ///
    /// Copies of a shared dof must agree to `1e−7` relative to the largest
    /// coefficient; the lowest-index subdomain's copy is kept.
    pub fn gather_solution(&self, mesh: &Mesh, sol: &FetiSolution) -> Result<Vec<f64>> {
        let c = self.constraints_components();
        let n = mesh.interior_nodes().len() * c;
        let mut out = vec![f64::NAN; n];
        let scale = sol
            .u_gamma
            .iter()
            .chain(&sol.u_omega)
            .flat_map(|v| v.iter())
            .fold(0.0f64, |a, b| a.max(b.abs()))
            .max(f64::MIN_POSITIVE);
        for (k, s) in self.solvers.iter().enumerate() {
            let sys = &s.system;
            let nodes = sys.omega_nodes.iter().chain(&sys.gamma_nodes);
            let vals = sol.u_omega[k].iter().chain(&sol.u_gamma[k]).copied().collect::<Vec<_>>();
            for (i, &v) in nodes.enumerate() {
                let slot = mesh.node_slot(v);
                for comp in 0..c {
                    let x = vals[i * c + comp];
                    let o = &mut out[slot * c + comp];
                    if o.is_nan() {
                        *o = x;
                    } else if (*o - x).abs() > 1e-7 * scale {
                        return Err(Error::Consistency(format!(
                            "copies of node {v} component {comp} disagree: {:e} vs {x:e} in subdomain {k}",
                            *o
                        )));
                    }
                }
            }
        }
        if let Some(i) = out.iter().position(|x| x.is_nan()) {
            return Err(Error::Consistency(format!("interior dof {i} is owned by no subdomain")));
        }
        Ok(out)
    }

    fn constraints_components(&self) -> usize {
        self.solvers.first().map_or(1, |s| s.system.components)
    }

    /// `max ‖B u_Γ‖ / max(1, ‖u_Γ‖)` feasibility measure.
    pub fn constraint_defect(&self, u_gamma: &[Vec<f64>]) -> f64 {
        let bu = self.constraints.apply_b(u_gamma);
        let un: f64 = u_gamma.iter().map(|u| dot(u, u)).sum::<f64>().sqrt();
        norm(&bu) / un.max(1.0)
    }
}

/// `G = B Z`, the factorized `GᵀG` and `e = Zᵀ f̃`.
pub fn coarse_setup(constraints: &ConstraintSet, modes: &RigidModes, reduced_rhs: &[Vec<f64>]) -> Result<CoarseSpace> {
    let mut columns = Vec::with_capacity(modes.num_columns);
    let mut e = Vec::with_capacity(modes.num_columns);
    for (k, m) in modes.modes.iter().enumerate() {
        let Some(m) = m else { continue };
        for z in &m.gamma {
            let mut col = Vec::new();
            for (r, row) in constraints.rows.iter().enumerate() {
                let mut v = 0.0;
                if row.plus.0 == k {
                    v += z[row.plus.1];
                }
                if row.minus.0 == k {
                    v -= z[row.minus.1];
                }
                if v != 0.0 {
                    col.push((r, v));
                }
            }
            columns.push(col);
            e.push(dot(z, &reduced_rhs[k]));
        }
    }
    let nc = columns.len();
    let gtg = if nc == 0 {
        None
    } else {
        let mut dense = vec![0.0; nc * nc];
        let mut scratch = vec![0.0; constraints.num_rows()];
        for j in 0..nc {
            for &(r, v) in &columns[j] {
                scratch[r] = v;
            }
            for i in 0..nc {
                dense[i * nc + j] = columns[i].iter().map(|&(r, v)| v * scratch[r]).sum();
            }
            for &(r, _) in &columns[j] {
                scratch[r] = 0.0;
            }
        }
        Some(DenseCholesky::factor(nc, &dense).map_err(|e| {
            Error::Singular(format!("GᵀG is singular; rigid modes or constraints are rank deficient ({e})"))
        })?)
    };
    Ok(CoarseSpace { columns, gtg, e })
}
