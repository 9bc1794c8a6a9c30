//! Preconditioned conjugate gradients, plain and projected.

use super::{axpy, dot, norm};
use crate::error::{Error, Result};

/// Result of a Krylov solve. Non-convergence is reported, not raised.
#[derive(Clone, Debug)]
pub struct KrylovOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Final relative preconditioned residual.
    pub residual: f64,
    pub converged: bool,
    /// Relative preconditioned residual after each iteration.
    pub trace: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Reorthogonalization {
    #[default]
    Off,
    Full,
}

const FLOOR: f64 = 1e-50;

/// Preconditioned CG from a zero initial guess. Stops when
/// `‖M⁻¹ r_i‖ / max(‖M⁻¹ r_0‖, 1e−50) ≤ tol`.
pub fn cg(
    apply_a: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
    apply_minv: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
    b: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<KrylovOutcome> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("CG tolerance must be positive, got {tol}")));
    }
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    apply_minv(&r, &mut z)?;
    let z0 = norm(&z).max(FLOOR);
    let mut rel = norm(&z) / z0;
    let mut trace = Vec::new();
    if rel <= tol || norm(&z) == 0.0 {
        return Ok(KrylovOutcome { solution: x, iterations: 0, residual: rel.min(norm(&z)), converged: true, trace });
    }
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rho = dot(&r, &z);
    for it in 1..=maxit {
        apply_a(&p, &mut q)?;
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Indefinite { iteration: it, curvature: pq });
        }
        let alpha = rho / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        apply_minv(&r, &mut z)?;
        rel = norm(&z) / z0;
        trace.push(rel);
        if rel <= tol {
            return Ok(KrylovOutcome { solution: x, iterations: it, residual: rel, converged: true, trace });
        }
        let rho_new = dot(&r, &z);
        let beta = rho_new / rho;
        rho = rho_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok(KrylovOutcome { solution: x, iterations: maxit, residual: rel, converged: false, trace })
}

/// Projected preconditioned CG for `P F λ = P d` started at `λ0`.
///
/// Each step projects the residual, preconditions, and projects again;
/// iterates stay in `λ0 + range(P)`. Stops on the relative norm of the
/// projected preconditioned residual.
#[allow(clippy::too_many_arguments)]
pub fn projected_pcg(
    apply_f: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
    apply_p: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
    apply_minv: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
    d: &[f64],
    lambda0: &[f64],
    tol: f64,
    maxit: usize,
    reortho: Reorthogonalization,
) -> Result<KrylovOutcome> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("projected PCG tolerance must be positive, got {tol}")));
    }
    let n = d.len();
    if lambda0.len() != n {
        return Err(Error::Dimension("initial multiplier length".into()));
    }
    let mut lambda = lambda0.to_vec();
    let mut q = vec![0.0; n];
    apply_f(&lambda, &mut q)?;
    let mut r: Vec<f64> = d.iter().zip(&q).map(|(a, b)| a - b).collect();
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut y = vec![0.0; n];
    apply_p(&r, &mut w)?;
    apply_minv(&w, &mut z)?;
    apply_p(&z, &mut y)?;
    let y0 = norm(&y).max(FLOOR);
    let mut rel = norm(&y) / y0;
    let mut trace = Vec::new();
    if norm(&y) == 0.0 || rel <= tol {
        return Ok(KrylovOutcome { solution: lambda, iterations: 0, residual: rel.min(norm(&y)), converged: true, trace });
    }
    let mut p = y.clone();
    let mut rho = dot(&y, &w);
    let mut basis: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    for it in 1..=maxit {
        apply_f(&p, &mut q)?;
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Indefinite { iteration: it, curvature: pq });
        }
        if reortho == Reorthogonalization::Full {
            basis.push((p.clone(), q.clone(), pq));
        }
        let alpha = rho / pq;
        axpy(alpha, &p, &mut lambda);
        axpy(-alpha, &q, &mut r);
        apply_p(&r, &mut w)?;
        apply_minv(&w, &mut z)?;
        apply_p(&z, &mut y)?;
        rel = norm(&y) / y0;
        trace.push(rel);
        if rel <= tol {
            return Ok(KrylovOutcome { solution: lambda, iterations: it, residual: rel, converged: true, trace });
        }
        let rho_new = dot(&y, &w);
        let beta = rho_new / rho;
        rho = rho_new;
        for (pi, yi) in p.iter_mut().zip(&y) {
            *pi = yi + beta * *pi;
        }
        if reortho == Reorthogonalization::Full {
            for (pj, qj, pqj) in &basis {
                let c = dot(qj, &p) / pqj;
                axpy(-c, pj, &mut p);
            }
        }
    }
    Ok(KrylovOutcome { solution: lambda, iterations: maxit, residual: rel, converged: false, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_op(d: Vec<f64>) -> impl FnMut(&[f64], &mut [f64]) -> Result<()> {
        move |x, y| {
            for i in 0..x.len() {
                y[i] = d[i] * x[i];
            }
            Ok(())
        }
    }

    fn identity(x: &[f64], y: &mut [f64]) -> Result<()> {
        y.copy_from_slice(x);
        Ok(())
    }

    #[test]
    fn identity_converges_in_one_step() {
        let out = cg(&mut identity, &mut identity, &[1.0, 2.0, 3.0], 1e-10, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.solution, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn jacobi_diagonal_is_exact() {
        let mut a = diag_op(vec![1.0, 4.0]);
        let mut m = diag_op(vec![1.0, 0.25]);
        let out = cg(&mut a, &mut m, &[1.0, 4.0], 1e-10, 10).unwrap();
        assert!(out.iterations <= 2);
        assert!((out.solution[0] - 1.0).abs() < 1e-14 && (out.solution[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut a = diag_op((1..=50).map(|i| i as f64).collect());
        let b = vec![1.0; 50];
        let out = cg(&mut a, &mut identity, &b, 1e-14, 3).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let out = cg(&mut identity, &mut identity, &[0.0, 0.0], 1e-10, 5).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.solution, vec![0.0, 0.0]);
    }
}
