//! Manufactured solutions with matching forcing terms.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Which diffusion forcing is paired with `u = x₁²x₂ + x₂²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Orientation {
    /// `f = −2(1 + x₂)`, the exact negative Laplacian of `u`.
    #[default]
    Consistent,
    /// `f = −2(1 + x₁)`, which does not match `u`.
    AsPrinted,
}

pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Forcing, Dirichlet data and exact solution of one test problem.
#[derive(Clone)]
pub struct Problem {
    pub components: usize,
    pub source: VectorField,
    /// Dirichlet data; the exact solution restricted to the constraint layer.
    pub dirichlet: VectorField,
    pub exact: VectorField,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem").field("components", &self.components).finish_non_exhaustive()
    }
}

/// The manufactured problem of a kernel family.
pub fn manufactured_problem(family: &str, orientation: Orientation) -> Result<Problem> {
    match family {
        "constant" | "fractional" => {
            let exact: VectorField = Arc::new(|x: Point| [x[0] * x[0] * x[1] + x[1] * x[1], 0.0]);
            let source: VectorField = match orientation {
                Orientation::Consistent => Arc::new(|x: Point| [-2.0 * (1.0 + x[1]), 0.0]),
                Orientation::AsPrinted => Arc::new(|x: Point| [-2.0 * (1.0 + x[0]), 0.0]),
            };
            Ok(Problem { components: 1, source, dirichlet: exact.clone(), exact })
        }
        "peridynamic" => {
            let exact: VectorField = Arc::new(|x: Point| [x[1] * x[1], x[0] * x[0] * x[1]]);
            let half_pi = std::f64::consts::FRAC_PI_2;
            let source: VectorField = Arc::new(move |x: Point| [-half_pi * (1.0 + 2.0 * x[0]), -half_pi * x[1]]);
            Ok(Problem { components: 2, source, dirichlet: exact.clone(), exact })
        }
        other => Err(Error::Config(format!("no manufactured problem for kernel family '{other}'"))),
    }
}
