use crate::error::{Error, Result};

/// Dense Cholesky factor of a small SPD matrix (row-major lower triangle).
#[derive(Clone, Debug)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    /// `a` is row-major `n × n`; only the lower triangle is read.
    pub fn factor(n: usize, a: &[f64]) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::Dimension(format!("dense matrix needs {} entries, got {}", n * n, a.len())));
        }
        let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0f64, f64::max);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 1e-14 * scale) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(DenseCholesky { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest diagonal entry of the factor.
    pub fn min_pivot(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i]).fold(f64::INFINITY, f64::min)
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Direct solve of a small dense SPD system.
pub fn dense_spd_solve(n: usize, m: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != n {
        return Err(Error::Dimension("right-hand side length".into()));
    }
    Ok(DenseCholesky::factor(n, m)?.solve(b))
}
