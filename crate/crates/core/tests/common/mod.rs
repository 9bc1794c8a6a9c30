//! Independent dense helpers and configuration builders for the test suites.
#![allow(dead_code)]

use nlfeti::harness::{Discretization, ExperimentConfig};

/// Gaussian elimination with partial pivoting on a row-major `n × n` matrix.
pub fn dense_solve(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs())).unwrap();
        assert!(m[piv * n + col].abs() > 0.0, "singular dense matrix");
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        for r in col + 1..n {
            let f = m[r * n + col] / m[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    m[r * n + k] -= f * m[col * n + k];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r * n + k] * x[k]).sum();
        x[r] = (x[r] - s) / m[r * n + r];
    }
    x
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn config(family: &str, n: usize, delta_over_h: usize, k1: usize, k2: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.kernel.family = family.into();
    c.kernel.delta = delta_over_h as f64 / n as f64;
    c.n = n;
    c.k1 = k1;
    c.k2 = k2;
    c
}

pub fn discretization(family: &str, n: usize, delta_over_h: usize, k1: usize, k2: usize) -> Discretization {
    Discretization::new(&config(family, n, delta_over_h, k1, k2)).unwrap()
}
