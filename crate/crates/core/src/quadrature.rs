//! Quadrature rules on intervals and triangles.
//!
//! Triangle rules are stored in barycentric coordinates with weights that
//! sum to one; multiply by the triangle area to integrate.

use crate::error::{Error, Result};
use crate::geometry::{area, from_barycentric, Point, Triangle};

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map from [-1, 1] to [0, 1].
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// A rule on the reference triangle in barycentric coordinates.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical points and area-scaled weights on `t`.
    pub fn map(&self, t: &Triangle) -> impl Iterator<Item = (Point, f64)> + '_ {
        let a = area(t);
        let t = *t;
        self.bary
            .iter()
            .zip(&self.weights)
            .map(move |(l, w)| (from_barycentric(&t, *l), w * a))
    }

    fn symmetric(groups: &[(f64, &[[f64; 3]])]) -> Self {
        let mut bary = Vec::new();
        let mut weights = Vec::new();
        for (w, pts) in groups {
            for p in pts.iter() {
                bary.push(*p);
                weights.push(*w);
            }
        }
        TriangleRule { bary, weights }
    }
}

fn orbit3(a: f64) -> Vec<[f64; 3]> {
    let b = 1.0 - 2.0 * a;
    vec![[a, a, b], [a, b, a], [b, a, a]]
}

fn orbit6(a: f64, b: f64) -> Vec<[f64; 3]> {
    let c = 1.0 - a - b;
    vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

/// A rule exact for polynomials of total degree `degree`.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    let third = 1.0 / 3.0;
    Ok(match degree {
        0 => return Err(Error::Quadrature("rule degree must be at least 1".into())),
        1 => TriangleRule { bary: vec![[third; 3]], weights: vec![1.0] },
        2 => {
            let o = orbit3(1.0 / 6.0);
            TriangleRule::symmetric(&[(third, &o)])
        }
        3 => {
            let o = orbit6(0.659_027_622_374_092, 0.231_933_368_553_031);
            TriangleRule::symmetric(&[(1.0 / 6.0, &o)])
        }
        4 => {
            let o1 = orbit3(0.445_948_490_915_965);
            let o2 = orbit3(0.091_576_213_509_771);
            TriangleRule::symmetric(&[(0.223_381_589_678_011, &o1), (0.109_951_743_655_322, &o2)])
        }
        5 => {
            let c = [[third; 3]];
            let o1 = orbit3(0.470_142_064_105_115);
            let o2 = orbit3(0.101_286_507_323_456);
            TriangleRule::symmetric(&[
                (0.225, &c),
                (0.132_394_152_788_506, &o1),
                (0.125_939_180_544_827, &o2),
            ])
        }
        d => {
            // The collapse Jacobian adds one degree in the radial direction.
            let n = (d + 3) / 2;
            duffy_rule(n, n, 1.0, 1.0)
        }
    })
}

/// Collapsed tensor rule with the collapse at barycentric vertex 0.
///
/// Points are `(1-u, u(1-v), uv)` with `u = t^qu`, `v = s^qv`; grading
/// exponents above one cluster points at the apex (`qu`) and along the
/// edge from the apex to vertex 1 (`qv`). Weights sum to one.
pub fn duffy_rule(nu: usize, nv: usize, qu: f64, qv: f64) -> TriangleRule {
    let (tu, wu) = gauss_legendre(nu);
    let (tv, wv) = gauss_legendre(nv);
    let mut bary = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (t, wt) in tu.iter().zip(&wu) {
        let u = t.powf(qu);
        let du = qu * t.powf(qu - 1.0);
        for (s, ws) in tv.iter().zip(&wv) {
            let v = s.powf(qv);
            let dv = qv * s.powf(qv - 1.0);
            bary.push([1.0 - u, u * (1.0 - v), u * v]);
            weights.push(2.0 * u * du * dv * wt * ws);
        }
    }
    TriangleRule { bary, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫ x^a y^b over the unit reference triangle.
    fn monomial_exact(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn check_degree(rule: &TriangleRule, degree: u32) {
        let t = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                let q: f64 = rule.map(&t).map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
                let e = monomial_exact(a, b);
                assert!((q - e).abs() < 1e-13, "degree {degree}: x^{a} y^{b}: {q} vs {e}");
            }
        }
    }

    #[test]
    fn fixed_rules_are_exact_to_their_degree() {
        for d in 1..=10 {
            check_degree(&triangle_rule(d).unwrap(), d as u32);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn graded_duffy_rule_integrates_apex_singularity() {
        // ∫ r^{-1/2} over the reference triangle with apex at the origin.
        let rule = duffy_rule(12, 12, 3.0, 1.0);
        let t = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let q: f64 = rule.map(&t).map(|(p, w)| w / p[0].hypot(p[1]).sqrt()).sum();
        let (x, wx) = gauss_legendre(40);
        // Polar reference: ∫_0^{π/2} ∫_0^{R(θ)} r^{1/2} dr dθ, R = 1/(cos θ + sin θ).
        let exact: f64 = x
            .iter()
            .zip(&wx)
            .map(|(s, w)| {
                let th = s * std::f64::consts::FRAC_PI_2;
                let r = 1.0 / (th.cos() + th.sin());
                w * std::f64::consts::FRAC_PI_2 * (2.0 / 3.0) * r.powf(1.5)
            })
            .sum();
        assert!((q - exact).abs() < 1e-9 * exact, "{q} vs {exact}");
    }

    #[test]
    fn degree_zero_is_rejected() {
        assert!(triangle_rule(0).is_err());
    }
}
