//! Assembled operators, error norms, exports and linear solvers against
//! independent oracles.

mod common;

use common::{dense_solve, discretization, dot, norm, sub};
use nlfeti::assembly::QuadratureOptions;
use nlfeti::geometry::area;
use nlfeti::harness::{export_artifacts, solver_registry, Discretization};
use nlfeti::kernels::{BallNorm, KernelValue};
use nlfeti::mesh::{build_structured_mesh, Region};
use nlfeti::sparse_linalg::{cg, read_matrix_market, read_vector, CholeskyFactor};

const FAMILIES: [&str; 3] = ["constant", "fractional", "peridynamic"];

/// Gauss–Legendre nodes and weights on `[0, 1]` by Newton iteration on `P_n`.
fn gauss01(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

#[test]
fn assembled_matrices_are_symmetric() {
    for family in FAMILIES {
        let d = discretization(family, 8, 2, 1, 1);
        let sys = d.assemble_global().unwrap();
        assert!(sys.a.symmetry_defect() <= 1e-12 * sys.a.max_abs(), "{family}");
        assert_eq!(sys.f.len(), d.mesh.interior_nodes().len() * d.components());
        assert_eq!(sys.g.len(), d.mesh.boundary_nodes().len() * d.components());
    }
}

#[test]
fn quadrature_refinement_changes_entries_negligibly() {
    for (family, tol) in [("constant", 1e-8), ("fractional", 1e-5)] {
        let cfg = common::config(family, 8, 2, 1, 1);
        let coarse = Discretization::new(&cfg).unwrap().assemble_global().unwrap();
        let fine = Discretization::with_quadrature(&cfg, QuadratureOptions::default().refined())
            .unwrap()
            .assemble_global()
            .unwrap();
        let max = coarse.a.max_abs();
        let (dc, df) = (coarse.a.to_dense(), fine.a.to_dense());
        let change = dc.iter().zip(&df).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(change < tol * max, "{family}: relative entry change {:e}", change / max);
    }
}

#[test]
fn mesh_regions_tile_the_unit_square() {
    for (n, delta) in [(8, 0.25), (16, 0.125), (20, 0.15)] {
        let m = build_structured_mesh(n, delta, BallNorm::L2).unwrap();
        let interior: f64 = (0..m.num_elements())
            .filter(|&e| m.region(e) == Region::Interior)
            .map(|e| area(&m.triangle(e)))
            .sum();
        assert!((interior - 1.0).abs() <= 1e-12);
        let total: f64 = (0..m.num_elements()).map(|e| area(&m.triangle(e))).sum();
        let side = 1.0 + 2.0 * delta;
        assert!((total - side * side).abs() <= 1e-12);
        let adj = m.element_adjacency_graph();
        for (e, list) in adj.iter().enumerate() {
            for &f in list {
                assert!(adj[f].contains(&e));
            }
        }
    }
}

#[test]
fn interpolation_error_converges_at_second_order() {
    let exact = |x: [f64; 2]| [x[0] * x[0] * x[1] + x[1] * x[1] + (3.0 * x[0]).sin(), 0.0];
    let mut errs = Vec::new();
    for n in [8, 16, 32, 64] {
        let m = build_structured_mesh(n, 2.0 / n as f64, BallNorm::Linf).unwrap();
        let coeffs: Vec<f64> = m.vertices().iter().map(|&p| exact(p)[0]).collect();
        errs.push(m.l2_error(&coeffs, 1, &exact).unwrap());
        let c: Vec<f64> = vec![3.5; m.num_vertices()];
        assert_eq!(m.l2_error(&c, 1, &|_| [3.5, 0.0]).unwrap(), 0.0);
    }
    for w in errs.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!(rate >= 1.95, "interpolation rate {rate}");
    }
}

#[test]
fn l2_error_matches_an_independent_quadrature() {
    let d = discretization("constant", 8, 2, 1, 1);
    let out = solver_registry().get("direct").unwrap().solve(&d).unwrap();
    let coeffs = d.full_coefficients(&out.interior);
    let lib = d.l2_error(&out.interior).unwrap();

    // Collapsed tensor Gauss rule, exact well beyond the degree-6 integrand.
    let g = gauss01(8);
    let mut total = 0.0;
    for e in 0..d.mesh.num_elements() {
        if d.mesh.region(e) != Region::Interior {
            continue;
        }
        let t = d.mesh.triangle(e);
        let tri = d.mesh.elements()[e];
        let a2 = 2.0 * area(&t);
        for &(u, wu) in &g {
            for &(v, wv) in &g {
                let (l1, l2) = (u, v * (1.0 - u));
                let l = [1.0 - l1 - l2, l1, l2];
                let x = [
                    l[0] * t[0][0] + l[1] * t[1][0] + l[2] * t[2][0],
                    l[0] * t[0][1] + l[1] * t[1][1] + l[2] * t[2][1],
                ];
                let uh: f64 = (0..3).map(|k| l[k] * coeffs[tri[k]]).sum();
                let diff = uh - (x[0] * x[0] * x[1] + x[1] * x[1]);
                total += wu * wv * (1.0 - u) * a2 * diff * diff;
            }
        }
    }
    let oracle = total.sqrt();
    assert!((lib - oracle).abs() <= 1e-12 * oracle, "library {lib:e} vs oracle {oracle:e}");
}

/// `2 ∫ γ(x, y) (u(x) − u(y)) dy` by polar Gauss quadrature.
///
/// Opposite points `x ± z` are paired so the odd Taylor terms cancel before the
/// kernel weight is applied, and `r = δ t^q` with `q = 2 / (4 − β)` makes the
/// paired radial integrand linear in `t` for a cubic `u`.
fn nonlocal_operator(d: &Discretization, x: [f64; 2]) -> [f64; 2] {
    let k = &d.kernel;
    let delta = k.delta();
    let u = &*d.problem.exact;
    let ux = u(x);
    let mut out = [0.0; 2];
    if k.ball_norm() == BallNorm::Linf {
        let g = gauss01(6);
        for &(a, wa) in &g {
            for &(b, wb) in &g {
                let y = [x[0] + delta * (2.0 * a - 1.0), x[1] + delta * (2.0 * b - 1.0)];
                let KernelValue::Scalar(c) = k.evaluate(x, y).unwrap() else { unreachable!() };
                let w = wa * wb * 4.0 * delta * delta;
                out[0] += 2.0 * w * c * (ux[0] - u(y)[0]);
            }
        }
        return out;
    }
    let q = 2.0 / (4.0 - k.profile().exponent);
    let gt = gauss01(8);
    let panels = 16;
    let gth = gauss01(6);
    for p in 0..panels {
        for &(s, ws) in &gth {
            // Half circle; the opposite direction is the paired point.
            let th = std::f64::consts::PI * (p as f64 + s) / panels as f64;
            let wth = ws * std::f64::consts::PI / panels as f64;
            for &(t, wt) in &gt {
                let r = delta * t.powf(q);
                let dr = delta * q * t.powf(q - 1.0);
                let z = [r * th.cos(), r * th.sin()];
                let (yp, ym) = ([x[0] + z[0], x[1] + z[1]], [x[0] - z[0], x[1] - z[1]]);
                let (up, um) = (u(yp), u(ym));
                let diff = [2.0 * ux[0] - up[0] - um[0], 2.0 * ux[1] - up[1] - um[1]];
                let w = wth * wt * dr * r;
                match k.evaluate(x, yp).unwrap() {
                    KernelValue::Scalar(c) => out[0] += 2.0 * w * c * diff[0],
                    KernelValue::Tensor(m) => {
                        out[0] += 2.0 * w * (m[0][0] * diff[0] + m[0][1] * diff[1]);
                        out[1] += 2.0 * w * (m[1][0] * diff[0] + m[1][1] * diff[1]);
                    }
                }
            }
        }
    }
    out
}

#[test]
fn manufactured_sources_match_the_nonlocal_operator() {
    let points = [[0.5, 0.5], [0.2, 0.7], [0.9, 0.1], [0.33, 0.41], [0.05, 0.95]];
    for family in FAMILIES {
        let d = discretization(family, 8, 2, 1, 1);
        for x in points {
            let lhs = nonlocal_operator(&d, x);
            let f = (d.problem.source)(x);
            for c in 0..d.components() {
                assert!((lhs[c] - f[c]).abs() <= 1e-9 * f[c].abs().max(1.0), "{family} at {x:?}: {lhs:?} vs {f:?}");
            }
        }
    }
}

#[test]
fn export_round_trip_is_bitwise() {
    let d = discretization("peridynamic", 8, 2, 1, 1);
    let sys = d.assemble_global().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = export_artifacts(dir.path(), &d.mesh, &sys).unwrap();
    assert!(files.iter().all(|f| f.exists()));
    let a = read_matrix_market(&dir.path().join("A.mtx")).unwrap();
    assert_eq!(a.indptr(), sys.a.indptr());
    assert_eq!(a.indices(), sys.a.indices());
    assert!(a.data().iter().zip(sys.a.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    let b = read_matrix_market(&dir.path().join("B.mtx")).unwrap();
    assert_eq!(b, sys.b_coupling);
    let f = read_vector(&dir.path().join("f.mtx")).unwrap();
    assert_eq!(f.len(), d.mesh.interior_nodes().len() * 2);
    assert_eq!(f, sys.f);
    // The re-imported matrix is SPD: a dense elimination solve agrees with Cholesky.
    let rhs = sys.rhs();
    let x = CholeskyFactor::factorize(&a).unwrap().solve(&rhs);
    let y = dense_solve(a.nrows(), &a.to_dense(), &rhs);
    assert!(norm(&sub(&x, &y)) <= 1e-10 * norm(&y));
}

#[test]
fn cholesky_residual_on_an_assembled_block() {
    let d = discretization("fractional", 8, 2, 1, 1);
    let sys = d.assemble_global().unwrap();
    let b = sys.rhs();
    let x = CholeskyFactor::factorize(&sys.a).unwrap().solve(&b);
    let r = sub(&sys.a.mul_vec(&x), &b);
    let anorm = sys.a.max_abs() * sys.a.nrows() as f64;
    assert!(norm(&r) <= 1e-10 * (anorm * norm(&x) + norm(&b)));
}

#[test]
fn cg_matches_a_dense_solve_on_a_tiny_system() {
    let mut d = discretization("constant", 4, 1, 1, 1);
    d.config.cg_tol = 1e-14;
    let sys = d.assemble_global().unwrap();
    let dense = dense_solve(sys.a.nrows(), &sys.a.to_dense(), &sys.rhs());
    let out = solver_registry().get("cg").unwrap().solve(&d).unwrap();
    assert!(out.converged);
    assert!(norm(&sub(&out.interior, &dense)) <= 1e-9 * norm(&dense));
}

#[test]
fn cg_error_decreases_monotonically_in_the_energy_norm() {
    let d = discretization("constant", 8, 2, 1, 1);
    let sys = d.assemble_global().unwrap();
    let b = sys.rhs();
    let exact = CholeskyFactor::factorize(&sys.a).unwrap().solve(&b);
    let diag = sys.a.diagonal();
    let energy = |x: &[f64]| {
        let e = sub(x, &exact);
        dot(&e, &sys.a.mul_vec(&e))
    };
    let e0 = energy(&vec![0.0; b.len()]);
    let mut prev = e0;
    for it in 1..40 {
        let mut apply_a = |x: &[f64], y: &mut [f64]| -> nlfeti::Result<()> {
            sys.a.mul_vec_into(x, y);
            Ok(())
        };
        let mut jacobi = |x: &[f64], y: &mut [f64]| -> nlfeti::Result<()> {
            for i in 0..x.len() {
                y[i] = x[i] / diag[i];
            }
            Ok(())
        };
        let out = cg(&mut apply_a, &mut jacobi, &b, 1e-30, it).unwrap();
        let e = energy(&out.solution);
        // Below this the energy error is rounding noise.
        if e <= 1e-24 * e0 {
            break;
        }
        assert!(e <= prev * (1.0 + 1e-12), "iteration {it}: {e:e} > {prev:e}");
        prev = e;
    }
}
