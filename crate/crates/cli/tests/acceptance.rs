//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the report is printed on every run; the process
//! fails if any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use nlfeti::feti::FetiSystem;
use nlfeti::harness::{energy_difference, run_study, solver_registry, Discretization, ExperimentConfig, RunRecord};
use nlfeti::kernels::{elements_interact, BallNorm};
use nlfeti::mesh::{build_structured_mesh, NodeLabel, Region};
use nlfeti::subdivision::{build_constraints, Subdivision};

const FAMILIES: [&str; 3] = ["constant", "fractional", "peridynamic"];

fn config(family: &str, n: usize, delta_over_h: usize, k1: usize, k2: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.kernel.family = family.into();
    c.kernel.delta = delta_over_h as f64 / n as f64;
    c.n = n;
    c.k1 = k1;
    c.k2 = k2;
    c
}

/// Deterministic vector with entries in `[−½, ½)`.
fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = ((i as f64 + 1.0) * (seed as f64 + 1.0) * 12.9898).sin() * 43758.5453;
            x - x.floor() - 0.5
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { pass: false, detail: detail.into() }
}

/// FETI against the single-domain direct solve in the energy norm.
fn equivalence() -> Outcome {
    let registry = solver_registry();
    let (feti, direct) = (registry.get("feti").unwrap(), registry.get("direct").unwrap());
    let mut worst = (0.0f64, String::new());
    let mut count = 0;
    for family in FAMILIES {
        for n in [8, 16, 32] {
            for ratio in [2, 4] {
                let mut d = match Discretization::new(&config(family, n, ratio, 1, 1)) {
                    Ok(d) => d,
                    Err(e) => return fail(format!("{family} n={n} δ/h={ratio}: {e}")),
                };
                let a = d.assemble_global().unwrap().a;
                let reference = direct.solve(&d).unwrap().interior;
                for (k1, k2) in [(2, 1), (2, 2), (3, 3)] {
                    d.config.k1 = k1;
                    d.config.k2 = k2;
                    let label = format!("{family} n={n} δ/h={ratio} K={k1}x{k2}");
                    let out = match feti.solve(&d) {
                        Ok(o) => o,
                        Err(e) => return fail(format!("{label}: {e}")),
                    };
                    if !out.converged {
                        return fail(format!("{label}: FETI did not converge"));
                    }
                    let e = energy_difference(&a, &out.interior, &reference);
                    if !(e <= worst.0) {
                        worst = (e, label);
                    }
                    count += 1;
                }
            }
        }
    }
    Outcome {
        pass: worst.0 <= 1e-7,
        detail: format!("{count} configurations, max relative energy difference {:.2e} ({}), bound 1e-7", worst.0, worst.1),
    }
}

fn finest_rate(records: &[&RunRecord]) -> Option<f64> {
    records.last().and_then(|r| r.roc)
}

/// Fixed-horizon ladders at δ = 0.0625 with the single-domain solver.
fn convergence_rates() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (family, lo, hi) in [("constant", 1.8, 2.2), ("peridynamic", 1.7, 2.2), ("fractional", 1.9, 2.3)] {
        let mut cfg = config(family, 32, 2, 1, 1);
        cfg.kernel.delta = 0.0625;
        cfg.study = "fixed_horizon".into();
        cfg.solver = "cg".into();
        let report = run_study(&cfg, &mut |_| {}).unwrap();
        let series = report.series("cg");
        let rate = finest_rate(&series);
        let ok = report.all_ok() && rate.is_some_and(|r| (lo..=hi).contains(&r));
        pass &= ok;
        let rates: Vec<String> = series.iter().filter_map(|r| r.roc).map(|r| format!("{r:.3}")).collect();
        parts.push(format!("{family} RoC [{}] in [{lo}, {hi}]", rates.join(", ")));
    }
    Outcome { pass, detail: parts.join("; ") }
}

/// Reference-scale constant-kernel run: n = 250, δ = 0.008.
fn reference_value() -> Outcome {
    let mut cfg = config("constant", 250, 2, 1, 1);
    cfg.kernel.delta = 0.008;
    let d = Discretization::new(&cfg).unwrap();
    let out = solver_registry().get("cg").unwrap().solve(&d).unwrap();
    let err = d.l2_error(&out.interior).unwrap();
    let reference = 3.47e-6;
    let rel = (err - reference).abs() / reference;
    Outcome {
        pass: out.converged && rel <= 0.15,
        detail: format!("L2 error {err:.4e} vs 3.47e-06, relative deviation {:.1}% (bound 15%)", 100.0 * rel),
    }
}

/// Fixed δ/h = 4 ladder n = 32, 64, 128 with K = 2×2, 4×4, 8×8.
fn iteration_scalability() -> Outcome {
    let mut cfg = config("constant", 32, 4, 2, 2);
    cfg.study = "fixed_ratio".into();
    cfg.solver = "both".into();
    let report = run_study(&cfg, &mut |_| {}).unwrap();
    let feti: Vec<usize> = report.series("feti").iter().map(|r| r.iterations).collect();
    let cg: Vec<usize> = report.series("cg").iter().map(|r| r.iterations).collect();
    // Every rung within ±5 iterations of the first rung.
    let spread = feti.iter().map(|&i| i.abs_diff(feti[0])).max().unwrap_or(0);
    let growth: Vec<f64> = cg.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
    let pass = report.all_ok()
        && feti.len() == 3
        && spread <= 5
        && growth.len() == 2
        && growth.iter().all(|&g| g >= 1.6);
    let growth_text: Vec<String> = growth.iter().map(|g| format!("{g:.2}")).collect();
    Outcome {
        pass,
        detail: format!(
            "FETI iterations {feti:?} (max deviation from first rung {spread}, bound 5); CG iterations {cg:?} (growth [{}], bound 1.6)",
            growth_text.join(", ")
        ),
    }
}

fn subdivision_invariants() -> Result<usize, String> {
    let mut checked = 0;
    for n in [8, 16] {
        for ratio in [2.0, 4.0] {
            for norm in [BallNorm::Linf, BallNorm::L2] {
                let mesh = build_structured_mesh(n, ratio / n as f64, norm).map_err(|e| e.to_string())?;
                let tri: Vec<_> = (0..mesh.num_elements()).map(|e| mesh.triangle(e)).collect();
                for (k1, k2) in [(1, 1), (2, 1), (2, 2), (3, 3)] {
                    for comps in [1, 2] {
                        let label = format!("n={n} δ/h={ratio} {norm:?} K={k1}x{k2} c={comps}");
                        let sub = Subdivision::build(&mesh, k1, k2, comps).map_err(|e| format!("{label}: {e}"))?;
                        sub.check_coverage(&mesh).map_err(|e| format!("{label}: {e}"))?;
                        for e in 0..mesh.num_elements() {
                            for eh in e..mesh.num_elements() {
                                if mesh.region(e) == Region::Dirichlet && mesh.region(eh) == Region::Dirichlet {
                                    continue;
                                }
                                if elements_interact(&tri[e], &tri[eh], mesh.delta(), norm) && sub.zeta_elements(e, eh) == 0 {
                                    return Err(format!("{label}: partition of unity fails for ({e}, {eh})"));
                                }
                            }
                        }
                        let set = build_constraints(&sub).map_err(|e| format!("{label}: {e}"))?;
                        let expected: usize = (0..mesh.num_vertices())
                            .filter(|&v| mesh.node_label(v) == NodeLabel::Interior)
                            .map(|v| (sub.zeta_nodes(v, v) - 1) * comps)
                            .sum();
                        if set.num_rows() != expected {
                            return Err(format!("{label}: M_C = {} but Σ(ζ−1)c = {expected}", set.num_rows()));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(checked)
}

fn feti_identities(sys: &FetiSystem, label: &str) -> Result<(), String> {
    let m = sys.num_multipliers();
    for seed in 0..3 {
        let l = pseudo_random(m, seed);
        let (mut p, mut pp) = (vec![0.0; m], vec![0.0; m]);
        sys.coarse.project(&l, &mut p);
        sys.coarse.project(&p, &mut pp);
        if diff_norm(&pp, &p) > 1e-12 * norm(&l) {
            return Err(format!("{label}: P² ≠ P"));
        }
        if norm(&sys.coarse.apply_gt(&p)) > 1e-12 * norm(&l) {
            return Err(format!("{label}: P G ≠ 0"));
        }
        let y = pseudo_random(m, seed + 10);
        let (ml, my) = (sys.preconditioner_apply(&l), sys.preconditioner_apply(&y));
        if (dot(&l, &my) - dot(&y, &ml)).abs() > 1e-10 * norm(&l) * norm(&my) {
            return Err(format!("{label}: preconditioner not symmetric"));
        }
    }
    for (k, s) in sys.solvers.iter().enumerate() {
        let v = pseudo_random(s.system.n_gamma(), k as u64 + 20);
        let sv = s.schur_apply(&v);
        let ssps = s.schur_apply(&s.schur_pinv_apply(&sv));
        if diff_norm(&ssps, &sv) > 1e-8 * norm(&sv) {
            return Err(format!("{label}: S S⁺ S ≠ S in subdomain {k}"));
        }
        if let Some(modes) = s.modes() {
            // ‖S‖ estimated by power iteration.
            let mut w = v.clone();
            let mut est = 0.0;
            for _ in 0..20 {
                let x = s.schur_apply(&w);
                est = norm(&x) / norm(&w);
                w = x;
            }
            for z in &modes.gamma {
                if norm(&s.schur_apply(z)) > 1e-9 * est {
                    return Err(format!("{label}: rigid mode not annihilated in subdomain {k}"));
                }
            }
        }
    }
    Ok(())
}

/// Subdivision and FETI operator invariants over a configuration sweep.
fn invariants() -> Outcome {
    let subdivisions = match subdivision_invariants() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let mut systems = 0;
    for family in FAMILIES {
        for (n, ratio, k1, k2) in [(12, 2, 3, 3), (16, 4, 3, 3), (16, 2, 2, 2)] {
            let label = format!("{family} n={n} δ/h={ratio} K={k1}x{k2}");
            let d = Discretization::new(&config(family, n, ratio, k1, k2)).unwrap();
            let sub = d.subdivision().unwrap();
            let sys = match d.feti_system(&sub) {
                Ok(s) => s,
                Err(e) => return fail(format!("{label}: {e}")),
            };
            if let Err(e) = feti_identities(&sys, &label) {
                return fail(e);
            }
            systems += 1;
        }
    }
    Outcome {
        pass: true,
        detail: format!("{subdivisions} subdivisions (coverage, partition of unity, M_C) and {systems} FETI systems (P, S⁺, M⁻¹, null spaces)"),
    }
}

/// Two CLI solves with the same configuration write identical CSVs.
fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("nlfeti-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run = |out: &Path| {
        Command::new(env!("CARGO_BIN_EXE_nlfeti"))
            .args(["solve", "--solver", "feti", "--set", "kernel.family=peridynamic", "--set", "mesh.n=24"])
            .args(["--set", "kernel.delta=0.125", "--set", "feti.k1=3", "--set", "feti.k2=3", "--out"])
            .arg(out)
            .output()
            .expect("running the CLI")
    };
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    let (ra, rb) = (run(&a), run(&b));
    let outcome = if !ra.status.success() || !rb.status.success() {
        fail(format!("solve failed: {}", String::from_utf8_lossy(&ra.stderr)))
    } else {
        let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        Outcome { pass: x == y && !x.is_empty(), detail: format!("two solution CSVs of {} bytes compared bytewise", x.len()) }
    };
    let _ = std::fs::remove_dir_all(&dir);
    outcome
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 6] = [
        ("1 equivalence", equivalence),
        ("2 convergence rates", convergence_rates),
        ("3 reference error value", reference_value),
        ("4 FETI iteration scalability", iteration_scalability),
        ("5 invariant suites", invariants),
        ("6 determinism", determinism),
    ];
    let mut all = true;
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        all &= o.pass;
        println!(
            "criterion {name}: {} ({:.0}s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
