//! Subdivision invariants checked against brute-force scans of the mesh.

use nlfeti::geometry::barycenter;
use nlfeti::kernels::{elements_interact, BallNorm};
use nlfeti::mesh::{build_structured_mesh, Mesh, NodeLabel, Region};
use nlfeti::subdivision::{build_constraints, build_rigid_modes, Subdivision};
use rand::{Rng, SeedableRng};

const SPLITS: [(usize, usize); 4] = [(1, 1), (2, 1), (2, 2), (3, 3)];

/// All `(n, δ/h)` configurations, in both ball norms.
fn meshes() -> Vec<Mesh> {
    let mut out = Vec::new();
    for n in [8, 16] {
        for ratio in [2.0, 4.0] {
            for norm in [BallNorm::Linf, BallNorm::L2] {
                out.push(build_structured_mesh(n, ratio / n as f64, norm).unwrap());
            }
        }
    }
    out
}

fn brute_extension(mesh: &Mesh, sub: &Subdivision, k: usize) -> (Vec<usize>, Vec<usize>) {
    let owned = sub.owned_elements(k);
    let tri: Vec<_> = (0..mesh.num_elements()).map(|e| mesh.triangle(e)).collect();
    let near = |e: usize, r: f64| owned.iter().any(|&f| elements_interact(&tri[f], &tri[e], r, mesh.ball_norm()));
    let mut omega_hat = Vec::new();
    let mut dirichlet = Vec::new();
    for e in 0..mesh.num_elements() {
        match mesh.region(e) {
            Region::Interior if owned.contains(&e) || near(e, 0.5 * mesh.delta()) => omega_hat.push(e),
            Region::Dirichlet if near(e, mesh.delta()) => dirichlet.push(e),
            _ => {}
        }
    }
    (omega_hat, dirichlet)
}

#[test]
fn extensions_match_brute_force_neighbourhoods() {
    for mesh in meshes() {
        for (k1, k2) in SPLITS {
            let sub = Subdivision::build(&mesh, k1, k2, 1).unwrap();
            for k in 0..sub.num_subdomains() {
                let (oh, gd) = brute_extension(&mesh, &sub, k);
                assert_eq!(sub.omega_hat(k), &oh[..], "n={} δ={} {k1}x{k2} k={k}", mesh.n(), mesh.delta());
                assert_eq!(sub.dirichlet_elements(k), &gd[..]);
            }
        }
    }
}

#[test]
fn owned_elements_tile_the_interior() {
    for mesh in meshes() {
        for (k1, k2) in SPLITS {
            let sub = Subdivision::build(&mesh, k1, k2, 1).unwrap();
            let mut count = vec![0usize; mesh.num_elements()];
            for k in 0..sub.num_subdomains() {
                for e in sub.owned_elements(k) {
                    count[e] += 1;
                }
            }
            for e in 0..mesh.num_elements() {
                let expected = usize::from(mesh.region(e) == Region::Interior);
                assert_eq!(count[e], expected);
            }
        }
    }
}

#[test]
fn interacting_pairs_are_covered_with_partition_of_unity() {
    for mesh in meshes() {
        let tri: Vec<_> = (0..mesh.num_elements()).map(|e| mesh.triangle(e)).collect();
        for (k1, k2) in SPLITS {
            let sub = Subdivision::build(&mesh, k1, k2, 1).unwrap();
            for e in 0..mesh.num_elements() {
                for eh in e..mesh.num_elements() {
                    if mesh.region(e) == Region::Dirichlet && mesh.region(eh) == Region::Dirichlet {
                        continue;
                    }
                    if !elements_interact(&tri[e], &tri[eh], mesh.delta(), mesh.ball_norm()) {
                        continue;
                    }
                    let both = (0..sub.num_subdomains())
                        .filter(|&k| sub.element_in(k, e) && sub.element_in(k, eh))
                        .count();
                    let zeta = sub.zeta_elements(e, eh);
                    assert_eq!(zeta, both);
                    assert_eq!(sub.zeta_elements(eh, e), zeta);
                    // Σ_k χ_k(E) χ_k(Ê) / ζ = both / ζ = 1 requires ζ ≥ 1.
                    assert!(zeta >= 1, "pair ({e}, {eh}) shares no subdomain");
                }
            }
        }
    }
}

#[test]
fn node_sets_follow_the_counting_function() {
    for mesh in meshes() {
        for (k1, k2) in SPLITS {
            let sub = Subdivision::build(&mesh, k1, k2, 1).unwrap();
            for k in 0..sub.num_subdomains() {
                for &v in sub.omega_nodes(k) {
                    assert_eq!(sub.zeta_nodes(v, v), 1);
                    assert_eq!(mesh.node_label(v), NodeLabel::Interior);
                }
                for &v in sub.gamma_nodes(k) {
                    assert!(sub.zeta_nodes(v, v) >= 2);
                }
                for &v in sub.dirichlet_nodes(k) {
                    assert_eq!(mesh.node_label(v), NodeLabel::Boundary);
                }
                let has_boundary = sub
                    .extended_elements(k)
                    .iter()
                    .any(|&e| mesh.elements()[e].iter().any(|&v| mesh.node_label(v) == NodeLabel::Boundary));
                assert_eq!(sub.is_floating(k), !has_boundary);
            }
            // ζ(x, y) = (C Cᵀ)_{xy}.
            let c = sub.membership_matrix();
            let dense = c.to_dense();
            let kk = sub.num_subdomains();
            for a in (0..mesh.num_vertices()).step_by(7) {
                for b in (0..mesh.num_vertices()).step_by(5) {
                    let cct: f64 = (0..kk).map(|k| dense[a * kk + k] * dense[b * kk + k]).sum();
                    assert_eq!(cct as usize, sub.zeta_nodes(a, b));
                }
            }
        }
    }
}

#[test]
fn constraint_count_matches_node_scan() {
    for mesh in meshes() {
        for (k1, k2) in SPLITS {
            for comps in [1, 2] {
                let sub = Subdivision::build(&mesh, k1, k2, comps).unwrap();
                let set = build_constraints(&sub).unwrap();
                let expected: usize = (0..mesh.num_vertices())
                    .filter(|&v| mesh.node_label(v) == NodeLabel::Interior)
                    .map(|v| (sub.zeta_nodes(v, v) - 1) * comps)
                    .sum();
                assert_eq!(set.num_rows(), expected);
                for row in &set.rows {
                    assert!(row.plus.0 < row.minus.0);
                    assert_eq!(row.plus.0, sub.node_subdomains(row.node)[0]);
                }
            }
        }
    }
}

#[test]
fn duplicated_global_vectors_satisfy_the_constraints_exactly() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for mesh in meshes() {
        for (k1, k2) in SPLITS {
            for comps in [1, 2] {
                let sub = Subdivision::build(&mesh, k1, k2, comps).unwrap();
                let set = build_constraints(&sub).unwrap();
                let global: Vec<f64> = (0..mesh.num_vertices() * comps).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let u: Vec<Vec<f64>> = (0..sub.num_subdomains())
                    .map(|k| {
                        sub.gamma_nodes(k)
                            .iter()
                            .flat_map(|&v| (0..comps).map(move |c| (v, c)))
                            .map(|(v, c)| global[v * comps + c])
                            .collect()
                    })
                    .collect();
                assert!(set.apply_b(&u).iter().all(|&x| x == 0.0));
                for row in &set.rows {
                    let pos = sub.gamma_nodes(row.plus.0).binary_search(&row.node).unwrap();
                    assert_eq!(row.plus.1, pos * comps + row.component);
                }
            }
        }
    }
}

#[test]
fn cross_point_of_two_by_two_has_multiplicity_four() {
    let mesh = build_structured_mesh(16, 0.125, BallNorm::Linf).unwrap();
    let sub = Subdivision::build(&mesh, 2, 2, 1).unwrap();
    let v = mesh.vertices().iter().position(|p| *p == [0.5, 0.5]).unwrap();
    assert_eq!(sub.zeta_nodes(v, v), 4);
    assert_eq!(sub.node_subdomains(v), &[0, 1, 2, 3]);
}

#[test]
fn two_by_one_overlap_is_a_band_around_the_interface() {
    let mesh = build_structured_mesh(16, 0.125, BallNorm::Linf).unwrap();
    let sub = Subdivision::build(&mesh, 2, 1, 1).unwrap();
    let h = mesh.spacing();
    for e in 0..mesh.num_elements() {
        if mesh.region(e) != Region::Interior {
            continue;
        }
        let b = barycenter(&mesh.triangle(e));
        let owner = usize::from(b[0] > 0.5);
        assert_eq!(sub.partition.owner[e], Some(owner));
        let dist = (b[0] - 0.5).abs();
        let shared = sub.element_in(0, e) && sub.element_in(1, e);
        // The interaction slack is one element diameter in ℓ∞.
        if dist <= 0.5 * mesh.delta() {
            assert!(shared, "element {e} at distance {dist} should be shared");
        }
        if dist > 0.5 * mesh.delta() + 2.0 * h {
            assert!(!shared, "element {e} at distance {dist} should not be shared");
        }
    }
}

#[test]
fn only_the_centre_of_three_by_three_floats() {
    let mesh = build_structured_mesh(24, 2.0 / 24.0, BallNorm::Linf).unwrap();
    let sub = Subdivision::build(&mesh, 3, 3, 1).unwrap();
    let floating: Vec<usize> = (0..9).filter(|&k| sub.is_floating(k)).collect();
    assert_eq!(floating, vec![4]);
    let modes = build_rigid_modes(&mesh, &sub).unwrap();
    assert_eq!(modes.num_columns, 1);
    let m = modes.modes[4].as_ref().unwrap();
    let c0 = m.gamma[0][0];
    assert!(m.gamma[0].iter().all(|&x| (x - c0).abs() <= 1e-15 * c0.abs()));
    assert!(m.full[0].iter().all(|&x| (x - c0).abs() <= 1e-15 * c0.abs()));

    let vector = Subdivision::build(&mesh, 3, 3, 2).unwrap();
    assert_eq!(build_rigid_modes(&mesh, &vector).unwrap().num_columns, 3);

    for (k1, k2) in [(1, 2), (2, 1), (2, 2)] {
        let s = Subdivision::build(&mesh, k1, k2, 1).unwrap();
        assert_eq!(build_rigid_modes(&mesh, &s).unwrap().num_columns, 0);
    }
}

#[test]
fn construction_is_deterministic() {
    let mesh = build_structured_mesh(16, 0.25, BallNorm::L2).unwrap();
    let a = Subdivision::build(&mesh, 3, 3, 2).unwrap();
    let b = Subdivision::build(&mesh, 3, 3, 2).unwrap();
    assert_eq!(a.membership_matrix(), b.membership_matrix());
    assert_eq!(build_constraints(&a).unwrap().rows, build_constraints(&b).unwrap().rows);
    let (za, zb) = (build_rigid_modes(&mesh, &a).unwrap(), build_rigid_modes(&mesh, &b).unwrap());
    for (x, y) in za.modes.iter().zip(&zb.modes) {
        match (x, y) {
            (Some(x), Some(y)) => {
                for (cx, cy) in x.full.iter().zip(&y.full) {
                    assert!(cx.iter().zip(cy).all(|(p, q)| p.to_bits() == q.to_bits()));
                }
            }
            (None, None) => {}
            _ => panic!("floating flags differ"),
        }
    }
}

#[test]
fn csv_dump_lists_every_entity() {
    let mesh = build_structured_mesh(8, 0.25, BallNorm::Linf).unwrap();
    let sub = Subdivision::build(&mesh, 2, 2, 1).unwrap();
    let mut buf = Vec::new();
    sub.write_csv(&mesh, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("entity,id,x,y,owner,subdomains,zeta"));
    assert_eq!(lines.count(), mesh.num_elements() + mesh.num_vertices());
}
