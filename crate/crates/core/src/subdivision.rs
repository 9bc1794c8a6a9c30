//! Overlapping nonlocal subdivisions of a structured mesh.
//!
//! Owned sets `Ω̃_k` are grid-aligned rectangles of interior elements. Each
//! `Ω̂_k` adds the interior elements whose barycenters lie within `δ/2` (plus
//! the interaction slack) of some owned barycenter; `Γᴰ_k` holds the Dirichlet
//! elements within the full horizon of an owned element. Every pair of
//! interacting elements with at least one interior member then lies in a
//! common `X_k = Ω̂_k ∪ Γᴰ_k`, which is checked after construction.

use std::collections::VecDeque;
use std::io::Write;

use crate::assembly::lattice_nodes;
use crate::error::{Error, Result};
use crate::geometry::{barycenter, Point, Triangle};
use crate::kernels::{elements_interact, BallNorm};
use crate::mesh::{Mesh, NodeLabel, Region};
use crate::sparse_linalg::{DenseCholesky, CsrMatrix};

/// Cell ranges `[i0, i1) × [j0, j1)` of an owned rectangle, in mesh cell indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellRect {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

/// Owner of every interior element; Dirichlet elements have no owner.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub k1: usize,
    pub k2: usize,
    pub rects: Vec<CellRect>,
    pub owner: Vec<Option<usize>>,
}

/// Splits the unit square into `k1 × k2` rectangles snapped to grid lines.
/// Subdomain `k = ky·k1 + kx`.
pub fn partition_rectangles(mesh: &Mesh, k1: usize, k2: usize) -> Result<Partition> {
    let n = mesh.n();
    if k1 == 0 || k2 == 0 {
        return Err(Error::Config("subdomain counts must be at least 1".into()));
    }
    let interior = 2 * n * n;
    if k1 * k2 > interior || k1 > n || k2 > n {
        return Err(Error::Config(format!("{k1}x{k2} subdomains do not fit a grid with n = {n}")));
    }
    let m = mesh.layer();
    let cut = |a: usize, k: usize| m + ((a * n) as f64 / k as f64).round() as usize;
    let mut rects = Vec::with_capacity(k1 * k2);
    for ky in 0..k2 {
        for kx in 0..k1 {
            rects.push(CellRect { i0: cut(kx, k1), i1: cut(kx + 1, k1), j0: cut(ky, k2), j1: cut(ky + 1, k2) });
        }
    }
    let mut owner = vec![None; mesh.num_elements()];
    for (k, r) in rects.iter().enumerate() {
        for j in r.j0..r.j1 {
            for i in r.i0..r.i1 {
                for t in 0..2 {
                    let e = mesh.element_at(i as isize, j as isize, t).expect("owned cell inside the grid");
                    owner[e] = Some(k);
                }
            }
        }
    }
    if (0..mesh.num_elements()).any(|e| (mesh.region(e) == Region::Interior) != owner[e].is_some()) {
        return Err(Error::Subdivision("rectangles do not tile the interior elements".into()));
    }
    Ok(Partition { k1, k2, rects, owner })
}

/// Interacting partner offsets `(di, dj, t̂)` for an element of type `t`.
pub fn interacting_offsets(mesh: &Mesh, radius: f64) -> [Vec<(i32, i32, usize)>; 2] {
    let h = mesh.spacing();
    let reach = (radius / h).ceil() as i32 + 3;
    let tri = |di: i32, dj: i32, t: usize| -> Triangle { lattice_nodes(di, dj, t).map(|p| [p[0] as f64 * h, p[1] as f64 * h]) };
    let mut out = [Vec::new(), Vec::new()];
    for (t, list) in out.iter_mut().enumerate() {
        let e = tri(0, 0, t);
        for dj in -reach..=reach {
            for di in -reach..=reach {
                for th in 0..2 {
                    if elements_interact(&e, &tri(di, dj, th), radius, mesh.ball_norm()) {
                        list.push((di, dj, th));
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct Subdivision {
    pub partition: Partition,
    components: usize,
    omega_hat: Vec<Vec<usize>>,
    dirichlet_elements: Vec<Vec<usize>>,
    extended: Vec<Vec<usize>>,
    element_subdomains: Vec<Vec<usize>>,
    node_subdomains: Vec<Vec<usize>>,
    omega_nodes: Vec<Vec<usize>>,
    gamma_nodes: Vec<Vec<usize>>,
    dirichlet_nodes: Vec<Vec<usize>>,
    floating: Vec<bool>,
}

/// Whether `e` lies within `radius` (barycenter criterion) of an element owned by rectangle `r`.
fn near_rect(mesh: &Mesh, r: &CellRect, e: &Triangle, radius: f64, norm: BallNorm) -> bool {
    let b = barycenter(e);
    let h = mesh.spacing();
    let m = mesh.layer() as f64;
    let ci = ((b[0] / h + m).floor() as isize).clamp(r.i0 as isize, r.i1 as isize - 1);
    let cj = ((b[1] / h + m).floor() as isize).clamp(r.j0 as isize, r.j1 as isize - 1);
    for j in (cj - 2).max(r.j0 as isize)..=(cj + 2).min(r.j1 as isize - 1) {
        for i in (ci - 2).max(r.i0 as isize)..=(ci + 2).min(r.i1 as isize - 1) {
            for t in 0..2 {
                let f = mesh.element_at(i, j, t).expect("rectangle inside the grid");
                if elements_interact(&mesh.triangle(f), e, radius, norm) {
                    return true;
                }
            }
        }
    }
    false
}

fn contains_sorted(list: &[usize], v: usize) -> bool {
    list.binary_search(&v).is_ok()
}

fn count_common(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Grows `Ω̂_k` breadth-first from the owned rectangle over interior elements.
///
/// An element joins when it lies within `δ/2` of an owned element. The search
/// stops after two consecutive layers without a new member.
fn grow_extension(mesh: &Mesh, part: &Partition, k: usize, radius: f64) -> Vec<usize> {
    let rect = &part.rects[k];
    let adj = mesh.element_adjacency_graph();
    let norm = mesh.ball_norm();
    let mut visited = vec![false; mesh.num_elements()];
    let mut members = Vec::new();
    let mut frontier: VecDeque<usize> = VecDeque::new();
    for (e, o) in part.owner.iter().enumerate() {
        if *o == Some(k) {
            visited[e] = true;
            members.push(e);
            frontier.push_back(e);
        }
    }
    let mut idle_layers = 0;
    while !frontier.is_empty() && idle_layers < 2 {
        let mut next = VecDeque::new();
        let mut added = false;
        for &e in &frontier {
            for &nb in &adj[e] {
                if visited[nb] || mesh.region(nb) != Region::Interior {
                    continue;
                }
                visited[nb] = true;
                next.push_back(nb);
                if near_rect(mesh, rect, &mesh.triangle(nb), radius, norm) {
                    members.push(nb);
                    added = true;
                }
            }
        }
        idle_layers = if added { 0 } else { idle_layers + 1 };
        frontier = next;
    }
    members.sort_unstable();
    members
}

/// Dirichlet elements within `radius` of the owned rectangle.
fn dirichlet_neighbourhood(mesh: &Mesh, part: &Partition, k: usize, radius: f64) -> Vec<usize> {
    let r = &part.rects[k];
    let h = mesh.spacing();
    let reach = (radius / h).ceil() as isize + 3;
    let side = mesh.cells_per_side() as isize;
    let mut out = Vec::new();
    for j in (r.j0 as isize - reach).max(0)..(r.j1 as isize + reach).min(side) {
        for i in (r.i0 as isize - reach).max(0)..(r.i1 as isize + reach).min(side) {
            for t in 0..2 {
                let e = mesh.element_at(i, j, t).expect("window inside the grid");
                if mesh.region(e) == Region::Dirichlet && near_rect(mesh, r, &mesh.triangle(e), radius, mesh.ball_norm()) {
                    out.push(e);
                }
            }
        }
    }
    out.sort_unstable();
    out
}

impl Subdivision {
    /// Builds the nonlocal subdivision and asserts interaction coverage.
    pub fn build(mesh: &Mesh, k1: usize, k2: usize, components: usize) -> Result<Self> {
        let part = partition_rectangles(mesh, k1, k2)?;
        Self::from_partition(mesh, part, components)
    }

    pub fn from_partition(mesh: &Mesh, part: Partition, components: usize) -> Result<Self> {
        if !(1..=2).contains(&components) {
            return Err(Error::Config("components must be 1 or 2".into()));
        }
        let kk = part.rects.len();
        let delta = mesh.delta();
        let mut omega_hat = Vec::with_capacity(kk);
        let mut dirichlet_elements = Vec::with_capacity(kk);
        let mut extended = Vec::with_capacity(kk);
        for k in 0..kk {
            let oh = grow_extension(mesh, &part, k, 0.5 * delta);
            let gd = dirichlet_neighbourhood(mesh, &part, k, delta);
            let mut x: Vec<usize> = oh.iter().chain(&gd).copied().collect();
            x.sort_unstable();
            omega_hat.push(oh);
            dirichlet_elements.push(gd);
            extended.push(x);
        }
        let mut element_subdomains = vec![Vec::new(); mesh.num_elements()];
        let mut node_subdomains = vec![Vec::new(); mesh.num_vertices()];
        for (k, x) in extended.iter().enumerate() {
            for &e in x {
                element_subdomains[e].push(k);
                for &v in &mesh.elements()[e] {
                    if node_subdomains[v].last() != Some(&k) {
                        node_subdomains[v].push(k);
                    }
                }
            }
        }
        for list in node_subdomains.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        let mut omega_nodes = vec![Vec::new(); kk];
        let mut gamma_nodes = vec![Vec::new(); kk];
        let mut dirichlet_nodes = vec![Vec::new(); kk];
        for (v, ks) in node_subdomains.iter().enumerate() {
            for &k in ks {
                match mesh.node_label(v) {
                    NodeLabel::Boundary => dirichlet_nodes[k].push(v),
                    NodeLabel::Interior if ks.len() == 1 => omega_nodes[k].push(v),
                    NodeLabel::Interior => gamma_nodes[k].push(v),
                }
            }
        }
        for v in mesh.interior_nodes() {
            if node_subdomains[*v].is_empty() {
                return Err(Error::Subdivision(format!("node {v} belongs to no subdomain")));
            }
        }
        let floating = dirichlet_nodes.iter().map(|d| d.is_empty()).collect();
        let sub = Subdivision {
            partition: part,
            components,
            omega_hat,
            dirichlet_elements,
            extended,
            element_subdomains,
            node_subdomains,
            omega_nodes,
            gamma_nodes,
            dirichlet_nodes,
            floating,
        };
        sub.check_coverage(mesh)?;
        Ok(sub)
    }

    /// Every interacting pair with an interior member shares a subdomain.
    pub fn check_coverage(&self, mesh: &Mesh) -> Result<()> {
        let offsets = interacting_offsets(mesh, mesh.delta());
        for e in 0..mesh.num_elements() {
            let (i, j, t) = mesh.element_cell(e);
            for &(di, dj, th) in &offsets[t] {
                let Some(eh) = mesh.element_at(i as isize + di as isize, j as isize + dj as isize, th) else {
                    continue;
                };
                if eh < e || (mesh.region(e) == Region::Dirichlet && mesh.region(eh) == Region::Dirichlet) {
                    continue;
                }
                if self.zeta_elements(e, eh) == 0 {
                    return Err(Error::Subdivision(format!(
                        "interacting elements {e} and {eh} share no subdomain"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_subdomains(&self) -> usize {
        self.extended.len()
    }
    pub fn components(&self) -> usize {
        self.components
    }
    pub fn owned_elements(&self, k: usize) -> Vec<usize> {
        (0..self.partition.owner.len()).filter(|&e| self.partition.owner[e] == Some(k)).collect()
    }
    /// `Ω̂_k`.
    pub fn omega_hat(&self, k: usize) -> &[usize] {
        &self.omega_hat[k]
    }
    /// `Γᴰ_k`.
    pub fn dirichlet_elements(&self, k: usize) -> &[usize] {
        &self.dirichlet_elements[k]
    }
    /// `Ω̂_k ∪ Γᴰ_k`, ascending.
    pub fn extended_elements(&self, k: usize) -> &[usize] {
        &self.extended[k]
    }
    /// Interior dof nodes of `k` owned by no other subdomain.
    pub fn omega_nodes(&self, k: usize) -> &[usize] {
        &self.omega_nodes[k]
    }
    /// Interior dof nodes of `k` shared with another subdomain.
    pub fn gamma_nodes(&self, k: usize) -> &[usize] {
        &self.gamma_nodes[k]
    }
    pub fn dirichlet_nodes(&self, k: usize) -> &[usize] {
        &self.dirichlet_nodes[k]
    }
    pub fn is_floating(&self, k: usize) -> bool {
        self.floating[k]
    }
    pub fn floating(&self) -> &[bool] {
        &self.floating
    }
    pub fn element_subdomains(&self, e: usize) -> &[usize] {
        &self.element_subdomains[e]
    }
    pub fn node_subdomains(&self, v: usize) -> &[usize] {
        &self.node_subdomains[v]
    }
    pub fn element_in(&self, k: usize, e: usize) -> bool {
        contains_sorted(&self.element_subdomains[e], k)
    }
    /// `ζ(E, Ê)`: number of subdomains containing both elements.
    pub fn zeta_elements(&self, e: usize, eh: usize) -> usize {
        count_common(&self.element_subdomains[e], &self.element_subdomains[eh])
    }
    /// `ζ(x_ℓ, x_m) = (C Cᵀ)_{ℓm}`.
    pub fn zeta_nodes(&self, a: usize, b: usize) -> usize {
        count_common(&self.node_subdomains[a], &self.node_subdomains[b])
    }

    /// Node membership matrix `C` (nodes × subdomains).
    pub fn membership_matrix(&self) -> CsrMatrix {
        let mut t = Vec::new();
        for (v, ks) in self.node_subdomains.iter().enumerate() {
            for &k in ks {
                t.push((v, k, 1.0));
            }
        }
        CsrMatrix::from_triplets(self.node_subdomains.len(), self.num_subdomains(), &t, false)
            .expect("membership indices are in range")
    }

    /// Writes one CSV row per element and node: id, coordinates, owner, subdomains, ζ.
    pub fn write_csv(&self, mesh: &Mesh, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "entity,id,x,y,owner,subdomains,zeta")?;
        let join = |ks: &[usize]| ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";");
        for e in 0..mesh.num_elements() {
            let b = barycenter(&mesh.triangle(e));
            let owner = self.partition.owner[e].map_or(String::new(), |k| k.to_string());
            let ks = &self.element_subdomains[e];
            writeln!(out, "element,{e},{:.17e},{:.17e},{owner},{},{}", b[0], b[1], join(ks), ks.len())?;
        }
        for v in 0..mesh.num_vertices() {
            let p: Point = mesh.vertices()[v];
            let ks = &self.node_subdomains[v];
            writeln!(out, "node,{v},{:.17e},{:.17e},,{},{}", p[0], p[1], join(ks), ks.len())?;
        }
        Ok(())
    }
}

/// One constraint `u_plus − u_minus = 0` between two copies of a dof.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstraintRow {
    pub node: usize,
    pub component: usize,
    /// `(subdomain, local Γ dof)` with coefficient +1.
    pub plus: (usize, usize),
    /// `(subdomain, local Γ dof)` with coefficient −1.
    pub minus: (usize, usize),
}

/// Chain constraints `B`, multiplicities `D` and the scaled operator `B_D`.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    pub rows: Vec<ConstraintRow>,
    /// Contiguous row ranges sharing one `(node, component)`.
    blocks: Vec<(usize, usize)>,
    block_factors: Vec<DenseCholesky>,
    /// `ζ(x, x)` per Γ dof of each subdomain.
    pub multiplicity: Vec<Vec<f64>>,
    gamma_sizes: Vec<usize>,
}

/// Builds the chain constraints anchored at the lowest-index copy.
pub fn build_constraints(sub: &Subdivision) -> Result<ConstraintSet> {
    let c = sub.components();
    let kk = sub.num_subdomains();
    let mut position: Vec<std::collections::HashMap<usize, usize>> = Vec::with_capacity(kk);
    let mut multiplicity = Vec::with_capacity(kk);
    let mut gamma_sizes = Vec::with_capacity(kk);
    for k in 0..kk {
        let nodes = sub.gamma_nodes(k);
        position.push(nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect());
        let mut d = Vec::with_capacity(nodes.len() * c);
        for &v in nodes {
            let z = sub.node_subdomains(v).len() as f64;
            d.extend(std::iter::repeat(z).take(c));
        }
        multiplicity.push(d);
        gamma_sizes.push(nodes.len() * c);
    }
    // Shared dof nodes are exactly the Γ nodes of their lowest subdomain.
    let shared: Vec<usize> = (0..sub.node_subdomains.len())
        .filter(|&v| {
            let ks = sub.node_subdomains(v);
            ks.len() >= 2 && position[ks[0]].contains_key(&v)
        })
        .collect();
    let mut rows = Vec::new();
    let mut blocks = Vec::new();
    let mut block_factors = Vec::new();
    for v in shared {
        let ks = sub.node_subdomains(v);
        let m = ks.len();
        for comp in 0..c {
            let start = rows.len();
            let k0 = ks[0];
            let i0 = position[k0][&v] * c + comp;
            for &kl in &ks[1..] {
                let il = position[kl][&v] * c + comp;
                rows.push(ConstraintRow { node: v, component: comp, plus: (k0, i0), minus: (kl, il) });
            }
            let b = m - 1;
            // (B D⁻¹ Bᵀ) block = (1/m)(I + 11ᵀ).
            let mut dense = vec![1.0 / m as f64; b * b];
            for i in 0..b {
                dense[i * b + i] = 2.0 / m as f64;
            }
            let f = DenseCholesky::factor(b, &dense).map_err(|_| {
                Error::Constraint(format!("rank-deficient constraint block at node {v}"))
            })?;
            if f.min_pivot() <= 1e-12 {
                return Err(Error::Constraint(format!("tiny pivot in constraint block at node {v}")));
            }
            blocks.push((start, b));
            block_factors.push(f);
        }
    }
    Ok(ConstraintSet { rows, blocks, block_factors, multiplicity, gamma_sizes })
}

impl ConstraintSet {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn gamma_sizes(&self) -> &[usize] {
        &self.gamma_sizes
    }

    /// Zeroed per-subdomain Γ vectors.
    pub fn zero_gamma(&self) -> Vec<Vec<f64>> {
        self.gamma_sizes.iter().map(|&n| vec![0.0; n]).collect()
    }

    /// `B u`.
    pub fn apply_b(&self, u: &[Vec<f64>]) -> Vec<f64> {
        self.rows.iter().map(|r| u[r.plus.0][r.plus.1] - u[r.minus.0][r.minus.1]).collect()
    }

    /// `out += Bᵀ λ`.
    pub fn apply_bt_add(&self, lambda: &[f64], out: &mut [Vec<f64>]) {
        for (r, &l) in self.rows.iter().zip(lambda) {
            out[r.plus.0][r.plus.1] += l;
            out[r.minus.0][r.minus.1] -= l;
        }
    }

    fn block_solve(&self, v: &mut [f64]) {
        for ((start, len), f) in self.blocks.iter().zip(&self.block_factors) {
            f.solve_in_place(&mut v[*start..start + len]);
        }
    }

    /// `B_D u = (B D⁻¹ Bᵀ)⁻¹ B D⁻¹ u`.
    pub fn apply_bd(&self, u: &[Vec<f64>]) -> Vec<f64> {
        let scaled: Vec<Vec<f64>> =
            u.iter().zip(&self.multiplicity).map(|(x, d)| x.iter().zip(d).map(|(a, b)| a / b).collect()).collect();
        let mut t = self.apply_b(&scaled);
        self.block_solve(&mut t);
        t
    }

    /// `B_Dᵀ λ = D⁻¹ Bᵀ (B D⁻¹ Bᵀ)⁻¹ λ`.
    pub fn apply_bd_transpose(&self, lambda: &[f64]) -> Vec<Vec<f64>> {
        let mut t = lambda.to_vec();
        self.block_solve(&mut t);
        let mut out = self.zero_gamma();
        self.apply_bt_add(&t, &mut out);
        for (x, d) in out.iter_mut().zip(&self.multiplicity) {
            for (a, b) in x.iter_mut().zip(d) {
                *a /= b;
            }
        }
        out
    }

    /// `Bᵏ` as a sparse matrix (constraints × Γ dofs of subdomain `k`).
    pub fn subdomain_matrix(&self, k: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for (i, r) in self.rows.iter().enumerate() {
            if r.plus.0 == k {
                t.push((i, r.plus.1, 1.0));
            }
            if r.minus.0 == k {
                t.push((i, r.minus.1, -1.0));
            }
        }
        CsrMatrix::from_triplets(self.rows.len(), self.gamma_sizes[k], &t, false).expect("constraint indices in range")
    }
}

/// Rigid modes of one floating subdomain.
#[derive(Clone, Debug)]
pub struct SubdomainModes {
    /// Columns over `[Ω dofs, Γ dofs]`.
    pub full: Vec<Vec<f64>>,
    /// Same columns restricted to Γ; orthonormal.
    pub gamma: Vec<Vec<f64>>,
}

/// Block matrix `Z` of rigid modes of the floating subdomains.
#[derive(Clone, Debug)]
pub struct RigidModes {
    pub modes: Vec<Option<SubdomainModes>>,
    /// First global column of each subdomain's block.
    pub offsets: Vec<usize>,
    pub num_columns: usize,
}

/// Constants (scalar) or two translations and a rotation about the
/// subdomain barycenter (vector), orthonormalized on Γ.
pub fn build_rigid_modes(mesh: &Mesh, sub: &Subdivision) -> Result<RigidModes> {
    let c = sub.components();
    let mut modes = Vec::with_capacity(sub.num_subdomains());
    let mut offsets = Vec::with_capacity(sub.num_subdomains());
    let mut cols = 0;
    for k in 0..sub.num_subdomains() {
        offsets.push(cols);
        if !sub.is_floating(k) {
            modes.push(None);
            continue;
        }
        let nodes: Vec<usize> = sub.omega_nodes(k).iter().chain(sub.gamma_nodes(k)).copied().collect();
        let no = sub.omega_nodes(k).len() * c;
        let mut full: Vec<Vec<f64>> = if c == 1 {
            vec![vec![1.0; nodes.len()]]
        } else {
            let pts: Vec<Point> = nodes.iter().map(|&v| mesh.vertices()[v]).collect();
            let inv = 1.0 / pts.len() as f64;
            let cx = pts.iter().map(|p| p[0]).sum::<f64>() * inv;
            let cy = pts.iter().map(|p| p[1]).sum::<f64>() * inv;
            vec![
                pts.iter().flat_map(|_| [1.0, 0.0]).collect(),
                pts.iter().flat_map(|_| [0.0, 1.0]).collect(),
                pts.iter().flat_map(|p| [-(p[1] - cy), p[0] - cx]).collect(),
            ]
        };
        // Gram–Schmidt on the Γ restriction, applied to the full columns.
        for j in 0..full.len() {
            for i in 0..j {
                let (left, right) = full.split_at_mut(j);
                let proj: f64 = left[i][no..].iter().zip(&right[0][no..]).map(|(a, b)| a * b).sum();
                for (x, y) in right[0].iter_mut().zip(&left[i]) {
                    *x -= proj * y;
                }
            }
            let nrm: f64 = full[j][no..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(nrm > 1e-12) {
                return Err(Error::Subdivision(format!("rigid modes of subdomain {k} are degenerate on its interface")));
            }
            for x in full[j].iter_mut() {
                *x /= nrm;
            }
        }
        let gamma = full.iter().map(|z| z[no..].to_vec()).collect();
        cols += full.len();
        modes.push(Some(SubdomainModes { full, gamma }));
    }
    Ok(RigidModes { modes, offsets, num_columns: cols })
}
