//! Stiffness matrices and load vectors for P1 elements.
//!
//! The element-pair contribution of the bilinear form is
//! `∫_E ∫_{Ê ∩ B^h(x)} (ψ_i(y) − ψ_i(x)) (ψ_j(y) − ψ_j(x)) φ(x, y) dy dx`.
//! For an outer point `x` the difference `ψ_i(y) − ψ_i(x)` is affine in `y`
//! on `Ê`, so the inner integral reduces to the kernel moments of order
//! 0, 1 and 2 over `Ê ∩ B^h(x)` taken relative to `x`:
//!
//! - constant kernel: exact polygon moments, outer rule of degree 4. The
//!   inner integral is a quartic polynomial in `x` on each element because
//!   ℓ∞ ball edges align with grid lines, so the pair integral is exact;
//! - singular and tensorial kernels: the inner moments are integrated in
//!   polar coordinates around `x`, exactly in the radius and adaptively in
//!   the angle. Identical pairs use the covariogram of the element, touching
//!   pairs a graded collapsed outer rule, other pairs a composite outer rule.
//!
//! On the uniform grid the local matrix of a pair depends only on the element
//! types and the cell offset, so every translation class is integrated once
//! and scattered everywhere it occurs.

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{add, area, diameter, dot, norm2, scale, sub, Barycentric, Point, Triangle};
use crate::kernels::{elements_interact, BallNorm, BallStrategy, Kernel, RadialProfile};
use crate::mesh::{Mesh, NodeLabel, Region};
use crate::quadrature::{duffy_rule, gauss_legendre, triangle_rule, TriangleRule};
use crate::sparse_linalg::{write_matrix_market, write_vector, CsrMatrix};
use crate::subdivision::Subdivision;

/// Source or Dirichlet data; scalar problems use the first component.
pub type Field<'a> = &'a dyn Fn(Point) -> [f64; 2];

/// Quadrature parameters. All counts must be at least one.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureOptions {
    /// Outer rule degree for nonsingular kernels.
    pub outer_degree: usize,
    /// Outer rule degree per sub-triangle for singular kernels, disjoint pairs.
    pub singular_outer_degree: usize,
    /// Uniform refinement levels of the composite outer rule (4^levels pieces).
    pub singular_outer_levels: usize,
    /// Gauss points per angular sector for polar inner integration.
    pub angular_points: usize,
    /// Relative tolerance of the adaptive angular bisection.
    pub angular_tol: f64,
    /// Gauss points per direction of the graded collapsed rule on touching pairs.
    pub touching_points: usize,
    /// Grading exponent of the collapsed rule.
    pub touching_grading: f64,
    /// Gauss points per sector of the covariogram integral on identical pairs.
    pub identical_points: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            outer_degree: 4,
            singular_outer_degree: 5,
            singular_outer_levels: 2,
            angular_points: 8,
            angular_tol: 1e-10,
            touching_points: 16,
            touching_grading: 3.0,
            identical_points: 24,
        }
    }
}

impl QuadratureOptions {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("outer_degree", self.outer_degree),
            ("singular_outer_degree", self.singular_outer_degree),
            ("angular_points", self.angular_points),
            ("touching_points", self.touching_points),
            ("identical_points", self.identical_points),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(Error::Quadrature(format!("{name} must be at least 1")));
            }
        }
        if !(self.angular_tol > 0.0) || !(self.touching_grading >= 1.0) {
            return Err(Error::Quadrature("angular_tol must be positive and grading at least 1".into()));
        }
        Ok(())
    }

    /// Every rule order doubled and the angular tolerance tightened.
    pub fn refined(&self) -> Self {
        QuadratureOptions {
            outer_degree: 2 * self.outer_degree,
            singular_outer_degree: 2 * self.singular_outer_degree,
            singular_outer_levels: self.singular_outer_levels + 1,
            angular_points: 2 * self.angular_points,
            angular_tol: self.angular_tol * 1e-2,
            touching_points: 2 * self.touching_points,
            touching_grading: self.touching_grading,
            identical_points: 2 * self.identical_points,
        }
    }
}

/// Dense local matrix over the union of the vertices of a pair.
///
/// Dofs are node-major: dof `u * components + a` is component `a` of node `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalMatrix {
    pub nodes: Vec<Point>,
    pub components: usize,
    pub values: Vec<f64>,
}

impl LocalMatrix {
    pub fn dofs(&self) -> usize {
        self.nodes.len() * self.components
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dofs() + j]
    }

    /// Adds `other`, matching nodes by exact coordinates.
    fn add_matched(&mut self, other: &LocalMatrix) -> Result<()> {
        let c = self.components;
        let map: Vec<usize> = other
            .nodes
            .iter()
            .map(|p| self.nodes.iter().position(|q| q == p))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Geometry("local node sets of a pair do not match".into()))?;
        let nd = self.dofs();
        let od = other.dofs();
        for (u, &mu) in map.iter().enumerate() {
            for (v, &mv) in map.iter().enumerate() {
                for a in 0..c {
                    for b in 0..c {
                        self.values[(mu * c + a) * nd + mv * c + b] += other.values[(u * c + a) * od + v * c + b];
                    }
                }
            }
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Kernel moments relative to an outer point, per tensor channel
/// (scalar kernels use channel 0; tensorial ones xx, xy, yy).
/// Layout: `q0[ch]` at `ch`, `q1[ch][a]` at `3 + 2ch + a`,
/// `q2[ch][k]` (k = xx, xy, yy) at `9 + 3ch + k`.
#[derive(Clone, Copy, Debug, Default)]
struct Moments([f64; 18]);

impl Moments {
    #[inline]
    fn add(&mut self, o: &Moments) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a += b;
        }
    }

    /// Size with lengths scaled by `l` so the three orders are comparable.
    fn magnitude(&self, l: f64) -> f64 {
        let s0: f64 = self.0[..3].iter().map(|v| v.abs()).sum();
        let s1: f64 = self.0[3..9].iter().map(|v| v.abs()).sum();
        let s2: f64 = self.0[9..].iter().map(|v| v.abs()).sum();
        s0 * l * l + s1 * l + s2
    }

    fn distance(&self, o: &Moments, l: f64) -> f64 {
        let mut d = Moments::default();
        for k in 0..18 {
            d.0[k] = self.0[k] - o.0[k];
        }
        d.magnitude(l)
    }
}

/// Polar description of a triangle seen from an exterior point.
struct PolarTriangle {
    normals: [Point; 3],
    offsets: [f64; 3],
    e0: Point,
    e1: Point,
    angles: [f64; 3],
    size: f64,
}

impl PolarTriangle {
    fn new(t: &Triangle, x: Point) -> Result<Self> {
        let p = [sub(t[0], x), sub(t[1], x), sub(t[2], x)];
        let c = scale(add(add(p[0], p[1]), p[2]), 1.0 / 3.0);
        let cn = norm2(c);
        if cn == 0.0 {
            return Err(Error::Geometry("outer point at a sub-triangle barycenter".into()));
        }
        let e0 = scale(c, 1.0 / cn);
        let e1 = [-e0[1], e0[0]];
        let mut angles = [0.0; 3];
        for k in 0..3 {
            angles[k] = dot(p[k], e1).atan2(dot(p[k], e0));
        }
        angles.sort_by(|a, b| a.total_cmp(b));
        let mut normals = [[0.0; 2]; 3];
        let mut offsets = [0.0; 3];
        for k in 0..3 {
            let a = p[k];
            let b = p[(k + 1) % 3];
            let o = p[(k + 2) % 3];
            let d = sub(b, a);
            let mut n = [-d[1], d[0]];
            if dot(n, sub(o, a)) < 0.0 {
                n = [d[1], -d[0]];
            }
            normals[k] = n;
            offsets[k] = dot(n, a);
        }
        let size = diameter(t, norm2);
        Ok(PolarTriangle { normals, offsets, e0, e1, angles, size })
    }

    /// Radial extent `[lo, hi]` of the ray in direction `u`; `None` if it misses.
    #[inline]
    fn range(&self, u: Point) -> Option<(f64, f64)> {
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        for k in 0..3 {
            let s = dot(self.normals[k], u);
            let c = self.offsets[k];
            if s > 0.0 {
                lo = lo.max(c / s);
            } else if s < 0.0 {
                hi = hi.min(c / s);
            } else if c > 0.0 {
                return None;
            }
        }
        (hi > lo && hi.is_finite()).then_some((lo, hi))
    }
}

/// `∫_lo^hi r^(p−1) dr`.
#[inline]
fn power_integral(lo: f64, hi: f64, lo_p: f64, hi_p: f64, p: f64) -> f64 {
    if p.abs() < 1e-12 {
        (hi / lo).ln()
    } else {
        (hi_p - lo_p) / p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Contact {
    Disjoint,
    Vertex,
    Edge,
    Identical,
}

/// Integrates ordered element pairs for one kernel and ball strategy.
#[derive(Debug)]
pub struct PairIntegrator {
    kernel: Arc<dyn Kernel>,
    strategy: Arc<dyn BallStrategy>,
    profile: RadialProfile,
    delta: f64,
    norm: BallNorm,
    opts: QuadratureOptions,
    singular: bool,
    channels: usize,
    outer_regular: TriangleRule,
    outer_composite: TriangleRule,
    outer_touching: TriangleRule,
    gl_angle: (Vec<f64>, Vec<f64>),
    gl_identical: (Vec<f64>, Vec<f64>),
}

const MAX_ANGULAR_DEPTH: usize = 30;

fn composite_rule(levels: usize, degree: usize) -> Result<TriangleRule> {
    let base = triangle_rule(degree)?;
    let mut tris: Vec<[[f64; 3]; 3]> = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]];
    for _ in 0..levels {
        let mut next = Vec::with_capacity(4 * tris.len());
        for [a, b, c] in tris {
            let mid = |p: [f64; 3], q: [f64; 3]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])];
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        tris = next;
    }
    let scale_w = 1.0 / tris.len() as f64;
    let mut bary = Vec::new();
    let mut weights = Vec::new();
    for t in &tris {
        for (l, w) in base.bary.iter().zip(&base.weights) {
            let mut p = [0.0; 3];
            for k in 0..3 {
                p[k] = l[0] * t[0][k] + l[1] * t[1][k] + l[2] * t[2][k];
            }
            bary.push(p);
            weights.push(w * scale_w);
        }
    }
    Ok(TriangleRule { bary, weights })
}

impl PairIntegrator {
    pub fn new(kernel: Arc<dyn Kernel>, strategy: Arc<dyn BallStrategy>, opts: QuadratureOptions) -> Result<Self> {
        opts.validate()?;
        let norm = kernel.ball_norm();
        if !strategy.supports(norm) {
            return Err(Error::Config(format!(
                "ball strategy '{}' cannot approximate {:?} balls",
                strategy.name(),
                norm
            )));
        }
        let profile = kernel.profile();
        let singular = profile.exponent != 0.0 || profile.tensorial;
        let channels = if profile.tensorial { 3 } else { 1 };
        Ok(PairIntegrator {
            delta: kernel.delta(),
            norm,
            profile,
            singular,
            channels,
            outer_regular: triangle_rule(opts.outer_degree)?,
            outer_composite: composite_rule(opts.singular_outer_levels, opts.singular_outer_degree)?,
            outer_touching: duffy_rule(
                opts.touching_points,
                opts.touching_points,
                opts.touching_grading,
                opts.touching_grading,
            ),
            gl_angle: gauss_legendre(opts.angular_points),
            gl_identical: gauss_legendre(opts.identical_points),
            kernel,
            strategy,
            opts,
        })
    }

    pub fn kernel(&self) -> &Arc<dyn Kernel> {
        &self.kernel
    }

    pub fn strategy(&self) -> &Arc<dyn BallStrategy> {
        &self.strategy
    }

    pub fn options(&self) -> &QuadratureOptions {
        &self.opts
    }

    pub fn components(&self) -> usize {
        self.kernel.components()
    }

    /// Local matrix of `∫_E ∫_{Ê∩B^h(x)}` (outer element `e`, inner `ehat`).
    pub fn integrate(&self, e: &Triangle, ehat: &Triangle) -> Result<LocalMatrix> {
        for t in [e, ehat] {
            if !(area(t) > 0.0) {
                return Err(Error::Geometry(format!("degenerate element {t:?}")));
            }
        }
        let shared: Vec<(usize, usize)> = (0..3)
            .flat_map(|a| (0..3).filter(move |&b| e[a] == ehat[b]).map(move |b| (a, b)))
            .collect();
        let contact = match shared.len() {
            0 => Contact::Disjoint,
            1 => Contact::Vertex,
            2 => Contact::Edge,
            3 => Contact::Identical,
            _ => return Err(Error::Geometry("elements share repeated vertices".into())),
        };
        let mut nodes: Vec<Point> = e.to_vec();
        for p in ehat {
            if !nodes.contains(p) {
                nodes.push(*p);
            }
        }
        let comps = self.components();
        let nd = nodes.len() * comps;
        let mut local = LocalMatrix { nodes, components: comps, values: vec![0.0; nd * nd] };
        if self.singular && contact == Contact::Identical {
            self.identical_pair(e, &mut local)?;
            return Ok(local);
        }
        let be = Barycentric::new(e);
        let bh = Barycentric::new(ehat);
        // Node u of the union: index in e and in ehat, if any.
        let in_e: Vec<Option<usize>> = local.nodes.iter().map(|p| e.iter().position(|q| q == p)).collect();
        let in_h: Vec<Option<usize>> = local.nodes.iter().map(|p| ehat.iter().position(|q| q == p)).collect();
        let grads: Vec<Point> = in_h.iter().map(|h| h.map_or([0.0; 2], |k| bh.gradient[k])).collect();

        let mut outer: Vec<(Point, f64)> = Vec::new();
        if !self.singular {
            outer.extend(self.outer_regular.map(e));
        } else {
            match contact {
                Contact::Disjoint => outer.extend(self.outer_composite.map(e)),
                Contact::Vertex => {
                    let (a, _) = shared[0];
                    let apex = [e[a], e[(a + 1) % 3], e[(a + 2) % 3]];
                    outer.extend(self.outer_touching.map(&apex));
                }
                Contact::Edge => {
                    let (a, b) = (shared[0].0, shared[1].0);
                    let c = 3 - a - b;
                    let m = scale(add(e[a], e[b]), 0.5);
                    outer.extend(self.outer_touching.map(&[e[a], m, e[c]]));
                    outer.extend(self.outer_touching.map(&[e[b], m, e[c]]));
                }
                Contact::Identical => unreachable!(),
            }
        }

        let mut subs: Vec<Triangle> = Vec::with_capacity(8);
        let mut mvals = vec![0.0; local.nodes.len()];
        for (x, w) in outer {
            subs.clear();
            self.strategy.intersect(ehat, x, self.delta, self.norm, &mut subs)?;
            if subs.is_empty() {
                continue;
            }
            let mut mom = Moments::default();
            for t in &subs {
                if self.singular {
                    self.radial_moments(t, x, &mut mom)?;
                } else {
                    polygon_moments(t, x, self.profile.scaling, &mut mom);
                }
            }
            for (u, m) in mvals.iter_mut().enumerate() {
                let he = in_h[u].map_or(0.0, |k| bh.eval(k, x));
                let ee = in_e[u].map_or(0.0, |k| be.eval(k, x));
                *m = he - ee;
            }
            self.accumulate(&mut local, &mvals, &grads, &mom, w);
        }
        mirror_upper(&mut local);
        Ok(local)
    }

    /// Adds `w Σ (m_u m_v Q0 + m_u g_v·Q1 + m_v g_u·Q1 + g_uᵀ Q2 g_v)` to the upper triangle.
    fn accumulate(&self, local: &mut LocalMatrix, m: &[f64], g: &[Point], mom: &Moments, w: f64) {
        let c = local.components;
        let nn = local.nodes.len();
        let nd = nn * c;
        let q = &mom.0;
        let channel = |a: usize, b: usize| if c == 1 { 0 } else { a + b };
        for iu in 0..nd {
            let (u, a) = (iu / c, iu % c);
            for jv in iu..nd {
                let (v, b) = (jv / c, jv % c);
                let ch = channel(a, b);
                let q0 = q[ch];
                let q1 = [q[3 + 2 * ch], q[4 + 2 * ch]];
                let q2 = [q[9 + 3 * ch], q[10 + 3 * ch], q[11 + 3 * ch]];
                let gu = g[u];
                let gv = g[v];
                let q2gv = [q2[0] * gv[0] + q2[1] * gv[1], q2[1] * gv[0] + q2[2] * gv[1]];
                let val = m[u] * m[v] * q0 + m[u] * dot(gv, q1) + m[v] * dot(gu, q1) + dot(gu, q2gv);
                local.values[iu * nd + jv] += w * val;
            }
        }
    }

    /// Polar moments of the kernel over triangle `t` around exterior point `x`.
    fn radial_moments(&self, t: &Triangle, x: Point, out: &mut Moments) -> Result<()> {
        let geo = PolarTriangle::new(t, x)?;
        let wholes = [0, 1].map(|s| {
            let (a, b) = (geo.angles[s], geo.angles[s + 1]);
            (b > a).then(|| self.sector(&geo, a, b))
        });
        let mut total = Moments::default();
        for w in wholes.iter().flatten() {
            total.add(w);
        }
        // Absolute target: sectors straddling a rounding-level kink never
        // reach a local relative tolerance.
        let target = self.opts.angular_tol * total.magnitude(geo.size);
        for (s, whole) in wholes.into_iter().enumerate() {
            if let Some(whole) = whole {
                self.adaptive_sector(&geo, geo.angles[s], geo.angles[s + 1], whole, target, 0, out);
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive_sector(
        &self,
        geo: &PolarTriangle,
        a: f64,
        b: f64,
        whole: Moments,
        target: f64,
        depth: usize,
        out: &mut Moments,
    ) {
        let mid = 0.5 * (a + b);
        let left = self.sector(geo, a, mid);
        let right = self.sector(geo, mid, b);
        let mut sum = left;
        sum.add(&right);
        let err = sum.distance(&whole, geo.size);
        if depth >= MAX_ANGULAR_DEPTH || err <= target {
            out.add(&sum);
            return;
        }
        self.adaptive_sector(geo, a, mid, left, target, depth + 1, out);
        self.adaptive_sector(geo, mid, b, right, target, depth + 1, out);
    }

    fn sector(&self, geo: &PolarTriangle, a: f64, b: f64) -> Moments {
        let mut m = Moments::default();
        let (nodes, weights) = &self.gl_angle;
        let beta = self.profile.exponent;
        let c = self.profile.scaling;
        let p0 = 2.0 - beta;
        let len = b - a;
        for (t, wt) in nodes.iter().zip(weights) {
            let th = a + len * t;
            let (s, co) = th.sin_cos();
            let u = [co * geo.e0[0] + s * geo.e1[0], co * geo.e0[1] + s * geo.e1[1]];
            let Some((lo, hi)) = geo.range(u) else { continue };
            let (lo_p, hi_p) = if lo > 0.0 { (lo.powf(p0), hi.powf(p0)) } else { (0.0, hi.powf(p0)) };
            let r0 = power_integral(lo, hi, lo_p, hi_p, p0);
            let r1 = power_integral(lo, hi, lo_p * lo, hi_p * hi, p0 + 1.0);
            let r2 = power_integral(lo, hi, lo_p * lo * lo, hi_p * hi * hi, p0 + 2.0);
            let w = c * len * wt;
            let uu = [u[0] * u[0], u[0] * u[1], u[1] * u[1]];
            for ch in 0..self.channels {
                let amp = if self.profile.tensorial { w * uu[ch] } else { w };
                m.0[ch] += amp * r0;
                m.0[3 + 2 * ch] += amp * u[0] * r1;
                m.0[4 + 2 * ch] += amp * u[1] * r1;
                m.0[9 + 3 * ch] += amp * uu[0] * r2;
                m.0[10 + 3 * ch] += amp * uu[1] * r2;
                m.0[11 + 3 * ch] += amp * uu[2] * r2;
            }
        }
        m
    }

    /// Identical pair via the covariogram `|E ∩ (E + z)| = |E| (1 − ρ(z))²`,
    /// `ρ(z) = Σ_k max(0, ∇λ_k·z)`, valid when `E ⊂ B^h(x)` for all `x ∈ E`.
    fn identical_pair(&self, e: &Triangle, local: &mut LocalMatrix) -> Result<()> {
        let f = self.norm.norm_fn();
        if diameter(e, f) > self.delta {
            return Err(Error::Geometry(
                "unsupported touching configuration: element larger than the horizon".into(),
            ));
        }
        for &x in e {
            let mut subs = Vec::new();
            self.strategy.intersect(e, x, self.delta, self.norm, &mut subs)?;
            if subs.len() != 1 || subs[0] != *e {
                return Err(Error::Geometry(
                    "unsupported touching configuration: ball approximation clips an identical pair".into(),
                ));
            }
        }
        let bary = Barycentric::new(e);
        let l = bary.gradient;
        let beta = self.profile.exponent;
        let mut cuts: Vec<f64> = Vec::with_capacity(6);
        for g in &l {
            let a = g[1].atan2(g[0]);
            for s in [-1.0, 1.0] {
                cuts.push((a + s * std::f64::consts::FRAC_PI_2).rem_euclid(2.0 * std::f64::consts::PI));
            }
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.push(cuts[0] + 2.0 * std::f64::consts::PI);
        // tensor[ch] = ∫ A_ch(θ) θθᵀ ρ(θ)^(β−4) dθ stored as (xx, xy, yy).
        let mut tensor = [[0.0f64; 3]; 3];
        let (nodes, weights) = &self.gl_identical;
        for s in 0..6 {
            let (a, b) = (cuts[s], cuts[s + 1]);
            if b <= a {
                continue;
            }
            for (t, wt) in nodes.iter().zip(weights) {
                let th = a + (b - a) * t;
                let u = [th.cos(), th.sin()];
                let rho: f64 = l.iter().map(|g| dot(*g, u).max(0.0)).sum();
                let w = (b - a) * wt * rho.powf(beta - 4.0);
                let uu = [u[0] * u[0], u[0] * u[1], u[1] * u[1]];
                for ch in 0..self.channels {
                    let amp = if self.profile.tensorial { w * uu[ch] } else { w };
                    for k in 0..3 {
                        tensor[ch][k] += amp * uu[k];
                    }
                }
            }
        }
        let factor = self.profile.scaling * area(e) * 2.0 / ((4.0 - beta) * (5.0 - beta) * (6.0 - beta));
        let c = local.components;
        let nd = local.dofs();
        for iu in 0..nd {
            let (u, a) = (iu / c, iu % c);
            for jv in iu..nd {
                let (v, b) = (jv / c, jv % c);
                let ch = if c == 1 { 0 } else { a + b };
                let q = tensor[ch];
                let gu = l[u];
                let gv = l[v];
                let val = gu[0] * (q[0] * gv[0] + q[1] * gv[1]) + gu[1] * (q[1] * gv[0] + q[2] * gv[1]);
                local.values[iu * nd + jv] = factor * val;
            }
        }
        mirror_upper(local);
        Ok(())
    }
}

fn mirror_upper(local: &mut LocalMatrix) {
    let nd = local.dofs();
    for i in 0..nd {
        for j in 0..i {
            local.values[i * nd + j] = local.values[j * nd + i];
        }
    }
}

/// Exact moments of a constant kernel over a triangle, relative to `x`.
fn polygon_moments(t: &Triangle, x: Point, c: f64, out: &mut Moments) {
    let p = [sub(t[0], x), sub(t[1], x), sub(t[2], x)];
    let a = area(t);
    let s = add(add(p[0], p[1]), p[2]);
    let ca = c * a;
    out.0[0] += ca;
    out.0[3] += ca * s[0] / 3.0;
    out.0[4] += ca * s[1] / 3.0;
    let k = ca / 12.0;
    let mut q = [s[0] * s[0], s[0] * s[1], s[1] * s[1]];
    for v in &p {
        q[0] += v[0] * v[0];
        q[1] += v[0] * v[1];
        q[2] += v[1] * v[1];
    }
    out.0[9] += k * q[0];
    out.0[10] += k * q[1];
    out.0[11] += k * q[2];
}

/// Ordered pair contribution `∫_E ∫_{Ê∩B^h(x)}` for one kernel and strategy.
pub fn assemble_pair(
    e: &Triangle,
    ehat: &Triangle,
    kernel: Arc<dyn Kernel>,
    strategy: Arc<dyn BallStrategy>,
    opts: &QuadratureOptions,
) -> Result<LocalMatrix> {
    PairIntegrator::new(kernel, strategy, opts.clone())?.integrate(e, ehat)
}

/// Vertices of a grid element relative to its own cell, in lattice units.
pub(crate) fn lattice_nodes(di: i32, dj: i32, t: usize) -> [[i32; 2]; 3] {
    if t == 0 {
        [[di, dj], [di + 1, dj], [di, dj + 1]]
    } else {
        [[di + 1, dj], [di + 1, dj + 1], [di, dj + 1]]
    }
}

fn lattice_triangle(di: i32, dj: i32, t: usize, h: f64) -> Triangle {
    lattice_nodes(di, dj, t).map(|p| [p[0] as f64 * h, p[1] as f64 * h])
}

/// Symmetric local matrix of one translation class.
#[derive(Clone, Debug)]
pub struct PairClass {
    /// Cell offset of the partner element.
    pub di: i32,
    pub dj: i32,
    /// Type of the partner element.
    pub t_hat: usize,
    /// Union vertices in lattice units relative to the first element's cell.
    pub nodes: Vec<[i32; 2]>,
    /// Row-major `dofs × dofs`, sum of both orderings of the pair.
    pub values: Vec<f64>,
}

/// All nonzero translation classes for a uniform grid.
///
/// `classes[t]` lists partners of an element of type `t` with a larger id:
/// later rows, later cells in the same row, or the upper triangle of the
/// same cell, plus the identical pair itself.
#[derive(Clone, Debug)]
pub struct PairTable {
    pub components: usize,
    pub spacing: f64,
    pub classes: [Vec<PairClass>; 2],
}

impl PairTable {
    pub fn build(integrator: &PairIntegrator, n: usize) -> Result<Self> {
        let h = 1.0 / n as f64;
        let delta = integrator.delta;
        let norm = integrator.norm;
        let reach = (delta / h).ceil() as i32 + 3;
        let mut classes: [Vec<PairClass>; 2] = [Vec::new(), Vec::new()];
        for (t, list) in classes.iter_mut().enumerate() {
            let e = lattice_triangle(0, 0, t, h);
            for dj in 0..=reach {
                for di in -reach..=reach {
                    for t_hat in 0..2 {
                        let later = dj > 0 || (dj == 0 && (di > 0 || (di == 0 && t_hat >= t)));
                        if !later {
                            continue;
                        }
                        let ehat = lattice_triangle(di, dj, t_hat, h);
                        if !elements_interact(&e, &ehat, delta, norm) {
                            continue;
                        }
                        let identical = di == 0 && dj == 0 && t_hat == t;
                        let mut m = integrator.integrate(&e, &ehat)?;
                        if !identical {
                            let back = integrator.integrate(&ehat, &e)?;
                            m.add_matched(&back)?;
                        }
                        if m.max_abs() == 0.0 {
                            continue;
                        }
                        let nodes = m
                            .nodes
                            .iter()
                            .map(|p| [(p[0] / h).round() as i32, (p[1] / h).round() as i32])
                            .collect();
                        list.push(PairClass { di, dj, t_hat, nodes, values: m.values });
                    }
                }
            }
        }
        Ok(PairTable { components: integrator.components(), spacing: h, classes })
    }

    pub fn num_classes(&self) -> usize {
        self.classes[0].len() + self.classes[1].len()
    }

    /// Lattice offsets between any two nodes coupled by some class.
    fn node_stencil(&self) -> Vec<[i32; 2]> {
        let mut set = std::collections::BTreeSet::new();
        for list in &self.classes {
            for c in list {
                for a in &c.nodes {
                    for b in &c.nodes {
                        set.insert((b[1] - a[1], b[0] - a[0]));
                    }
                }
            }
        }
        set.into_iter().map(|(dj, di)| [di, dj]).collect()
    }
}

/// Global system `A u_𝓘 = f − B g` over interior dofs.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub components: usize,
    /// Interior × interior stiffness.
    pub a: CsrMatrix,
    /// Interior × boundary coupling.
    pub b_coupling: CsrMatrix,
    /// Load over interior dofs.
    pub f: Vec<f64>,
    /// Dirichlet values over boundary dofs.
    pub g: Vec<f64>,
}

impl AssembledSystem {
    /// `f − B g`.
    pub fn rhs(&self) -> Vec<f64> {
        let bg = self.b_coupling.mul_vec(&self.g);
        self.f.iter().zip(&bg).map(|(a, b)| a - b).collect()
    }

    /// Writes `A.mtx`, `B.mtx`, `f.mtx` and `g.mtx` into `dir`.
    pub fn export_matrix_market(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_matrix_market(&dir.join("A.mtx"), &self.a)?;
        write_matrix_market(&dir.join("B.mtx"), &self.b_coupling)?;
        write_vector(&dir.join("f.mtx"), &self.f)?;
        write_vector(&dir.join("g.mtx"), &self.g)
    }
}

/// Subdomain blocks over `Ω_k` (interior) and `Γ_k` (interface) dofs.
#[derive(Clone, Debug)]
pub struct SubdomainSystem {
    pub k: usize,
    pub components: usize,
    /// Mesh nodes of `𝓘_k` then `𝓖_k`, each ascending.
    pub omega_nodes: Vec<usize>,
    pub gamma_nodes: Vec<usize>,
    /// Full matrix over `[Ω dofs, Γ dofs]`.
    pub a_full: CsrMatrix,
    pub a_oo: CsrMatrix,
    pub a_og: CsrMatrix,
    pub a_gg: CsrMatrix,
    /// Dirichlet-lifted load `f_k − B_k g` split into the two blocks.
    pub f_o: Vec<f64>,
    pub f_g: Vec<f64>,
}

impl SubdomainSystem {
    pub fn n_omega(&self) -> usize {
        self.omega_nodes.len() * self.components
    }
    pub fn n_gamma(&self) -> usize {
        self.gamma_nodes.len() * self.components
    }
}

const NONE: usize = usize::MAX;

/// Dof layout and pair filter for one scatter pass.
struct Target<'a> {
    free: &'a [usize],
    bdry: &'a [usize],
    nfree: usize,
    nbdry: usize,
    /// Pair weight; zero skips the pair.
    weight: &'a dyn Fn(usize, usize) -> f64,
}

struct Scattered {
    a: CsrMatrix,
    b: CsrMatrix,
}

fn build_pattern(mesh: &Mesh, stencil: &[[i32; 2]], index: &[usize], rows_free: &[usize], nrows: usize, ncols: usize, c: usize) -> CsrMatrix {
    let side = mesh.cells_per_side() as i32 + 1;
    let mut row_nodes = vec![NONE; nrows / c.max(1)];
    for (node, &r) in rows_free.iter().enumerate() {
        if r != NONE {
            row_nodes[r] = node;
        }
    }
    let mut indptr = Vec::with_capacity(nrows + 1);
    indptr.push(0);
    let mut indices = Vec::new();
    let mut cols: Vec<usize> = Vec::new();
    for &node in &row_nodes {
        let (i, j) = mesh.vertex_grid(node);
        cols.clear();
        for s in stencil {
            let (a, b) = (i as i32 + s[0], j as i32 + s[1]);
            if a < 0 || b < 0 || a >= side || b >= side {
                continue;
            }
            let q = (b * side + a) as usize;
            if index[q] != NONE {
                for comp in 0..c {
                    cols.push(index[q] * c + comp);
                }
            }
        }
        cols.sort_unstable();
        for _ in 0..c {
            indices.extend_from_slice(&cols);
            indptr.push(indices.len());
        }
    }
    let nnz = indices.len();
    CsrMatrix::new(nrows, ncols, indptr, indices, vec![0.0; nnz], false).expect("pattern is well formed")
}

fn scatter(mesh: &Mesh, table: &PairTable, target: &Target) -> Result<Scattered> {
    let c = table.components;
    let stencil = table.node_stencil();
    let est = target.nfree as f64 * c as f64 * c as f64 * stencil.len() as f64;
    if est > 4e9 {
        return Err(Error::Config(format!("estimated {est:.3e} matrix entries exceed the memory guard")));
    }
    let mut a = build_pattern(mesh, &stencil, target.free, target.free, target.nfree * c, target.nfree * c, c);
    let mut b = build_pattern(mesh, &stencil, target.bdry, target.free, target.nfree * c, target.nbdry * c, c);
    let side = mesh.cells_per_side() + 1;
    let regions = mesh.regions();
    let mut gnodes: Vec<usize> = Vec::with_capacity(6);
    for e in 0..mesh.num_elements() {
        let (i, j, t) = mesh.element_cell(e);
        for class in &table.classes[t] {
            let Some(eh) = mesh.element_at(i as isize + class.di as isize, j as isize + class.dj as isize, class.t_hat)
            else {
                continue;
            };
            if regions[e] == Region::Dirichlet && regions[eh] == Region::Dirichlet {
                continue;
            }
            let w = (target.weight)(e, eh);
            if w == 0.0 {
                continue;
            }
            gnodes.clear();
            gnodes.extend(class.nodes.iter().map(|p| (j as i32 + p[1]) as usize * side + (i as i32 + p[0]) as usize));
            let nd = gnodes.len() * c;
            for (u, &gu) in gnodes.iter().enumerate() {
                let ru = target.free[gu];
                if ru == NONE {
                    continue;
                }
                for (v, &gv) in gnodes.iter().enumerate() {
                    let (mat, cv) = if target.free[gv] != NONE {
                        (&mut a, target.free[gv])
                    } else if target.bdry[gv] != NONE {
                        (&mut b, target.bdry[gv])
                    } else {
                        continue;
                    };
                    for ca in 0..c {
                        let row = ru * c + ca;
                        for cb in 0..c {
                            let val = class.values[(u * c + ca) * nd + v * c + cb];
                            if val == 0.0 {
                                continue;
                            }
                            let pos = mat.position(row, cv * c + cb).ok_or_else(|| {
                                Error::Consistency("matrix pattern misses a coupled node".into())
                            })?;
                            mat.data_mut()[pos] += w * val;
                        }
                    }
                }
            }
        }
    }
    a.prune_zeros();
    b.prune_zeros();
    let a = CsrMatrix::new(a.nrows(), a.ncols(), a.indptr().to_vec(), a.indices().to_vec(), a.data().to_vec(), true)?;
    Ok(Scattered { a, b })
}

/// `∫ f ψ_p` over the interior elements, weighted per element.
fn load_vector(
    mesh: &Mesh,
    c: usize,
    free: &[usize],
    nfree: usize,
    source: Field,
    weight: &dyn Fn(usize) -> f64,
) -> Result<Vec<f64>> {
    let rule = triangle_rule(4)?;
    let mut f = vec![0.0; nfree * c];
    for (e, tri) in mesh.elements().iter().enumerate() {
        if mesh.region(e) != Region::Interior {
            continue;
        }
        let w = weight(e);
        if w == 0.0 {
            continue;
        }
        let t = mesh.triangle(e);
        for (l, (x, wq)) in rule.bary.iter().zip(rule.map(&t)) {
            let fx = source(x);
            for k in 0..3 {
                let r = free[tri[k]];
                if r == NONE {
                    continue;
                }
                for comp in 0..c {
                    f[r * c + comp] += w * wq * l[k] * fx[comp];
                }
            }
        }
    }
    Ok(f)
}

fn dirichlet_values(mesh: &Mesh, nodes: &[usize], c: usize, data: Field) -> Vec<f64> {
    let mut g = Vec::with_capacity(nodes.len() * c);
    for &v in nodes {
        let val = data(mesh.vertices()[v]);
        g.extend_from_slice(&val[..c]);
    }
    g
}

/// Assembles the single-domain system over all interacting element pairs.
pub fn assemble_global(mesh: &Mesh, table: &PairTable, source: Field, dirichlet: Field) -> Result<AssembledSystem> {
    check_table(mesh, table)?;
    let c = table.components;
    let mut free = vec![NONE; mesh.num_vertices()];
    let mut bdry = vec![NONE; mesh.num_vertices()];
    for v in 0..mesh.num_vertices() {
        match mesh.node_label(v) {
            NodeLabel::Interior => free[v] = mesh.node_slot(v),
            NodeLabel::Boundary => bdry[v] = mesh.node_slot(v),
        }
    }
    let unit = |_: usize, _: usize| 1.0;
    let target = Target {
        free: &free,
        bdry: &bdry,
        nfree: mesh.interior_nodes().len(),
        nbdry: mesh.boundary_nodes().len(),
        weight: &unit,
    };
    let s = scatter(mesh, table, &target)?;
    let f = load_vector(mesh, c, &free, target.nfree, source, &|_| 1.0)?;
    let g = dirichlet_values(mesh, mesh.boundary_nodes(), c, dirichlet);
    Ok(AssembledSystem { components: c, a: s.a, b_coupling: s.b, f, g })
}

fn check_table(mesh: &Mesh, table: &PairTable) -> Result<()> {
    if (table.spacing - mesh.spacing()).abs() > 1e-15 * mesh.spacing() {
        return Err(Error::Consistency("pair table was built for a different grid spacing".into()));
    }
    Ok(())
}

/// Assembles the `1/ζ`-weighted system of subdomain `k`.
pub fn assemble_subdomain(
    mesh: &Mesh,
    table: &PairTable,
    sub: &Subdivision,
    k: usize,
    source: Field,
    dirichlet: Field,
) -> Result<SubdomainSystem> {
    check_table(mesh, table)?;
    let c = table.components;
    let omega = sub.omega_nodes(k).to_vec();
    let gamma = sub.gamma_nodes(k).to_vec();
    let dir_nodes = sub.dirichlet_nodes(k).to_vec();
    let mut free = vec![NONE; mesh.num_vertices()];
    let mut bdry = vec![NONE; mesh.num_vertices()];
    for (idx, &v) in omega.iter().chain(&gamma).enumerate() {
        free[v] = idx;
    }
    for (idx, &v) in dir_nodes.iter().enumerate() {
        bdry[v] = idx;
    }
    // ζ(E, Ê) ≥ 1 whenever both elements lie in X_k.
    let weight = |e: usize, eh: usize| {
        if sub.element_in(k, e) && sub.element_in(k, eh) {
            1.0 / sub.zeta_elements(e, eh) as f64
        } else {
            0.0
        }
    };
    let nfree = omega.len() + gamma.len();
    let target = Target { free: &free, bdry: &bdry, nfree, nbdry: dir_nodes.len(), weight: &weight };
    let s = scatter(mesh, table, &target)?;
    let load_w = |e: usize| if sub.element_in(k, e) { 1.0 / sub.zeta_elements(e, e) as f64 } else { 0.0 };
    let f = load_vector(mesh, c, &free, nfree, source, &load_w)?;
    let g = dirichlet_values(mesh, &dir_nodes, c, dirichlet);
    let bg = s.b.mul_vec(&g);
    let lifted: Vec<f64> = f.iter().zip(&bg).map(|(a, b)| a - b).collect();
    let no = omega.len() * c;
    let nt = nfree * c;
    let o: Vec<usize> = (0..no).collect();
    let gi: Vec<usize> = (no..nt).collect();
    let a_oo = s.a.submatrix(&o, &o, true);
    let a_og = s.a.submatrix(&o, &gi, false);
    let a_gg = s.a.submatrix(&gi, &gi, true);
    Ok(SubdomainSystem {
        k,
        components: c,
        omega_nodes: omega,
        gamma_nodes: gamma,
        a_full: s.a,
        a_oo,
        a_og,
        a_gg,
        f_o: lifted[..no].to_vec(),
        f_g: lifted[no..].to_vec(),
    })
}
