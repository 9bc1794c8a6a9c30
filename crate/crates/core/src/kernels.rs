//! Kernel families, approximate interaction balls and interaction predicates.
//!
//! Every kernel has the form `φ(z) = c · |z|^(−β) · A(z/|z|)` on the ball
//! `|z|_p ≤ δ`, where `A` is either the scalar one or the rank-one tensor
//! `ẑ ⊗ ẑ`. Assembly relies only on this radial profile.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{
    area, barycenter, barycentric_radius, clip_half_plane, diameter, dot, fan_triangulate, norm2,
    norm_inf, sub, Point, Triangle,
};
use crate::registry::Registry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BallNorm {
    L2,
    Linf,
}

impl BallNorm {
    pub fn norm_fn(self) -> fn(Point) -> f64 {
        match self {
            BallNorm::L2 => norm2,
            BallNorm::Linf => norm_inf,
        }
    }

    #[inline]
    pub fn norm(self, z: Point) -> f64 {
        (self.norm_fn())(z)
    }
}

/// Kernel value at a point pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelValue {
    Scalar(f64),
    Tensor([[f64; 2]; 2]),
}

/// Radial description `c |z|^(−β) A(ẑ)` used by the quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialProfile {
    pub scaling: f64,
    pub exponent: f64,
    pub tensorial: bool,
}

/// Parameters from which a kernel family is instantiated.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub family: String,
    pub delta: f64,
    /// Fractional exponent; ignored by families that do not use it.
    pub s: f64,
}

pub trait Kernel: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    fn delta(&self) -> f64;
    fn ball_norm(&self) -> BallNorm;
    /// Unknowns per node: 1 for scalar kernels, 2 for tensorial ones.
    fn components(&self) -> usize;
    fn profile(&self) -> RadialProfile;
    /// Ball strategy used when the configuration names none.
    fn default_strategy(&self) -> &'static str;

    fn scaling(&self) -> f64 {
        self.profile().scaling
    }

    /// Kernel times the indicator of the exact ball.
    fn evaluate(&self, x: Point, y: Point) -> Result<KernelValue> {
        let z = sub(y, x);
        let p = self.profile();
        let zero = if p.tensorial { KernelValue::Tensor([[0.0; 2]; 2]) } else { KernelValue::Scalar(0.0) };
        if self.ball_norm().norm(z) > self.delta() {
            return Ok(zero);
        }
        let r2 = z[0] * z[0] + z[1] * z[1];
        if p.exponent != 0.0 && r2 == 0.0 {
            return Err(Error::Domain(format!("{} kernel is singular at x = y", self.name())));
        }
        let r = r2.sqrt();
        let radial = if p.exponent == 0.0 { p.scaling } else { p.scaling * r.powf(-p.exponent) };
        Ok(if p.tensorial {
            let s = radial / r2;
            KernelValue::Tensor([[s * z[0] * z[0], s * z[0] * z[1]], [s * z[1] * z[0], s * z[1] * z[1]]])
        } else {
            KernelValue::Scalar(radial)
        })
    }
}

/// The closed-form scaling constant of a family.
pub fn scaling_constant(family: &str, delta: f64, s: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {delta}")));
    }
    match family {
        "constant" => Ok(3.0 / (4.0 * delta.powi(4))),
        "fractional" => {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::Config(format!("fractional exponent must lie in (0,1), got {s}")));
            }
            Ok((2.0 - 2.0 * s) / (std::f64::consts::PI * delta.powf(2.0 - 2.0 * s)))
        }
        "peridynamic" => Ok(3.0 / delta.powi(3)),
        other => Err(Error::Config(format!("unknown kernel family '{other}'"))),
    }
}

/// Constant kernel on the ℓ∞ ball.
#[derive(Clone, Debug)]
pub struct ConstantKernel {
    delta: f64,
    scaling: f64,
}

impl ConstantKernel {
    pub fn new(delta: f64) -> Result<Self> {
        Ok(ConstantKernel { delta, scaling: scaling_constant("constant", delta, 0.0)? })
    }
}

impl Kernel for ConstantKernel {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn ball_norm(&self) -> BallNorm {
        BallNorm::Linf
    }
    fn components(&self) -> usize {
        1
    }
    fn profile(&self) -> RadialProfile {
        RadialProfile { scaling: self.scaling, exponent: 0.0, tensorial: false }
    }
    fn default_strategy(&self) -> &'static str {
        "exact_linf"
    }
}

/// Truncated fractional kernel `|z|^(−2−2s)` on the ℓ² ball.
#[derive(Clone, Debug)]
pub struct FractionalKernel {
    delta: f64,
    s: f64,
    scaling: f64,
}

impl FractionalKernel {
    pub fn new(delta: f64, s: f64) -> Result<Self> {
        Ok(FractionalKernel { delta, s, scaling: scaling_constant("fractional", delta, s)? })
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

impl Kernel for FractionalKernel {
    fn name(&self) -> &'static str {
        "fractional"
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn ball_norm(&self) -> BallNorm {
        BallNorm::L2
    }
    fn components(&self) -> usize {
        1
    }
    fn profile(&self) -> RadialProfile {
        RadialProfile { scaling: self.scaling, exponent: 2.0 + 2.0 * self.s, tensorial: false }
    }
    fn default_strategy(&self) -> &'static str {
        "approxcaps"
    }
}

/// Bond-based peridynamic kernel `z ⊗ z / |z|³` on the ℓ² ball.
#[derive(Clone, Debug)]
pub struct PeridynamicKernel {
    delta: f64,
    scaling: f64,
}

impl PeridynamicKernel {
    pub fn new(delta: f64) -> Result<Self> {
        Ok(PeridynamicKernel { delta, scaling: scaling_constant("peridynamic", delta, 0.0)? })
    }
}

impl Kernel for PeridynamicKernel {
    fn name(&self) -> &'static str {
        "peridynamic"
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn ball_norm(&self) -> BallNorm {
        BallNorm::L2
    }
    fn components(&self) -> usize {
        2
    }
    fn profile(&self) -> RadialProfile {
        RadialProfile { scaling: self.scaling, exponent: 1.0, tensorial: true }
    }
    fn default_strategy(&self) -> &'static str {
        "approxcaps"
    }
}

pub type KernelFactory = fn(&KernelSpec) -> Result<Arc<dyn Kernel>>;

/// Registry with the constant, fractional and peridynamic families.
pub fn kernel_registry() -> Registry<KernelFactory> {
    let mut r: Registry<KernelFactory> = Registry::new("kernel family");
    r.register("constant", |s| Ok(Arc::new(ConstantKernel::new(s.delta)?)));
    r.register("fractional", |s| Ok(Arc::new(FractionalKernel::new(s.delta, s.s)?)));
    r.register("peridynamic", |s| Ok(Arc::new(PeridynamicKernel::new(s.delta)?)));
    r
}

/// Instantiates a kernel from the default registry.
pub fn create_kernel(spec: &KernelSpec) -> Result<Arc<dyn Kernel>> {
    let registry = kernel_registry();
    let factory = registry.get(&spec.family)?;
    factory(spec)
}

/// Approximation of `element ∩ B_δ(center)` by sub-triangles.
pub trait BallStrategy: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    fn supports(&self, norm: BallNorm) -> bool;
    /// Appends the sub-triangles to `out`.
    fn intersect(
        &self,
        element: &Triangle,
        center: Point,
        delta: f64,
        norm: BallNorm,
        out: &mut Vec<Triangle>,
    ) -> Result<()>;
}

fn check_element(t: &Triangle) -> Result<f64> {
    let a = area(t);
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Geometry(format!("degenerate element {t:?}")));
    }
    Ok(a)
}

fn incompatible(strategy: &str, norm: BallNorm) -> Error {
    Error::Config(format!("ball strategy '{strategy}' cannot approximate {norm:?} balls"))
}

/// Exact clipping against the ℓ∞ square.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactLinf;

impl BallStrategy for ExactLinf {
    fn name(&self) -> &'static str {
        "exact_linf"
    }
    fn supports(&self, norm: BallNorm) -> bool {
        norm == BallNorm::Linf
    }
    fn intersect(&self, t: &Triangle, c: Point, delta: f64, norm: BallNorm, out: &mut Vec<Triangle>) -> Result<()> {
        if norm != BallNorm::Linf {
            return Err(incompatible(self.name(), norm));
        }
        let a = check_element(t)?;
        if t.iter().all(|&v| norm_inf(sub(v, c)) <= delta) {
            out.push(*t);
            return Ok(());
        }
        let mut poly: Vec<Point> = t.to_vec();
        let mut next = Vec::with_capacity(8);
        let planes = [
            ([1.0, 0.0], c[0] + delta),
            ([-1.0, 0.0], -(c[0] - delta)),
            ([0.0, 1.0], c[1] + delta),
            ([0.0, -1.0], -(c[1] - delta)),
        ];
        for (n, off) in planes {
            clip_half_plane(&poly, n, off, &mut next);
            std::mem::swap(&mut poly, &mut next);
            if poly.is_empty() {
                return Ok(());
            }
        }
        fan_triangulate(&poly, 1e-14 * a, out);
        Ok(())
    }
}

/// Whole element iff its barycenter lies in the exact ball.
#[derive(Clone, Copy, Debug, Default)]
pub struct BarycenterBall;

impl BallStrategy for BarycenterBall {
    fn name(&self) -> &'static str {
        "barycenter"
    }
    fn supports(&self, _norm: BallNorm) -> bool {
        true
    }
    fn intersect(&self, t: &Triangle, c: Point, delta: f64, norm: BallNorm, out: &mut Vec<Triangle>) -> Result<()> {
        check_element(t)?;
        if norm.norm(sub(barycenter(t), c)) <= delta {
            out.push(*t);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Vertex,
    Entry,
    Exit,
}

/// Vertices of the chord polygon of `t ∩ B₂(c, δ)` in counter-clockwise order.
fn chord_polygon(t: &Triangle, c: Point, delta: f64, pts: &mut Vec<(Point, Kind)>) -> Result<()> {
    pts.clear();
    let d2 = delta * delta;
    for a in 0..3 {
        let p = t[a];
        let q = t[(a + 1) % 3];
        let pc = sub(p, c);
        let d = sub(q, p);
        let cc = dot(pc, pc) - d2;
        if cc <= 0.0 {
            pts.push((p, Kind::Vertex));
        }
        let qa = dot(d, d);
        let qb = 2.0 * dot(d, pc);
        let disc = qb * qb - 4.0 * qa * cc;
        // Dimensionless discriminant: squared half-chord over δ², floored at 1e−14.
        if disc / (4.0 * qa * d2) <= 1e-14 {
            continue;
        }
        let sq = disc.sqrt();
        // Numerically stable roots of qa t² + qb t + cc.
        let k = -0.5 * (qb + qb.signum() * sq);
        let (mut t1, mut t2) = if k != 0.0 { (k / qa, cc / k) } else { ((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)) };
        if t1 > t2 {
            std::mem::swap(&mut t1, &mut t2);
        }
        for (tr, kind) in [(t1, Kind::Entry), (t2, Kind::Exit)] {
            if tr > 0.0 && tr < 1.0 {
                pts.push(([p[0] + tr * d[0], p[1] + tr * d[1]], kind));
            }
        }
    }
    if pts.is_empty() && crate::geometry::triangle_contains(t, c, 0.0) {
        return Err(Error::Geometry("ball lies strictly inside the element; horizon too small".into()));
    }
    Ok(())
}

fn chord_and_caps(
    t: &Triangle,
    c: Point,
    delta: f64,
    caps: bool,
    out: &mut Vec<Triangle>,
) -> Result<()> {
    let a = check_element(t)?;
    if t.iter().all(|&v| norm2(sub(v, c)) <= delta) {
        out.push(*t);
        return Ok(());
    }
    let mut pts = Vec::with_capacity(9);
    chord_polygon(t, c, delta, &mut pts)?;
    let poly: Vec<Point> = pts.iter().map(|p| p.0).collect();
    let min_area = 1e-14 * a;
    fan_triangulate(&poly, min_area, out);
    if caps {
        let len = pts.len();
        for k in 0..len {
            let (pa, ka) = pts[k];
            let (pb, kb) = pts[(k + 1) % len];
            if ka != Kind::Exit || kb != Kind::Entry {
                continue;
            }
            let ra = sub(pa, c);
            let rb = sub(pb, c);
            let mut phi = crate::geometry::cross(ra, rb).atan2(dot(ra, rb));
            if phi < 0.0 {
                phi += 2.0 * std::f64::consts::PI;
            }
            let (s, co) = (0.5 * phi).sin_cos();
            let mid = [c[0] + co * ra[0] - s * ra[1], c[1] + s * ra[0] + co * ra[1]];
            // Rescale onto the circle to undo rounding in ra.
            let rm = sub(mid, c);
            let f = delta / norm2(rm);
            let mid = [c[0] + f * rm[0], c[1] + f * rm[1]];
            let cap = [pa, mid, pb];
            if area(&cap) > min_area {
                out.push(cap);
            }
        }
    }
    Ok(())
}

/// Element clipped to the inscribed chord polygon; circular caps omitted.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoCaps;

impl BallStrategy for NoCaps {
    fn name(&self) -> &'static str {
        "nocaps"
    }
    fn supports(&self, norm: BallNorm) -> bool {
        norm == BallNorm::L2
    }
    fn intersect(&self, t: &Triangle, c: Point, delta: f64, norm: BallNorm, out: &mut Vec<Triangle>) -> Result<()> {
        if norm != BallNorm::L2 {
            return Err(incompatible(self.name(), norm));
        }
        chord_and_caps(t, c, delta, false, out)
    }
}

/// Chord polygon plus one triangle per cap with apex at the arc midpoint.
#[derive(Clone, Copy, Debug, Default)]
pub struct ApproxCaps;

impl BallStrategy for ApproxCaps {
    fn name(&self) -> &'static str {
        "approxcaps"
    }
    fn supports(&self, norm: BallNorm) -> bool {
        norm == BallNorm::L2
    }
    fn intersect(&self, t: &Triangle, c: Point, delta: f64, norm: BallNorm, out: &mut Vec<Triangle>) -> Result<()> {
        if norm != BallNorm::L2 {
            return Err(incompatible(self.name(), norm));
        }
        chord_and_caps(t, c, delta, true, out)
    }
}

/// Registry with the four built-in ball strategies.
pub fn ball_registry() -> Registry<Arc<dyn BallStrategy>> {
    let mut r: Registry<Arc<dyn BallStrategy>> = Registry::new("ball strategy");
    r.register("exact_linf", Arc::new(ExactLinf));
    r.register("barycenter", Arc::new(BarycenterBall));
    r.register("nocaps", Arc::new(NoCaps));
    r.register("approxcaps", Arc::new(ApproxCaps));
    r
}

/// Looks up a strategy and checks it can handle the kernel's ball norm.
pub fn create_strategy(name: &str, norm: BallNorm) -> Result<Arc<dyn BallStrategy>> {
    let s = ball_registry().get(name)?.clone();
    if !s.supports(norm) {
        return Err(incompatible(name, norm));
    }
    Ok(s)
}

/// Convenience wrapper returning the sub-triangles as a vector.
pub fn ball_element_intersection(
    element: &Triangle,
    center: Point,
    delta: f64,
    norm: BallNorm,
    strategy: &dyn BallStrategy,
) -> Result<Vec<Triangle>> {
    let mut out = Vec::new();
    strategy.intersect(element, center, delta, norm, &mut out)?;
    Ok(out)
}

/// Barycenter criterion `|b_E − b_Ê| ≤ δ + slack` in the ball norm.
///
/// The slack is the larger of the pair's maximum diameter and the sum of the
/// barycenter-to-vertex radii; the latter makes the predicate a superset of
/// true interaction by the triangle inequality.
pub fn elements_interact(e: &Triangle, ehat: &Triangle, delta: f64, norm: BallNorm) -> bool {
    let f = norm.norm_fn();
    let h_pair = diameter(e, f).max(diameter(ehat, f));
    let slack = h_pair.max(barycentric_radius(e, f) + barycentric_radius(ehat, f));
    f(sub(barycenter(e), barycenter(ehat))) <= delta + slack
}
