//! Planar points, triangles and small polygon utilities.

pub type Point = [f64; 2];
pub type Triangle = [Point; 3];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm2(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn norm_inf(a: Point) -> f64 {
    a[0].abs().max(a[1].abs())
}

#[inline]
pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Twice the signed area; positive for counter-clockwise vertices.
#[inline]
pub fn signed_area2(t: &Triangle) -> f64 {
    cross(sub(t[1], t[0]), sub(t[2], t[0]))
}

#[inline]
pub fn area(t: &Triangle) -> f64 {
    0.5 * signed_area2(t).abs()
}

#[inline]
pub fn barycenter(t: &Triangle) -> Point {
    [
        (t[0][0] + t[1][0] + t[2][0]) / 3.0,
        (t[0][1] + t[1][1] + t[2][1]) / 3.0,
    ]
}

pub fn diameter(t: &Triangle, norm: fn(Point) -> f64) -> f64 {
    norm(sub(t[0], t[1]))
        .max(norm(sub(t[1], t[2])))
        .max(norm(sub(t[2], t[0])))
}

/// Largest distance from the barycenter to a vertex.
pub fn barycentric_radius(t: &Triangle, norm: fn(Point) -> f64) -> f64 {
    let b = barycenter(t);
    t.iter().map(|&v| norm(sub(v, b))).fold(0.0, f64::max)
}

/// Point at barycentric coordinates `l` (assumed to sum to one).
#[inline]
pub fn from_barycentric(t: &Triangle, l: [f64; 3]) -> Point {
    [
        l[0] * t[0][0] + l[1] * t[1][0] + l[2] * t[2][0],
        l[0] * t[0][1] + l[1] * t[1][1] + l[2] * t[2][1],
    ]
}

/// Affine barycentric functions `λ_a(y) = c_a + g_a·y` of a nondegenerate triangle.
#[derive(Clone, Copy, Debug)]
pub struct Barycentric {
    pub constant: [f64; 3],
    pub gradient: [Point; 3],
}

impl Barycentric {
    pub fn new(t: &Triangle) -> Self {
        let det = signed_area2(t);
        let mut gradient = [[0.0; 2]; 3];
        let mut constant = [0.0; 3];
        for a in 0..3 {
            let p = t[(a + 1) % 3];
            let q = t[(a + 2) % 3];
            // λ_a vanishes on the edge p-q and equals one at vertex a.
            let g = [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
            gradient[a] = g;
            constant[a] = -dot(g, p);
        }
        Barycentric { constant, gradient }
    }

    #[inline]
    pub fn eval(&self, a: usize, y: Point) -> f64 {
        self.constant[a] + dot(self.gradient[a], y)
    }
}

/// Clips a convex polygon against the half-plane `n·y ≤ c`.
pub fn clip_half_plane(poly: &[Point], n: Point, c: f64, out: &mut Vec<Point>) {
    out.clear();
    let len = poly.len();
    if len == 0 {
        return;
    }
    for i in 0..len {
        let p = poly[i];
        let q = poly[(i + 1) % len];
        let fp = dot(n, p) - c;
        let fq = dot(n, q) - c;
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push(lerp(p, q, t));
        }
    }
}

/// Fan triangulation of a convex polygon; drops slivers below `min_area`.
pub fn fan_triangulate(poly: &[Point], min_area: f64, out: &mut Vec<Triangle>) {
    if poly.len() < 3 {
        return;
    }
    for i in 1..poly.len() - 1 {
        let t = [poly[0], poly[i], poly[i + 1]];
        if area(&t) > min_area {
            out.push(t);
        }
    }
}

/// Whether `y` lies in the closed triangle, with absolute tolerance `tol` on barycentrics.
pub fn triangle_contains(t: &Triangle, y: Point, tol: f64) -> bool {
    let b = Barycentric::new(t);
    (0..3).all(|a| b.eval(a, y) >= -tol)
}
