//! Structured criss-cross triangulations of `[-δ, 1+δ]²`.
//!
//! Grid lines sit at `(i - m)/n` for `i = 0..=n+2m`, where `m = δn` is the
//! number of cells in the interaction layer. Every square cell is split along
//! the same anti-diagonal into a lower triangle `(v00, v10, v01)` and an
//! upper triangle `(v10, v11, v01)`, both counter-clockwise.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{area, Point, Triangle};
use crate::kernels::BallNorm;
use crate::quadrature::triangle_rule;

/// Region of an element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    /// Inside the open unit square.
    Interior,
    /// In the Dirichlet interaction layer.
    Dirichlet,
}

/// Label of a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    /// Strictly inside the unit square; carries a degree of freedom.
    Interior,
    /// On the closed interaction layer; carries Dirichlet data.
    Boundary,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    n: usize,
    layer: usize,
    delta: f64,
    ball_norm: BallNorm,
    vertices: Vec<Point>,
    elements: Vec<[usize; 3]>,
    regions: Vec<Region>,
    node_labels: Vec<NodeLabel>,
    h: f64,
    adjacency: Vec<Vec<usize>>,
    interior_nodes: Vec<usize>,
    boundary_nodes: Vec<usize>,
    /// Position of each node within `interior_nodes` or `boundary_nodes`.
    node_slot: Vec<usize>,
}

/// Builds the triangulation with `n` cells per unit length and horizon `delta`.
pub fn build_structured_mesh(n: usize, delta: f64, ball_norm: BallNorm) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::Config(format!("mesh needs n >= 2, got {n}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Config(format!("horizon must be positive, got {delta}")));
    }
    let layer_f = delta * n as f64;
    let layer = layer_f.round();
    if layer < 1.0 || (layer_f - layer).abs() > 1e-9 * layer_f.max(1.0) {
        return Err(Error::Config(format!(
            "delta*n must be a positive integer, got {delta}*{n} = {layer_f}"
        )));
    }
    let layer = layer as usize;
    let cells = n + 2 * layer;
    let nv = cells + 1;
    let nf = n as f64;
    let coord = |i: usize| (i as f64 - layer as f64) / nf;

    let mut vertices = Vec::with_capacity(nv * nv);
    let mut node_labels = Vec::with_capacity(nv * nv);
    for j in 0..nv {
        for i in 0..nv {
            vertices.push([coord(i), coord(j)]);
            let inside = i > layer && i < layer + n && j > layer && j < layer + n;
            node_labels.push(if inside { NodeLabel::Interior } else { NodeLabel::Boundary });
        }
    }

    let mut elements = Vec::with_capacity(2 * cells * cells);
    let mut regions = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let v00 = j * nv + i;
            let v10 = v00 + 1;
            let v01 = v00 + nv;
            let v11 = v01 + 1;
            let inside = i >= layer && i < layer + n && j >= layer && j < layer + n;
            let region = if inside { Region::Interior } else { Region::Dirichlet };
            elements.push([v00, v10, v01]);
            elements.push([v10, v11, v01]);
            regions.push(region);
            regions.push(region);
        }
    }

    let mut interior_nodes = Vec::new();
    let mut boundary_nodes = Vec::new();
    let mut node_slot = vec![0; vertices.len()];
    for (v, label) in node_labels.iter().enumerate() {
        match label {
            NodeLabel::Interior => {
                node_slot[v] = interior_nodes.len();
                interior_nodes.push(v);
            }
            NodeLabel::Boundary => {
                node_slot[v] = boundary_nodes.len();
                boundary_nodes.push(v);
            }
        }
    }

    let adjacency = edge_adjacency(&elements, vertices.len());
    Ok(Mesh {
        n,
        layer,
        delta,
        ball_norm,
        vertices,
        elements,
        regions,
        node_labels,
        h: std::f64::consts::SQRT_2 / nf,
        adjacency,
        interior_nodes,
        boundary_nodes,
        node_slot,
    })
}

fn edge_adjacency(elements: &[[usize; 3]], _nv: usize) -> Vec<Vec<usize>> {
    let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (e, tri) in elements.iter().enumerate() {
        for a in 0..3 {
            let (p, q) = (tri[a], tri[(a + 1) % 3]);
            edges.entry((p.min(q), p.max(q))).or_default().push(e);
        }
    }
    let mut adjacency = vec![Vec::new(); elements.len()];
    for owners in edges.values() {
        if let [a, b] = owners[..] {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    adjacency
}

impl Mesh {
    /// Cells per unit length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cells across the interaction layer.
    pub fn layer(&self) -> usize {
        self.layer
    }

    /// Cells per side of the full grid.
    pub fn cells_per_side(&self) -> usize {
        self.n + 2 * self.layer
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn ball_norm(&self) -> BallNorm {
        self.ball_norm
    }

    /// Grid spacing `1/n`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn region(&self, e: usize) -> Region {
        self.regions[e]
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn node_label(&self, v: usize) -> NodeLabel {
        self.node_labels[v]
    }

    pub fn node_labels(&self) -> &[NodeLabel] {
        &self.node_labels
    }

    /// Nodes of the index set 𝓘 in increasing id order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    /// Nodes of the index set 𝓑 in increasing id order.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Position of node `v` within its label's node list.
    pub fn node_slot(&self, v: usize) -> usize {
        self.node_slot[v]
    }

    pub fn triangle(&self, e: usize) -> Triangle {
        let [a, b, c] = self.elements[e];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Grid cell `(i, j)` and type (0 lower, 1 upper) of element `e`.
    pub fn element_cell(&self, e: usize) -> (usize, usize, usize) {
        let c = e / 2;
        let side = self.cells_per_side();
        (c % side, c / side, e % 2)
    }

    /// Element id of cell `(i, j)` with type `t`, if the cell exists.
    pub fn element_at(&self, i: isize, j: isize, t: usize) -> Option<usize> {
        let side = self.cells_per_side() as isize;
        if i < 0 || j < 0 || i >= side || j >= side {
            return None;
        }
        Some(2 * (j as usize * side as usize + i as usize) + t)
    }

    /// Grid indices of vertex `v`.
    pub fn vertex_grid(&self, v: usize) -> (usize, usize) {
        let nv = self.cells_per_side() + 1;
        (v % nv, v / nv)
    }

    /// Edge-sharing neighbours of every element, sorted by id.
    pub fn element_adjacency_graph(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    /// `‖u_h − u‖_{L²(Ω̂)}` for nodal coefficients over all nodes.
    ///
    /// `coeffs` holds `components` interleaved entries per node; `exact`
    /// returns the exact field with unused components ignored.
    pub fn l2_error(
        &self,
        coeffs: &[f64],
        components: usize,
        exact: &dyn Fn(Point) -> [f64; 2],
    ) -> Result<f64> {
        if !(1..=2).contains(&components) || coeffs.len() != components * self.num_vertices() {
            return Err(Error::Dimension(format!(
                "expected {} coefficients ({} per node), got {}",
                components * self.num_vertices(),
                components,
                coeffs.len()
            )));
        }
        // Degree 6 integrates the squared error of a P1 interpolant of a cubic exactly.
        let rule = triangle_rule(6)?;
        let mut total = 0.0;
        for (e, tri) in self.elements.iter().enumerate() {
            if self.regions[e] != Region::Interior {
                continue;
            }
            let t = self.triangle(e);
            let a = area(&t);
            for (l, w) in rule.bary.iter().zip(&rule.weights) {
                let x = crate::geometry::from_barycentric(&t, *l);
                let u = exact(x);
                for c in 0..components {
                    // Anchored at vertex 0 so constants are reproduced exactly.
                    let v0 = coeffs[components * tri[0] + c];
                    let uh = v0
                        + l[1] * (coeffs[components * tri[1] + c] - v0)
                        + l[2] * (coeffs[components * tri[2] + c] - v0);
                    let d = uh - u[c];
                    total += w * a * d * d;
                }
            }
        }
        Ok(total.sqrt())
    }

    /// Writes the plain-text dump: a count line, then `x y label` per vertex
    /// and `i j k label` per element.
    pub fn write_text(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.vertices.len(), self.elements.len())?;
        for (p, l) in self.vertices.iter().zip(&self.node_labels) {
            let label = match l {
                NodeLabel::Interior => "interior",
                NodeLabel::Boundary => "boundary",
            };
            writeln!(out, "{:.17e} {:.17e} {}", p[0], p[1], label)?;
        }
        for (t, r) in self.elements.iter().zip(&self.regions) {
            let label = match r {
                Region::Interior => "omega",
                Region::Dirichlet => "dirichlet",
            };
            writeln!(out, "{} {} {} {}", t[0], t[1], t[2], label)?;
        }
        Ok(())
    }
}
