//! Structured triangulation of the unit disk with boundary trace structure,
//! quadrature rules, and discrete norms.
//!
//! The mesh is a concentric-ring fan: one center node, `n_rings` rings of
//! `n_sectors` nodes each. Domain integrals use the 3-point edge-midpoint
//! triangle rule (exact for quadratics); boundary integrals use the
//! trapezoid rule on the boundary polygon, which is node-diagonal.

use crate::error::{Error, Result};

/// Triangulation of the unit disk.
#[derive(Debug, Clone)]
pub struct DiskMesh {
    pub nodes: Vec<[f64; 2]>,
    /// Node-index triples, counter-clockwise (positive signed area).
    pub triangles: Vec<[usize; 3]>,
    /// Ordered closed polygon of boundary node pairs.
    pub boundary_edges: Vec<[usize; 2]>,
    /// Global indices of boundary nodes, in polygon order.
    pub boundary_nodes: Vec<usize>,
    /// Maximum element diameter.
    pub h: f64,
    pub n_rings: usize,
    pub n_sectors: usize,
    /// Trapezoid weight of each boundary node (all equal on this mesh).
    boundary_weights: Vec<f64>,
    /// Lumped P1 mass (one third of the adjacent-triangle area sum).
    lumped_mass: Vec<f64>,
}

/// Nodal real-valued function on the closed disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
}

/// Nodal real-valued function on the boundary circle.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFunction {
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(mesh: &DiskMesh) -> Self {
        Field {
            values: vec![0.0; mesh.nodes.len()],
        }
    }

    pub fn constant(mesh: &DiskMesh, c: f64) -> Self {
        Field {
            values: vec![c; mesh.nodes.len()],
        }
    }

    pub fn from_fn(mesh: &DiskMesh, f: impl Fn(f64, f64) -> f64) -> Self {
        Field {
            values: mesh.nodes.iter().map(|p| f(p[0], p[1])).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl BoundaryFunction {
    pub fn zeros(mesh: &DiskMesh) -> Self {
        BoundaryFunction {
            values: vec![0.0; mesh.boundary_nodes.len()],
        }
    }

    pub fn constant(mesh: &DiskMesh, c: f64) -> Self {
        BoundaryFunction {
            values: vec![c; mesh.boundary_nodes.len()],
        }
    }

    /// Evaluate a function of the boundary angle at every boundary node.
    pub fn from_angle_fn(mesh: &DiskMesh, f: impl Fn(f64) -> f64) -> Self {
        BoundaryFunction {
            values: mesh
                .boundary_nodes
                .iter()
                .map(|&i| {
                    let p = mesh.nodes[i];
                    f(p[1].atan2(p[0]))
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Build the concentric-ring fan triangulation.
///
/// Node count is `1 + n_rings * n_sectors`; the outermost ring is the
/// boundary polygon inscribed in the unit circle.
pub fn build_disk_mesh(n_rings: usize, n_sectors: usize) -> Result<DiskMesh> {
    if n_rings == 0 {
        return Err(Error::InvalidParameter("n_rings must be at least 1".into()));
    }
    if n_sectors < 3 {
        return Err(Error::InvalidParameter(
            "n_sectors must be at least 3".into(),
        ));
    }

    let mut nodes = Vec::with_capacity(1 + n_rings * n_sectors);
    nodes.push([0.0, 0.0]);
    for ring in 1..=n_rings {
        let r = ring as f64 / n_rings as f64;
        for s in 0..n_sectors {
            let a = 2.0 * std::f64::consts::PI * s as f64 / n_sectors as f64;
            nodes.push([r * a.cos(), r * a.sin()]);
        }
    }

    let idx = |ring: usize, s: usize| -> usize {
        debug_assert!(ring >= 1);
        1 + (ring - 1) * n_sectors + (s % n_sectors)
    };

    let mut triangles = Vec::with_capacity(n_sectors * (2 * n_rings - 1));
    for s in 0..n_sectors {
        triangles.push([0, idx(1, s), idx(1, s + 1)]);
    }
    for ring in 1..n_rings {
        for s in 0..n_sectors {
            triangles.push([idx(ring, s), idx(ring + 1, s), idx(ring + 1, s + 1)]);
            triangles.push([idx(ring, s), idx(ring + 1, s + 1), idx(ring, s + 1)]);
        }
    }

    let boundary_nodes: Vec<usize> = (0..n_sectors).map(|s| idx(n_rings, s)).collect();
    let boundary_edges: Vec<[usize; 2]> = (0..n_sectors)
        .map(|s| [idx(n_rings, s), idx(n_rings, s + 1)])
        .collect();

    let mut h: f64 = 0.0;
    for tri in &triangles {
        for k in 0..3 {
            let a = nodes[tri[k]];
            let b = nodes[tri[(k + 1) % 3]];
            h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
        }
    }

    let mut lumped_mass = vec![0.0; nodes.len()];
    for tri in &triangles {
        let area = triangle_area(&nodes, tri);
        for &v in tri {
            lumped_mass[v] += area / 3.0;
        }
    }

    let boundary_weights: Vec<f64> = boundary_edges
        .iter()
        .map(|_| {
            // equal chords on the inscribed regular polygon
            2.0 * (std::f64::consts::PI / n_sectors as f64).sin()
        })
        .collect();

    Ok(DiskMesh {
        nodes,
        triangles,
        boundary_edges,
        boundary_nodes,
        h,
        n_rings,
        n_sectors,
        boundary_weights,
        lumped_mass,
    })
}

pub fn triangle_area(nodes: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = [nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]];
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl DiskMesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary_nodes.len()
    }

    /// Trapezoid quadrature weight of boundary node `b` (local index).
    pub fn boundary_weight(&self, b: usize) -> f64 {
        self.boundary_weights[b]
    }

    /// Lumped P1 mass of global node `i`.
    pub fn lumped_mass(&self, i: usize) -> f64 {
        self.lumped_mass[i]
    }

    /// Total boundary measure: the inscribed-polygon perimeter
    /// `2 n sin(pi/n)`.
    pub fn boundary_measure(&self) -> f64 {
        self.boundary_weights.iter().sum()
    }

    /// Total domain measure (sum of triangle areas).
    pub fn domain_measure(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| triangle_area(&self.nodes, t))
            .sum()
    }

    /// Integrate over the domain with the 3-point midpoint rule.
    ///
    /// `f` receives the quadrature point and the P1-interpolated values of
    /// each field in `fields` at that point, in order.
    pub fn integrate_domain(&self, fields: &[&Field], f: impl Fn([f64; 2], &[f64]) -> f64) -> f64 {
        let mut vals = vec![0.0; fields.len()];
        let mut total = 0.0;
        for tri in &self.triangles {
            let area = triangle_area(&self.nodes, tri);
            let w = area / 3.0;
            for k in 0..3 {
                let i = tri[k];
                let j = tri[(k + 1) % 3];
                let x = [
                    0.5 * (self.nodes[i][0] + self.nodes[j][0]),
                    0.5 * (self.nodes[i][1] + self.nodes[j][1]),
                ];
                for (slot, fld) in vals.iter_mut().zip(fields) {
                    *slot = 0.5 * (fld.values[i] + fld.values[j]);
                }
                total += w * f(x, &vals);
            }
        }
        total
    }

    /// Assemble the nodal load `F_j = sum_q w_q f(x_q) phi_j(x_q)` with the
    /// same 3-point rule as [`integrate_domain`](Self::integrate_domain), so
    /// that it is the exact derivative of the quadrature functional.
    pub fn domain_load(&self, fields: &[&Field], f: impl Fn([f64; 2], &[f64]) -> f64) -> Vec<f64> {
        let mut vals = vec![0.0; fields.len()];
        let mut load = vec![0.0; self.nodes.len()];
        for tri in &self.triangles {
            let area = triangle_area(&self.nodes, tri);
            let w = area / 3.0;
            for k in 0..3 {
                let i = tri[k];
                let j = tri[(k + 1) % 3];
                let x = [
                    0.5 * (self.nodes[i][0] + self.nodes[j][0]),
                    0.5 * (self.nodes[i][1] + self.nodes[j][1]),
                ];
                for (slot, fld) in vals.iter_mut().zip(fields) {
                    *slot = 0.5 * (fld.values[i] + fld.values[j]);
                }
                // the midpoint of edge (i,j) has phi_i = phi_j = 1/2
                let v = w * f(x, &vals);
                load[i] += 0.5 * v;
                load[j] += 0.5 * v;
            }
        }
        load
    }

    /// Integrate over the boundary with the trapezoid rule. `f` receives the
    /// local boundary index and the node position.
    pub fn integrate_boundary(&self, f: impl Fn(usize, [f64; 2]) -> f64) -> f64 {
        self.boundary_nodes
            .iter()
            .enumerate()
            .map(|(b, &i)| self.boundary_weights[b] * f(b, self.nodes[i]))
            .sum()
    }

    /// Restriction of a field to the boundary nodes.
    pub fn trace(&self, field: &Field) -> BoundaryFunction {
        BoundaryFunction {
            values: self
                .boundary_nodes
                .iter()
                .map(|&i| field.values[i])
                .collect(),
        }
    }

    /// Discrete L2(Omega) norm (quadrature-consistent; exact for P1).
    pub fn l2_domain(&self, field: &Field) -> f64 {
        self.integrate_domain(&[field], |_, v| v[0] * v[0]).sqrt()
    }

    /// Discrete H1(Omega) norm: L2 plus the piecewise-constant gradient.
    pub fn h1_domain(&self, field: &Field) -> f64 {
        let mut grad2 = 0.0;
        for tri in &self.triangles {
            let (gx, gy) = self.p1_gradient(tri, field);
            grad2 += triangle_area(&self.nodes, tri) * (gx * gx + gy * gy);
        }
        (self.l2_domain(field).powi(2) + grad2).sqrt()
    }

    /// Gradient of the P1 interpolant of `field` on triangle `tri`.
    pub fn p1_gradient(&self, tri: &[usize; 3], field: &Field) -> (f64, f64) {
        let [a, b, c] = [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]];
        let [fa, fb, fc] = [
            field.values[tri[0]],
            field.values[tri[1]],
            field.values[tri[2]],
        ];
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let gx = ((fb - fa) * (c[1] - a[1]) - (fc - fa) * (b[1] - a[1])) / det;
        let gy = ((fc - fa) * (b[0] - a[0]) - (fb - fa) * (c[0] - a[0])) / det;
        (gx, gy)
    }

    /// Discrete L2(Gamma) norm (trapezoid).
    pub fn l2_boundary(&self, bf: &BoundaryFunction) -> f64 {
        self.boundary_nodes
            .iter()
            .enumerate()
            .map(|(b, _)| self.boundary_weights[b] * bf.values[b] * bf.values[b])
            .sum::<f64>()
            .sqrt()
    }

    /// Nodal max-absolute-value norm.
    pub fn cmax(&self, field: &Field) -> f64 {
        field.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_field(&self, field: &Field, name: &str) -> Result<()> {
        if field.len() != self.n_nodes() {
            return Err(Error::ShapeMismatch(format!(
                "{name}: expected {} nodal values, got {}",
                self.n_nodes(),
                field.len()
            )));
        }
        if !field.is_finite() {
            let i = field.values.iter().position(|v| !v.is_finite()).unwrap();
            return Err(Error::NonFinite(format!("{name} at node {i}")));
        }
        Ok(())
    }

    pub fn check_boundary(&self, bf: &BoundaryFunction, name: &str) -> Result<()> {
        if bf.len() != self.n_boundary() {
            return Err(Error::ShapeMismatch(format!(
                "{name}: expected {} boundary values, got {}",
                self.n_boundary(),
                bf.len()
            )));
        }
        if !bf.is_finite() {
            let b = bf.values.iter().position(|v| !v.is_finite()).unwrap();
            return Err(Error::NonFinite(format!("{name} at boundary node {b}")));
        }
        Ok(())
    }
}
