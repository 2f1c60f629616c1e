//! Equispaced Lagrange elements on the reference triangle.
//!
//! Nodes are indexed by barycentric multi-indices `alpha` with
//! `alpha[0] + alpha[1] + alpha[2] = k`; the node sits at `alpha / k`.
//! The basis function of node `alpha` is
//! `prod_a prod_{m < alpha[a]} (k lambda_a - m) / (m + 1)`.

use crate::error::{Error, Result};
use crate::fem::quadrature::QuadratureRule;
use crate::mesh::LOCAL_EDGES;

pub const MAX_ELEMENT_DEGREE: usize = 10;

/// Mesh entity a node is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeEntity {
    Vertex(usize),
    /// `position` in `1..k` counts from the first endpoint of
    /// `LOCAL_EDGES[edge]`.
    Edge { edge: usize, position: usize },
    Interior(usize),
}

#[derive(Clone, Debug)]
pub struct ReferenceElement {
    degree: usize,
    indices: Vec<[usize; 3]>,
    entities: Vec<NodeEntity>,
}

/// Basis values and reference gradients at the points of a rule.
#[derive(Clone, Debug)]
pub struct Tabulation {
    /// `values[q][i]`
    pub values: Vec<Vec<f64>>,
    /// `grads[q][i]` with respect to the reference coordinates `(x, y)`.
    pub grads: Vec<Vec<[f64; 2]>>,
}

impl ReferenceElement {
    /// Degree `k` Lagrange element, `1 <= k <= 10`.
    pub fn new(k: usize) -> Result<Self> {
        if !(1..=MAX_ELEMENT_DEGREE).contains(&k) {
            return Err(Error::InvalidArgument(format!("element degree {k} outside 1..={MAX_ELEMENT_DEGREE}")));
        }
        Ok(Self::build(k))
    }

    /// Piecewise constant element with a single interior node.
    pub fn constant() -> Self {
        ReferenceElement { degree: 0, indices: vec![[0, 0, 0]], entities: vec![NodeEntity::Interior(0)] }
    }

    /// Any degree up to 10, including the constant element.
    pub fn of_degree(k: usize) -> Result<Self> {
        if k == 0 {
            Ok(Self::constant())
        } else {
            Self::new(k)
        }
    }

    fn build(k: usize) -> Self {
        let mut indices = Vec::new();
        let mut entities = Vec::new();
        for v in 0..3 {
            let mut a = [0; 3];
            a[v] = k;
            indices.push(a);
            entities.push(NodeEntity::Vertex(v));
        }
        for (e, &[p, q]) in LOCAL_EDGES.iter().enumerate() {
            for t in 1..k {
                let mut a = [0; 3];
                a[p] = k - t;
                a[q] = t;
                indices.push(a);
                entities.push(NodeEntity::Edge { edge: e, position: t });
            }
        }
        let mut n = 0;
        for a0 in (1..k).rev() {
            for a1 in (1..k).rev() {
                if a0 + a1 < k {
                    indices.push([a0, a1, k - a0 - a1]);
                    entities.push(NodeEntity::Interior(n));
                    n += 1;
                }
            }
        }
        ReferenceElement { degree: k, indices, entities }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_nodes(&self) -> usize {
        self.indices.len()
    }

    pub fn num_interior_nodes(&self) -> usize {
        self.entities.iter().filter(|e| matches!(e, NodeEntity::Interior(_))).count()
    }

    pub fn multi_index(&self, i: usize) -> [usize; 3] {
        self.indices[i]
    }

    pub fn entity(&self, i: usize) -> NodeEntity {
        self.entities[i]
    }

    pub fn entities(&self) -> &[NodeEntity] {
        &self.entities
    }

    /// Barycentric coordinates of node `i`.
    pub fn node_barycentric(&self, i: usize) -> [f64; 3] {
        if self.degree == 0 {
            return [1.0 / 3.0; 3];
        }
        let k = self.degree as f64;
        let a = self.indices[i];
        [a[0] as f64 / k, a[1] as f64 / k, a[2] as f64 / k]
    }

    /// Basis values at barycentric point `l`.
    pub fn eval(&self, l: [f64; 3], out: &mut [f64]) {
        let k = self.degree;
        let f = factor_tables(k, l);
        for (o, a) in out.iter_mut().zip(&self.indices) {
            *o = f[0][a[0]].0 * f[1][a[1]].0 * f[2][a[2]].0;
        }
    }

    pub fn values(&self, l: [f64; 3]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_nodes()];
        self.eval(l, &mut out);
        out
    }

    /// Gradients with respect to reference `(x, y)` at barycentric `l`,
    /// where `lambda_1 = x`, `lambda_2 = y`.
    pub fn eval_grads(&self, l: [f64; 3], out: &mut [[f64; 2]]) {
        let k = self.degree;
        let f = factor_tables(k, l);
        for (o, a) in out.iter_mut().zip(&self.indices) {
            let (v0, d0) = f[0][a[0]];
            let (v1, d1) = f[1][a[1]];
            let (v2, d2) = f[2][a[2]];
            let g0 = d0 * v1 * v2;
            let g1 = v0 * d1 * v2;
            let g2 = v0 * v1 * d2;
            *o = [g1 - g0, g2 - g0];
        }
    }

    pub fn grads(&self, l: [f64; 3]) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.num_nodes()];
        self.eval_grads(l, &mut out);
        out
    }

    pub fn tabulate(&self, rule: &QuadratureRule) -> Tabulation {
        let mut values = Vec::with_capacity(rule.len());
        let mut grads = Vec::with_capacity(rule.len());
        for q in 0..rule.len() {
            let l = rule.barycentric(q);
            values.push(self.values(l));
            grads.push(self.grads(l));
        }
        Tabulation { values, grads }
    }
}

/// For each barycentric coordinate `a` and each `j <= k`, the value and
/// derivative of `prod_{m < j} (k t - m) / (m + 1)` at `t = l[a]`.
fn factor_tables(k: usize, l: [f64; 3]) -> [Vec<(f64, f64)>; 3] {
    let kf = k as f64;
    let one = |t: f64| {
        let mut tab = Vec::with_capacity(k + 1);
        let (mut v, mut d) = (1.0, 0.0);
        tab.push((v, d));
        for m in 0..k {
            let c = 1.0 / (m as f64 + 1.0);
            let s = (kf * t - m as f64) * c;
            d = d * s + v * kf * c;
            v *= s;
            tab.push((v, d));
        }
        tab
    };
    [one(l[0]), one(l[1]), one(l[2])]
}
