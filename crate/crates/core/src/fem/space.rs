//! Global DoF numbering for continuous and discontinuous Lagrange spaces.

use std::sync::Arc;

use crate::error::Result;
use crate::fem::element::{NodeEntity, ReferenceElement};
use crate::mesh::{Mesh, Point, LOCAL_EDGES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Continuity {
    Continuous,
    Discontinuous,
}

/// Lagrange space on a mesh. Nodes are numbered vertices first, then
/// edges, then cell interiors (continuous), or cell by cell
/// (discontinuous). Vector components are interleaved per node:
/// DoF `components * node + c`.
#[derive(Clone, Debug)]
pub struct FunctionSpace {
    mesh: Arc<Mesh>,
    element: ReferenceElement,
    continuity: Continuity,
    components: usize,
    /// Flat `num_cells * nodes_per_cell` map.
    cell_nodes: Vec<usize>,
    num_nodes: usize,
    node_coords: Vec<Point>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize, continuity: Continuity, components: usize) -> Result<Self> {
        let element = if continuity == Continuity::Continuous {
            ReferenceElement::new(degree)?
        } else {
            ReferenceElement::of_degree(degree)?
        };
        Ok(Self::with_element(mesh, element, continuity, components))
    }

    pub fn with_element(
        mesh: Arc<Mesh>,
        element: ReferenceElement,
        continuity: Continuity,
        components: usize,
    ) -> Self {
        assert!(components >= 1);
        let k = element.degree();
        let nloc = element.num_nodes();
        let nc = mesh.num_cells();
        let mut cell_nodes = vec![0; nc * nloc];
        let num_nodes = match continuity {
            Continuity::Discontinuous => {
                for (i, n) in cell_nodes.iter_mut().enumerate() {
                    *n = i;
                }
                nc * nloc
            }
            Continuity::Continuous => {
                let nv = mesh.num_vertices();
                let ne = mesh.num_edges();
                let per_edge = k - 1;
                let per_cell = element.num_interior_nodes();
                for c in 0..nc {
                    let verts = mesh.cell(c);
                    let edges = mesh.cell_edges(c);
                    for (i, ent) in element.entities().iter().enumerate() {
                        cell_nodes[c * nloc + i] = match *ent {
                            NodeEntity::Vertex(v) => verts[v],
                            NodeEntity::Edge { edge, position } => {
                                let [p, q] = LOCAL_EDGES[edge];
                                let j = if verts[p] < verts[q] { position - 1 } else { k - position - 1 };
                                nv + edges[edge] * per_edge + j
                            }
                            NodeEntity::Interior(j) => nv + ne * per_edge + c * per_cell + j,
                        };
                    }
                }
                nv + ne * per_edge + nc * per_cell
            }
        };
        let mut node_coords = vec![[0.0; 2]; num_nodes];
        for c in 0..nc {
            let x = mesh.cell_coords(c);
            for i in 0..nloc {
                let l = element.node_barycentric(i);
                node_coords[cell_nodes[c * nloc + i]] = [
                    l[0] * x[0][0] + l[1] * x[1][0] + l[2] * x[2][0],
                    l[0] * x[0][1] + l[1] * x[1][1] + l[2] * x[2][1],
                ];
            }
        }
        FunctionSpace { mesh, element, continuity, components, cell_nodes, num_nodes, node_coords }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.element.num_nodes()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Total DoF count, `components * num_nodes`.
    pub fn num_dofs(&self) -> usize {
        self.components * self.num_nodes
    }

    pub fn cell_nodes(&self, c: usize) -> &[usize] {
        let n = self.nodes_per_cell();
        &self.cell_nodes[c * n..(c + 1) * n]
    }

    pub fn node_coord(&self, n: usize) -> Point {
        self.node_coords[n]
    }

    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    pub fn dof(&self, node: usize, component: usize) -> usize {
        self.components * node + component
    }

    /// Nodes attached to vertex `v`; empty for discontinuous spaces.
    pub fn vertex_nodes(&self, v: usize) -> Vec<usize> {
        match self.continuity {
            Continuity::Continuous => vec![v],
            Continuity::Discontinuous => Vec::new(),
        }
    }

    /// Nodes in the interior of edge `e`, ordered from the lower vertex id.
    pub fn edge_nodes(&self, e: usize) -> Vec<usize> {
        match self.continuity {
            Continuity::Continuous => {
                let per = self.degree() - 1;
                let start = self.mesh.num_vertices() + e * per;
                (start..start + per).collect()
            }
            Continuity::Discontinuous => Vec::new(),
        }
    }

    /// Nodes owned by cell `c`: the interior nodes of a continuous space,
    /// all of the cell's nodes for a discontinuous one.
    pub fn cell_owned_nodes(&self, c: usize) -> Vec<usize> {
        match self.continuity {
            Continuity::Continuous => {
                let per = self.element.num_interior_nodes();
                let start = self.mesh.num_vertices() + self.mesh.num_edges() * (self.degree() - 1) + c * per;
                (start..start + per).collect()
            }
            Continuity::Discontinuous => self.cell_nodes(c).to_vec(),
        }
    }

    /// Nodes lying on boundary edges whose marker satisfies `select`,
    /// endpoints included. Sorted and deduplicated.
    pub fn boundary_nodes(&self, select: impl Fn(i32) -> bool) -> Vec<usize> {
        assert_eq!(self.continuity, Continuity::Continuous, "boundary nodes of a discontinuous space");
        let mut out = Vec::new();
        for (&e, &m) in self.mesh.boundary_markers() {
            if select(m) {
                let [a, b] = self.mesh.edge(e);
                out.push(a);
                out.push(b);
                out.extend(self.edge_nodes(e));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Nodal interpolant of a scalar function (first component only).
    pub fn interpolate_scalar(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.num_dofs()];
        for (n, &x) in self.node_coords.iter().enumerate() {
            out[self.dof(n, 0)] = f(x);
        }
        out
    }

    /// Nodal interpolant of a two-component vector field.
    pub fn interpolate_vector(&self, f: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
        assert_eq!(self.components, 2);
        let mut out = vec![0.0; self.num_dofs()];
        for (n, &x) in self.node_coords.iter().enumerate() {
            let v = f(x);
            out[2 * n] = v[0];
            out[2 * n + 1] = v[1];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn grid(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::structured(n, [[-1.0, 1.0], [-1.0, 1.0]]).unwrap())
    }

    #[test]
    fn dof_counts() {
        let m = grid(2);
        let p2 = FunctionSpace::new(m.clone(), 2, Continuity::Continuous, 1).unwrap();
        assert_eq!(p2.num_dofs(), 25);
        let d1 = FunctionSpace::new(m.clone(), 1, Continuity::Discontinuous, 1).unwrap();
        assert_eq!(d1.num_dofs(), 24);
        let v2 = FunctionSpace::new(m.clone(), 2, Continuity::Continuous, 2).unwrap();
        assert_eq!(v2.num_dofs(), 50);
        let d0 = FunctionSpace::new(m.clone(), 0, Continuity::Discontinuous, 1).unwrap();
        assert_eq!(d0.num_dofs(), 8);
        for k in 1..=10 {
            let s = FunctionSpace::new(m.clone(), k, Continuity::Continuous, 1).unwrap();
            let expect = 9 + (k - 1) * 16 + (k - 1) * (k.saturating_sub(2)) / 2 * 8;
            assert_eq!(s.num_dofs(), expect, "k={k}");
            let d = FunctionSpace::new(m.clone(), k, Continuity::Discontinuous, 1).unwrap();
            assert_eq!(d.num_dofs(), 8 * (k + 1) * (k + 2) / 2);
        }
    }

    #[test]
    fn shared_nodes_have_consistent_coordinates() {
        // every global node must be placed at the same point by every cell
        let m = Arc::new(Mesh::refine_uniform(&grid(2)));
        for k in 1..=6 {
            let s = FunctionSpace::new(m.clone(), k, Continuity::Continuous, 1).unwrap();
            let el = s.element();
            let mut seen: HashMap<usize, Point> = HashMap::new();
            for c in 0..m.num_cells() {
                let x = m.cell_coords(c);
                for (i, &n) in s.cell_nodes(c).iter().enumerate() {
                    let l = el.node_barycentric(i);
                    let p = [
                        l[0] * x[0][0] + l[1] * x[1][0] + l[2] * x[2][0],
                        l[0] * x[0][1] + l[1] * x[1][1] + l[2] * x[2][1],
                    ];
                    if let Some(q) = seen.insert(n, p) {
                        assert!((p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14, "k={k} node {n}");
                    }
                }
            }
            assert_eq!(seen.len(), s.num_nodes());
            // nodes are distinct points
            let mut pts: Vec<(i64, i64)> =
                s.node_coords().iter().map(|p| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64)).collect();
            pts.sort_unstable();
            pts.dedup();
            assert_eq!(pts.len(), s.num_nodes());
        }
    }

    #[test]
    fn edge_nodes_are_ordered_from_lower_vertex() {
        let m = grid(1);
        let s = FunctionSpace::new(m.clone(), 4, Continuity::Continuous, 1).unwrap();
        for e in 0..m.num_edges() {
            let [a, b] = m.edge(e);
            assert!(a < b);
            let pa = m.vertex(a);
            let nodes = s.edge_nodes(e);
            let d: Vec<f64> = nodes
                .iter()
                .map(|&n| {
                    let p = s.node_coord(n);
                    (p[0] - pa[0]).hypot(p[1] - pa[1])
                })
                .collect();
            assert!(d.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn boundary_nodes_of_unit_square() {
        let m = Arc::new(Mesh::structured(1, [[0.0, 1.0], [0.0, 1.0]]).unwrap());
        let s = FunctionSpace::new(m, 3, Continuity::Continuous, 1).unwrap();
        assert_eq!(s.boundary_nodes(|_| true).len(), 12);
        // bottom side: 2 vertices + 2 edge nodes
        assert_eq!(s.boundary_nodes(|m| m == 1).len(), 4);
    }
}
