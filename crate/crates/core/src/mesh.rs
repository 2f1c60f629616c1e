//! Two-dimensional simplicial meshes.
//!
//! A [`Mesh`] owns its vertex coordinates and counterclockwise cells and
//! derives a deduplicated edge list from them. Edge ids follow the
//! lexicographic order of the sorted vertex pairs, so numbering is a pure
//! function of the cell list. Refined meshes keep a [`ParentLink`] to the
//! mesh they came from, which is what the grid-transfer operators walk.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Local edge `i` of a cell is the edge opposite local vertex `i`.
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RefinementKind {
    /// Each triangle split into four through its edge midpoints.
    Quadrisection,
    /// Alfeld split: each triangle split into three around its barycenter.
    Barycentric,
}

impl RefinementKind {
    pub fn children_per_cell(self) -> usize {
        match self {
            RefinementKind::Quadrisection => 4,
            RefinementKind::Barycentric => 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParentLink {
    pub mesh: Arc<Mesh>,
    pub kind: RefinementKind,
    /// `cell_map[child] = parent cell`.
    pub cell_map: Vec<usize>,
}

/// Vertex, edge and cell ids, each list sorted and free of duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EntitySet {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub cells: Vec<usize>,
}

impl EntitySet {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.edges.is_empty() && self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.vertices.len() + self.edges.len() + self.cells.len()
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 3]>,
    edge_cells: Vec<Vec<usize>>,
    vertex_cells: Vec<Vec<usize>>,
    vertex_edges: Vec<Vec<usize>>,
    boundary_markers: BTreeMap<usize, i32>,
    parent: Option<ParentLink>,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds a mesh from raw parts.
    ///
    /// Cells must be counterclockwise with three distinct vertices, every
    /// vertex must belong to a cell, and each marked edge must be a
    /// boundary edge. Boundary edges without a marker get marker 0.
    pub fn new(
        vertices: Vec<Point>,
        cells: Vec<[usize; 3]>,
        boundary: &[([usize; 2], i32)],
    ) -> Result<Self> {
        let nv = vertices.len();
        for (c, cell) in cells.iter().enumerate() {
            if cell.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("cell {c} references a missing vertex")));
            }
            if cell[0] == cell[1] || cell[1] == cell[2] || cell[0] == cell[2] {
                return Err(Error::InvalidMesh(format!("cell {c} repeats a vertex")));
            }
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} is not counterclockwise (signed area {area:e})"
                )));
            }
        }

        let mut edge_set = BTreeSet::new();
        for cell in &cells {
            for [a, b] in LOCAL_EDGES {
                edge_set.insert(edge_key(cell[a], cell[b]));
            }
        }
        let edges: Vec<[usize; 2]> = edge_set.iter().map(|&(a, b)| [a, b]).collect();
        let edge_index: HashMap<(usize, usize), usize> =
            edge_set.into_iter().enumerate().map(|(i, k)| (k, i)).collect();

        let mut cell_edges = Vec::with_capacity(cells.len());
        let mut edge_cells = vec![Vec::new(); edges.len()];
        let mut vertex_cells = vec![Vec::new(); nv];
        let mut vertex_edges = vec![Vec::new(); nv];
        for (c, cell) in cells.iter().enumerate() {
            let mut ce = [0; 3];
            for (i, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                let e = edge_index[&edge_key(cell[*a], cell[*b])];
                ce[i] = e;
                edge_cells[e].push(c);
            }
            cell_edges.push(ce);
            for &v in cell {
                vertex_cells[v].push(c);
            }
        }
        for (e, &[a, b]) in edges.iter().enumerate() {
            vertex_edges[a].push(e);
            vertex_edges[b].push(e);
        }
        if let Some(v) = vertex_cells.iter().position(|c| c.is_empty()) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not used by any cell")));
        }
        for list in vertex_edges.iter_mut() {
            list.sort_unstable();
        }

        let mut boundary_markers = BTreeMap::new();
        for (e, cs) in edge_cells.iter().enumerate() {
            if cs.len() == 1 {
                boundary_markers.insert(e, 0);
            } else if cs.len() > 2 {
                return Err(Error::InvalidMesh(format!("edge {e} is shared by {} cells", cs.len())));
            }
        }
        for &([a, b], marker) in boundary {
            let e = *edge_index.get(&edge_key(a, b)).ok_or_else(|| {
                Error::InvalidMesh(format!("marked edge ({a}, {b}) is not a mesh edge"))
            })?;
            match boundary_markers.get_mut(&e) {
                Some(m) => *m = marker,
                None => {
                    return Err(Error::InvalidMesh(format!(
                        "marked edge ({a}, {b}) is an interior edge"
                    )))
                }
            }
        }

        Ok(Mesh {
            vertices,
            cells,
            edges,
            cell_edges,
            edge_cells,
            vertex_cells,
            vertex_edges,
            boundary_markers,
            parent: None,
        })
    }

    /// Uniform lattice on `[x0, x1] x [y0, y1]` with `n` squares per side,
    /// each split along its lower-left to upper-right diagonal.
    /// Sides are marked bottom 1, right 2, top 3, left 4.
    pub fn structured(n: usize, domain: [[f64; 2]; 2]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("structured grid needs n >= 1".into()));
        }
        let [[x0, x1], [y0, y1]] = domain;
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::InvalidArgument("empty rectangle".into()));
        }
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                let x = x0 + (x1 - x0) * i as f64 / n as f64;
                let y = y0 + (y1 - y0) * j as f64 / n as f64;
                vertices.push([x, y]);
            }
        }
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                cells.push([v00, v10, v11]);
                cells.push([v00, v11, v01]);
            }
        }
        let mut boundary = Vec::with_capacity(4 * n);
        for i in 0..n {
            boundary.push(([idx(i, 0), idx(i + 1, 0)], 1));
            boundary.push(([idx(n, i), idx(n, i + 1)], 2));
            boundary.push(([idx(i, n), idx(i + 1, n)], 3));
            boundary.push(([idx(0, i), idx(0, i + 1)], 4));
        }
        Mesh::new(vertices, cells, &boundary)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> [usize; 3] {
        self.cells[c]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    /// Edge ids of a cell, local edge `i` opposite local vertex `i`.
    pub fn cell_edges(&self, c: usize) -> [usize; 3] {
        self.cell_edges[c]
    }

    pub fn edge_cells(&self, e: usize) -> &[usize] {
        &self.edge_cells[e]
    }

    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        &self.vertex_edges[v]
    }

    pub fn boundary_markers(&self) -> &BTreeMap<usize, i32> {
        &self.boundary_markers
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_markers.contains_key(&e)
    }

    pub fn parent(&self) -> Option<&ParentLink> {
        self.parent.as_ref()
    }

    /// Whether this mesh came out of a barycentric split.
    pub fn is_barycentric(&self) -> bool {
        matches!(self.parent, Some(ParentLink { kind: RefinementKind::Barycentric, .. }))
    }

    pub fn cell_coords(&self, c: usize) -> [Point; 3] {
        let [a, b, d] = self.cells[c];
        [self.vertices[a], self.vertices[b], self.vertices[d]]
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.cell_coords(c);
        signed_area(a, b, d)
    }

    pub fn area(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// `V - E + T`.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_cells() as i64
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_markers
            .keys()
            .map(|&e| {
                let [a, b] = self.edges[e];
                let (p, q) = (self.vertices[a], self.vertices[b]);
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .sum()
    }

    /// Same mesh or the same allocation behind two handles.
    pub fn same_as(&self, other: &Mesh) -> bool {
        std::ptr::eq(self, other)
    }

    /// `{v}` together with every edge and cell incident to `v`.
    pub fn vertex_star(&self, v: usize) -> Result<EntitySet> {
        if v >= self.num_vertices() {
            return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
        }
        let mut cells = self.vertex_cells[v].clone();
        cells.sort_unstable();
        Ok(EntitySet { vertices: vec![v], edges: self.vertex_edges[v].clone(), cells })
    }

    /// Adds all vertices and edges of every cell and edge in `set`.
    pub fn closure(&self, set: &EntitySet) -> EntitySet {
        let mut vertices: BTreeSet<usize> = set.vertices.iter().copied().collect();
        let mut edges: BTreeSet<usize> = set.edges.iter().copied().collect();
        for &c in &set.cells {
            vertices.extend(self.cells[c]);
            edges.extend(self.cell_edges[c]);
        }
        for &e in &edges {
            vertices.extend(self.edges[e]);
        }
        EntitySet {
            vertices: vertices.into_iter().collect(),
            edges: edges.into_iter().collect(),
            cells: set.cells.clone(),
        }
    }

    fn boundary_list(&self) -> Vec<([usize; 2], i32)> {
        self.boundary_markers.iter().map(|(&e, &m)| (self.edges[e], m)).collect()
    }

    /// Splits every cell into four through its edge midpoints. The new
    /// midpoint vertex of edge `e` gets id `V + e`.
    pub fn refine_uniform(parent: &Arc<Mesh>) -> Mesh {
        let nv = parent.num_vertices();
        let mut vertices = parent.vertices.clone();
        vertices.extend(parent.edges.iter().map(|&[a, b]| {
            let (p, q) = (parent.vertices[a], parent.vertices[b]);
            [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
        }));
        let mut cells = Vec::with_capacity(4 * parent.num_cells());
        let mut cell_map = Vec::with_capacity(4 * parent.num_cells());
        for (c, &[a, b, d]) in parent.cells.iter().enumerate() {
            let [e_bd, e_da, e_ab] = parent.cell_edges[c];
            let (m_ab, m_bd, m_da) = (nv + e_ab, nv + e_bd, nv + e_da);
            cells.extend([[a, m_ab, m_da], [m_ab, b, m_bd], [m_da, m_bd, d], [m_ab, m_bd, m_da]]);
            cell_map.extend([c; 4]);
        }
        let mut boundary = Vec::with_capacity(2 * parent.boundary_markers.len());
        for (&e, &marker) in &parent.boundary_markers {
            let [a, b] = parent.edges[e];
            boundary.push(([a, nv + e], marker));
            boundary.push(([nv + e, b], marker));
        }
        let mut mesh = Mesh::new(vertices, cells, &boundary)
            .expect("quadrisection of a valid mesh is valid");
        mesh.parent = Some(ParentLink {
            mesh: Arc::clone(parent),
            kind: RefinementKind::Quadrisection,
            cell_map,
        });
        mesh
    }

    /// Alfeld split: connects each cell's vertices to its barycenter,
    /// which gets vertex id `V + c`. Boundary edges are untouched.
    pub fn refine_barycentric(parent: &Arc<Mesh>) -> Mesh {
        let nv = parent.num_vertices();
        let mut vertices = parent.vertices.clone();
        vertices.extend((0..parent.num_cells()).map(|c| {
            let [p, q, r] = parent.cell_coords(c);
            [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
        }));
        let mut cells = Vec::with_capacity(3 * parent.num_cells());
        let mut cell_map = Vec::with_capacity(3 * parent.num_cells());
        for (c, &[a, b, d]) in parent.cells.iter().enumerate() {
            let g = nv + c;
            cells.extend([[a, b, g], [b, d, g], [d, a, g]]);
            cell_map.extend([c; 3]);
        }
        let mut mesh = Mesh::new(vertices, cells, &parent.boundary_list())
            .expect("barycentric split of a valid mesh is valid");
        mesh.parent = Some(ParentLink {
            mesh: Arc::clone(parent),
            kind: RefinementKind::Barycentric,
            cell_map,
        });
        mesh
    }

    /// Barycentric coordinates of `p` with respect to cell `c`.
    pub fn barycentric_coords(&self, c: usize, p: Point) -> [f64; 3] {
        let [a, b, d] = self.cell_coords(c);
        let det = (b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]);
        let (dx, dy) = (p[0] - a[0], p[1] - a[1]);
        let l1 = ((d[1] - a[1]) * dx - (d[0] - a[0]) * dy) / det;
        let l2 = (-(b[1] - a[1]) * dx + (b[0] - a[0]) * dy) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Serializes to the plain-text mesh format: header `V E_b T`, then
    /// vertex coordinates, cells, and marked boundary edges.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {}",
            self.num_vertices(),
            self.boundary_markers.len(),
            self.num_cells()
        );
        for &[x, y] in &self.vertices {
            let _ = writeln!(out, "{x:?} {y:?}");
        }
        for &[a, b, c] in &self.cells {
            let _ = writeln!(out, "{a} {b} {c}");
        }
        for ([a, b], m) in self.boundary_list() {
            let _ = writeln!(out, "{a} {b} {m}");
        }
        out
    }

    /// Parses the plain-text mesh format. Clockwise cells are repaired by
    /// swapping two vertices (with a warning).
    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::MeshParse { path: source.to_path_buf(), line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let mut next_fields = |expect: usize| -> Result<(usize, Vec<&str>)> {
            let (n, line) = lines.next().ok_or_else(|| err(0, "unexpected end of file".into()))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != expect {
                return Err(err(n, format!("expected {expect} fields, found {}", fields.len())));
            }
            Ok((n, fields))
        };
        fn num<T: std::str::FromStr>(s: &str, n: usize, path: &Path) -> Result<T> {
            s.parse().map_err(|_| Error::MeshParse {
                path: path.to_path_buf(),
                line: n,
                msg: format!("cannot parse '{s}'"),
            })
        }

        let (n, header) = next_fields(3)?;
        let nv: usize = num(header[0], n, source)?;
        let nb: usize = num(header[1], n, source)?;
        let nt: usize = num(header[2], n, source)?;

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (n, f) = next_fields(2)?;
            vertices.push([num(f[0], n, source)?, num(f[1], n, source)?]);
        }
        let mut cells = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (n, f) = next_fields(3)?;
            let mut cell: [usize; 3] = [num(f[0], n, source)?, num(f[1], n, source)?, num(f[2], n, source)?];
            if cell.iter().any(|&v| v >= nv) {
                return Err(err(n, "cell references a missing vertex".into()));
            }
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if area < 0.0 {
                log::warn!("{}: line {n}: clockwise cell reoriented", source.display());
                cell.swap(1, 2);
            }
            cells.push(cell);
        }
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (n, f) = next_fields(3)?;
            boundary.push(([num(f[0], n, source)?, num(f[1], n, source)?], num(f[2], n, source)?));
        }
        if let Some((n, _)) = lines.next() {
            return Err(err(n, "trailing content".into()));
        }
        Mesh::new(vertices, cells, &boundary)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Mesh::parse(&text, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Nested meshes ordered coarse to fine; each entry refines its predecessor.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    meshes: Vec<Arc<Mesh>>,
}

impl MeshHierarchy {
    /// `refinements` quadrisections of `base`, optionally followed by a
    /// single barycentric split of the finest mesh.
    pub fn new(base: Mesh, refinements: usize, barycentric_finest: bool) -> Self {
        let mut meshes = vec![Arc::new(base)];
        for _ in 0..refinements {
            let fine = Mesh::refine_uniform(meshes.last().unwrap());
            meshes.push(Arc::new(fine));
        }
        if barycentric_finest {
            let fine = Mesh::refine_barycentric(meshes.last().unwrap());
            meshes.push(Arc::new(fine));
        }
        MeshHierarchy { meshes }
    }

    pub fn meshes(&self) -> &[Arc<Mesh>] {
        &self.meshes
    }

    pub fn finest(&self) -> &Arc<Mesh> {
        self.meshes.last().unwrap()
    }

    pub fn coarsest(&self) -> &Arc<Mesh> {
        &self.meshes[0]
    }

    pub fn len(&self) -> usize {
        self.meshes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meshes.is_empty()
    }
}

/// Path of a bundled data file inside this crate.
pub fn bundled_data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}
