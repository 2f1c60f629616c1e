//! Assembly of the Stokes saddle-point system
//!
//! ```text
//! K = [ A  B^T ]    A = (grad u, grad v),   B = -(p, div v)
//!     [ B  0   ]
//! ```
//!
//! with velocity DoFs first (components interleaved) and pressure after.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fem::element::ReferenceElement;
use crate::fem::problem::{BoundaryCondition, ExactSolution, ProblemInstance, StokesSpaces};
use crate::fem::quadrature::{interval_rule, triangle_rule};
use crate::fem::space::FunctionSpace;
use crate::linalg::CsrMatrix;
use crate::mesh::{Mesh, Point, LOCAL_EDGES};

/// Affine map `x = x0 + J xi` of one cell.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub x0: Point,
    pub jac: [[f64; 2]; 2],
    pub jinv: [[f64; 2]; 2],
    pub det_abs: f64,
}

impl CellGeometry {
    pub fn new(mesh: &Mesh, c: usize) -> Self {
        let [a, b, d] = mesh.cell_coords(c);
        let jac = [[b[0] - a[0], d[0] - a[0]], [b[1] - a[1], d[1] - a[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let jinv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        CellGeometry { x0: a, jac, jinv, det_abs: det.abs() }
    }

    pub fn map(&self, xi: [f64; 2]) -> Point {
        [
            self.x0[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.x0[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    /// Physical gradient from a reference gradient.
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.jinv[0][0] * g[0] + self.jinv[1][0] * g[1],
            self.jinv[0][1] * g[0] + self.jinv[1][1] * g[1],
        ]
    }
}

/// Reference-cell integrals reused on every affine cell.
struct ReferenceIntegrals {
    /// `stiff[a][b][i * n + j] = int dphi_i/dxi_a dphi_j/dxi_b`
    stiff: [[Vec<f64>; 2]; 2],
    /// `mixed[a][p * n + j] = int psi_p dphi_j/dxi_a`
    mixed: [Vec<f64>; 2],
}

impl ReferenceIntegrals {
    fn new(vel: &ReferenceElement, pres: &ReferenceElement) -> Result<Self> {
        let rule = triangle_rule((2 * vel.degree()).max(1))?;
        let tv = vel.tabulate(&rule);
        let tp = pres.tabulate(&rule);
        let n = vel.num_nodes();
        let np = pres.num_nodes();
        let mut stiff: [[Vec<f64>; 2]; 2] = Default::default();
        for row in stiff.iter_mut() {
            for s in row.iter_mut() {
                *s = vec![0.0; n * n];
            }
        }
        let mut mixed: [Vec<f64>; 2] = [vec![0.0; np * n], vec![0.0; np * n]];
        for (q, &w) in rule.weights.iter().enumerate() {
            let g = &tv.grads[q];
            for a in 0..2 {
                for b in 0..2 {
                    let s = &mut stiff[a][b];
                    for i in 0..n {
                        let wi = w * g[i][a];
                        for j in 0..n {
                            s[i * n + j] += wi * g[j][b];
                        }
                    }
                }
                for p in 0..np {
                    let wp = w * tp.values[q][p];
                    for j in 0..n {
                        mixed[a][p * n + j] += wp * g[j][a];
                    }
                }
            }
        }
        Ok(ReferenceIntegrals { stiff, mixed })
    }
}

fn cell_velocity_dofs(v: &FunctionSpace, c: usize, out: &mut Vec<usize>) {
    out.clear();
    for &n in v.cell_nodes(c) {
        out.push(2 * n);
        out.push(2 * n + 1);
    }
}

/// Sparsity of the monolithic operator: full 2x2 velocity blocks per node
/// pair sharing a cell, velocity-pressure couplings both ways, and an
/// empty pressure-pressure block.
pub fn stokes_pattern(spaces: &StokesSpaces) -> CsrMatrix {
    let v = &spaces.velocity;
    let p = &spaces.pressure;
    let nu = v.num_dofs();
    let n = nu + p.num_dofs();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut vd = Vec::new();
    for c in 0..v.mesh().num_cells() {
        cell_velocity_dofs(v, c, &mut vd);
        let pd: Vec<usize> = p.cell_nodes(c).iter().map(|&q| nu + q).collect();
        for &i in &vd {
            rows[i].extend_from_slice(&vd);
            rows[i].extend_from_slice(&pd);
        }
        for &q in &pd {
            rows[q].extend_from_slice(&vd);
        }
    }
    for r in rows.iter_mut() {
        r.sort_unstable();
        r.dedup();
    }
    CsrMatrix::from_pattern(n, rows)
}

/// Monolithic operator without boundary conditions.
pub fn assemble_stokes_matrix(spaces: &StokesSpaces) -> Result<CsrMatrix> {
    let v = &spaces.velocity;
    let p = &spaces.pressure;
    if !v.mesh().same_as(p.mesh()) {
        return Err(Error::DimensionMismatch("velocity and pressure live on different meshes".into()));
    }
    let refs = ReferenceIntegrals::new(v.element(), p.element())?;
    let mesh = v.mesh();
    let nu = v.num_dofs();
    let n = v.nodes_per_cell();
    let np = p.nodes_per_cell();
    let mut k = stokes_pattern(spaces);
    let mut aloc = vec![0.0; n * n];
    let mut bloc = [vec![0.0; np * n], vec![0.0; np * n]];
    for c in 0..mesh.num_cells() {
        let g = CellGeometry::new(mesh, c);
        // grad phi . grad psi = sum_ab G_ab dphi/dxi_a dpsi/dxi_b with
        // G = J^{-1} J^{-T}
        let mut gm = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                gm[a][b] = g.det_abs * (g.jinv[a][0] * g.jinv[b][0] + g.jinv[a][1] * g.jinv[b][1]);
            }
        }
        for (idx, val) in aloc.iter_mut().enumerate() {
            *val = gm[0][0] * refs.stiff[0][0][idx]
                + gm[0][1] * refs.stiff[0][1][idx]
                + gm[1][0] * refs.stiff[1][0][idx]
                + gm[1][1] * refs.stiff[1][1][idx];
        }
        for (comp, bl) in bloc.iter_mut().enumerate() {
            let (c0, c1) = (-g.det_abs * g.jinv[0][comp], -g.det_abs * g.jinv[1][comp]);
            for (idx, val) in bl.iter_mut().enumerate() {
                *val = c0 * refs.mixed[0][idx] + c1 * refs.mixed[1][idx];
            }
        }
        let vn = v.cell_nodes(c);
        let pn = p.cell_nodes(c);
        for i in 0..n {
            for j in 0..n {
                let a = aloc[i * n + j];
                k.add_to(2 * vn[i], 2 * vn[j], a);
                k.add_to(2 * vn[i] + 1, 2 * vn[j] + 1, a);
            }
        }
        for q in 0..np {
            let row = nu + pn[q];
            for j in 0..n {
                for (comp, bl) in bloc.iter().enumerate() {
                    let b = bl[q * n + j];
                    let col = 2 * vn[j] + comp;
                    k.add_to(row, col, b);
                    k.add_to(col, row, b);
                }
            }
        }
    }
    Ok(k)
}

/// Vector Laplacian on a two-component space, with the same full 2x2
/// node-block sparsity as the velocity block of the Stokes operator.
pub fn assemble_vector_laplacian(v: &FunctionSpace) -> Result<CsrMatrix> {
    if v.components() != 2 {
        return Err(Error::InvalidArgument("vector Laplacian needs a two-component space".into()));
    }
    let refs = ReferenceIntegrals::new(v.element(), &ReferenceElement::constant())?;
    let mesh = v.mesh();
    let n = v.nodes_per_cell();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); v.num_dofs()];
    let mut vd = Vec::new();
    for c in 0..mesh.num_cells() {
        cell_velocity_dofs(v, c, &mut vd);
        for &i in &vd {
            rows[i].extend_from_slice(&vd);
        }
    }
    for r in rows.iter_mut() {
        r.sort_unstable();
        r.dedup();
    }
    let mut a = CsrMatrix::from_pattern(v.num_dofs(), rows);
    for c in 0..mesh.num_cells() {
        let g = CellGeometry::new(mesh, c);
        let vn = v.cell_nodes(c);
        let mut gm = [[0.0; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                gm[x][y] = g.det_abs * (g.jinv[x][0] * g.jinv[y][0] + g.jinv[x][1] * g.jinv[y][1]);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                let val = gm[0][0] * refs.stiff[0][0][idx]
                    + gm[0][1] * refs.stiff[0][1][idx]
                    + gm[1][0] * refs.stiff[1][0][idx]
                    + gm[1][1] * refs.stiff[1][1][idx];
                a.add_to(2 * vn[i], 2 * vn[j], val);
                a.add_to(2 * vn[i] + 1, 2 * vn[j] + 1, val);
            }
        }
    }
    Ok(a)
}

/// Mask of velocity DoFs on boundary edges with the given markers, for a
/// velocity space alone.
pub fn velocity_dirichlet_mask(v: &FunctionSpace, markers: &[i32]) -> Vec<bool> {
    let mut mask = vec![false; v.num_dofs()];
    for n in v.boundary_nodes(|m| markers.contains(&m)) {
        for comp in 0..v.components() {
            mask[v.dof(n, comp)] = true;
        }
    }
    mask
}

/// DoF mask of velocity nodes on boundary edges with the given markers,
/// over the full monolithic index range.
pub fn dirichlet_mask(spaces: &StokesSpaces, markers: &[i32]) -> Vec<bool> {
    let mut mask = vec![false; spaces.num_dofs()];
    for n in spaces.velocity.boundary_nodes(|m| markers.contains(&m)) {
        mask[2 * n] = true;
        mask[2 * n + 1] = true;
    }
    mask
}

/// Zeroes masked rows and columns and puts 1 on their diagonal. The
/// sparsity pattern is kept.
pub fn eliminate_homogeneous(k: &mut CsrMatrix, mask: &[bool]) {
    k.zero_rows_and_cols(mask, mask);
    for (i, &m) in mask.iter().enumerate() {
        if m {
            k.add_to(i, i, 1.0);
        }
    }
}

/// Operator of one multigrid level: rediscretized on `spaces` with
/// homogeneous Dirichlet elimination on `markers`.
pub fn assemble_level_operator(spaces: &StokesSpaces, markers: &[i32]) -> Result<(CsrMatrix, Vec<bool>)> {
    let mut k = assemble_stokes_matrix(spaces)?;
    let mask = dirichlet_mask(spaces, markers);
    eliminate_homogeneous(&mut k, &mask);
    Ok((k, mask))
}

/// Discrete Stokes problem with Dirichlet conditions eliminated.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub spaces: StokesSpaces,
    pub k: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Sorted velocity DoFs fixed by Dirichlet data.
    pub dirichlet_dofs: Vec<usize>,
    pub dirichlet_values: Vec<f64>,
    pub dirichlet_mask: Vec<bool>,
    /// Pressure determined only up to a constant.
    pub enclosed: bool,
}

impl SaddleSystem {
    pub fn num_velocity_dofs(&self) -> usize {
        self.spaces.num_velocity_dofs()
    }

    pub fn num_pressure_dofs(&self) -> usize {
        self.spaces.num_pressure_dofs()
    }

    pub fn num_dofs(&self) -> usize {
        self.k.nrows()
    }

    pub fn a(&self) -> CsrMatrix {
        let nu = self.num_velocity_dofs();
        self.k.block(0..nu, 0..nu)
    }

    pub fn b(&self) -> CsrMatrix {
        let nu = self.num_velocity_dofs();
        self.k.block(nu..self.num_dofs(), 0..nu)
    }

    pub fn bt(&self) -> CsrMatrix {
        let nu = self.num_velocity_dofs();
        self.k.block(0..nu, nu..self.num_dofs())
    }

    /// Average stored entries per row of `K`.
    pub fn nnz_per_dof(&self) -> f64 {
        self.k.nnz() as f64 / self.num_dofs() as f64
    }

    /// Unit vector spanning the constant-pressure kernel, if enclosed.
    pub fn nullspace(&self) -> Option<Vec<f64>> {
        if !self.enclosed {
            return None;
        }
        let nu = self.num_velocity_dofs();
        let np = self.num_pressure_dofs();
        let mut v = vec![0.0; self.num_dofs()];
        let s = 1.0 / (np as f64).sqrt();
        v[nu..].iter_mut().for_each(|x| *x = s);
        Some(v)
    }

    /// Splits a monolithic vector into velocity and pressure parts.
    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.num_velocity_dofs())
    }
}

/// Assembles `K`, the load vector from the forcing and Neumann data, and
/// eliminates Dirichlet conditions symmetrically.
pub fn assemble_stokes(problem: &ProblemInstance, spaces: &StokesSpaces) -> Result<SaddleSystem> {
    problem.validate()?;
    let mut k = assemble_stokes_matrix(spaces)?;
    let v = &spaces.velocity;
    let mesh = v.mesh();
    let n_total = spaces.num_dofs();
    let mut rhs = vec![0.0; n_total];

    let el = v.element();
    let rule = triangle_rule(2 * v.degree())?;
    let tab = el.tabulate(&rule);
    for c in 0..mesh.num_cells() {
        let g = CellGeometry::new(mesh, c);
        let nodes = v.cell_nodes(c);
        for (q, &w) in rule.weights.iter().enumerate() {
            let f = (problem.forcing)(g.map(rule.points[q]));
            let wq = w * g.det_abs;
            for (i, &n) in nodes.iter().enumerate() {
                let phi = tab.values[q][i];
                rhs[2 * n] += wq * f[0] * phi;
                rhs[2 * n + 1] += wq * f[1] * phi;
            }
        }
    }

    let (ts, tw) = interval_rule(2 * v.degree());
    for (&e, m) in mesh.boundary_markers() {
        let Some(BoundaryCondition::Neumann(gn)) = problem.boundary.get(m) else { continue };
        let c = mesh.edge_cells(e)[0];
        let cell_edges = mesh.cell_edges(c);
        let le = cell_edges.iter().position(|&x| x == e).expect("edge belongs to its cell");
        let [p, q] = LOCAL_EDGES[le];
        let x = mesh.cell_coords(c);
        let len = (x[q][0] - x[p][0]).hypot(x[q][1] - x[p][1]);
        let nodes = v.cell_nodes(c);
        for (&t, &w) in ts.iter().zip(&tw) {
            let mut l = [0.0; 3];
            l[p] = 1.0 - t;
            l[q] = t;
            let pt = [
                l[0] * x[0][0] + l[1] * x[1][0] + l[2] * x[2][0],
                l[0] * x[0][1] + l[1] * x[1][1] + l[2] * x[2][1],
            ];
            let gv = gn(pt);
            let phi = el.values(l);
            for (i, &n) in nodes.iter().enumerate() {
                rhs[2 * n] += w * len * gv[0] * phi[i];
                rhs[2 * n + 1] += w * len * gv[1] * phi[i];
            }
        }
    }

    let mut values: BTreeMap<usize, f64> = BTreeMap::new();
    for (m, bc) in &problem.boundary {
        let BoundaryCondition::Dirichlet(gd) = bc else { continue };
        for n in v.boundary_nodes(|x| x == *m) {
            let val = gd(v.node_coord(n));
            values.entry(2 * n).or_insert(val[0]);
            values.entry(2 * n + 1).or_insert(val[1]);
        }
    }
    let dirichlet_dofs: Vec<usize> = values.keys().copied().collect();
    let dirichlet_values: Vec<f64> = values.values().copied().collect();
    let mut mask = vec![false; n_total];
    let mut lift = vec![0.0; n_total];
    for (&d, &val) in dirichlet_dofs.iter().zip(&dirichlet_values) {
        mask[d] = true;
        lift[d] = val;
    }
    k.spmv_add(-1.0, &lift, &mut rhs);
    eliminate_homogeneous(&mut k, &mask);
    for (&d, &val) in dirichlet_dofs.iter().zip(&dirichlet_values) {
        rhs[d] = val;
    }

    Ok(SaddleSystem {
        spaces: spaces.clone(),
        k,
        rhs,
        dirichlet_dofs,
        dirichlet_values,
        dirichlet_mask: mask,
        enclosed: problem.enclosed,
    })
}

/// Scalar mass matrix of a one-component space. Block diagonal (one
/// dense block per cell) for discontinuous spaces.
pub fn assemble_mass(space: &FunctionSpace) -> Result<CsrMatrix> {
    if space.components() != 1 {
        return Err(Error::InvalidArgument("mass matrix of a vector space".into()));
    }
    let el = space.element();
    let rule = triangle_rule((2 * space.degree()).max(1))?;
    let tab = el.tabulate(&rule);
    let n = el.num_nodes();
    let mut refm = vec![0.0; n * n];
    for (q, &w) in rule.weights.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                refm[i * n + j] += w * tab.values[q][i] * tab.values[q][j];
            }
        }
    }
    let mesh = space.mesh();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); space.num_nodes()];
    for c in 0..mesh.num_cells() {
        let nodes = space.cell_nodes(c);
        for &i in nodes {
            rows[i].extend_from_slice(nodes);
        }
    }
    for r in rows.iter_mut() {
        r.sort_unstable();
        r.dedup();
    }
    let mut m = CsrMatrix::from_pattern(space.num_nodes(), rows);
    for c in 0..mesh.num_cells() {
        let det = CellGeometry::new(mesh, c).det_abs;
        let nodes = space.cell_nodes(c);
        for i in 0..n {
            for j in 0..n {
                m.add_to(nodes[i], nodes[j], det * refm[i * n + j]);
            }
        }
    }
    Ok(m)
}

fn cell_divergences(u: &[f64], space: &FunctionSpace, extra_degree: usize, mut visit: impl FnMut(f64, f64)) -> Result<()> {
    assert_eq!(space.components(), 2);
    assert_eq!(u.len(), space.num_dofs());
    let rule = triangle_rule(2 * space.degree() + extra_degree)?;
    let tab = space.element().tabulate(&rule);
    let mesh = space.mesh();
    for c in 0..mesh.num_cells() {
        let g = CellGeometry::new(mesh, c);
        let nodes = space.cell_nodes(c);
        for (q, &w) in rule.weights.iter().enumerate() {
            let mut div = 0.0;
            for (i, &n) in nodes.iter().enumerate() {
                let gr = g.grad(tab.grads[q][i]);
                div += u[2 * n] * gr[0] + u[2 * n + 1] * gr[1];
            }
            visit(w * g.det_abs, div);
        }
    }
    Ok(())
}

/// `||div u_h||_{L2}` with a rule of degree `2k`.
pub fn divergence_l2_norm(u: &[f64], space: &FunctionSpace) -> Result<f64> {
    let mut s = 0.0;
    cell_divergences(u, space, 0, |w, d| s += w * d * d)?;
    Ok(s.sqrt())
}

/// Largest `|div u_h|` over the points of the degree-`2k` rule.
pub fn divergence_max(u: &[f64], space: &FunctionSpace) -> Result<f64> {
    let mut m = 0.0f64;
    cell_divergences(u, space, 0, |_, d| m = m.max(d.abs()))?;
    Ok(m)
}

/// Evaluates the finite element function with coefficients `x` of
/// component `comp` at the points of `rule` in cell `c`.
fn eval_field(space: &FunctionSpace, tab_values: &[Vec<f64>], x: &[f64], c: usize, comp: usize, out: &mut [f64]) {
    let nodes = space.cell_nodes(c);
    let nc = space.components();
    for (q, o) in out.iter_mut().enumerate() {
        *o = nodes.iter().enumerate().map(|(i, &n)| tab_values[q][i] * x[nc * n + comp]).sum();
    }
}

/// L2 errors of velocity and pressure against an exact solution, with a
/// rule of degree `2k + 2`. With `subtract_mean` both pressures are
/// compared after removing their means.
pub fn compute_errors(
    u: &[f64],
    p: &[f64],
    spaces: &StokesSpaces,
    exact: &ExactSolution,
    subtract_mean: bool,
) -> Result<(f64, f64)> {
    let v = &spaces.velocity;
    let q = &spaces.pressure;
    let mesh = v.mesh();
    let rule = triangle_rule(2 * v.degree() + 2)?;
    let tv = v.element().tabulate(&rule);
    let tq = q.element().tabulate(&rule);
    let nq = rule.len();
    let (mut ux, mut uy, mut ph) = (vec![0.0; nq], vec![0.0; nq], vec![0.0; nq]);

    let (mut mean_h, mut mean_e, mut area) = (0.0, 0.0, 0.0);
    if subtract_mean {
        for c in 0..mesh.num_cells() {
            let g = CellGeometry::new(mesh, c);
            eval_field(q, &tq.values, p, c, 0, &mut ph);
            for (k, &w) in rule.weights.iter().enumerate() {
                let wq = w * g.det_abs;
                mean_h += wq * ph[k];
                mean_e += wq * (exact.pressure)(g.map(rule.points[k]));
                area += wq;
            }
        }
        mean_h /= area;
        mean_e /= area;
    }

    let (mut eu, mut ep) = (0.0, 0.0);
    for c in 0..mesh.num_cells() {
        let g = CellGeometry::new(mesh, c);
        eval_field(v, &tv.values, u, c, 0, &mut ux);
        eval_field(v, &tv.values, u, c, 1, &mut uy);
        eval_field(q, &tq.values, p, c, 0, &mut ph);
        for (k, &w) in rule.weights.iter().enumerate() {
            let x = g.map(rule.points[k]);
            let wq = w * g.det_abs;
            let ue = (exact.velocity)(x);
            eu += wq * ((ux[k] - ue[0]).powi(2) + (uy[k] - ue[1]).powi(2));
            let pe = (exact.pressure)(x) - mean_e;
            ep += wq * (ph[k] - mean_h - pe).powi(2);
        }
    }
    Ok((eu.sqrt(), ep.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::problem::Family;
    use crate::fem::space::Continuity;
    use std::sync::Arc;

    fn grid(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::structured(n, [[-1.0, 1.0], [-1.0, 1.0]]).unwrap())
    }

    #[test]
    fn a_is_symmetric_and_annihilates_constants() {
        let sp = StokesSpaces::new(grid(3), Family::TaylorHood, 3).unwrap();
        let k = assemble_stokes_matrix(&sp).unwrap();
        let nu = sp.num_velocity_dofs();
        let a = k.block(0..nu, 0..nu);
        let at = a.transpose();
        let scale = a.max_abs();
        for i in 0..nu {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                assert!((v - at.get(i, j)).abs() <= 1e-12 * scale);
            }
        }
        let ones: Vec<f64> = (0..nu).map(|i| if i % 2 == 0 { 1.0 } else { -2.0 }).collect();
        let r = a.mul_vec(&ones);
        assert!(r.iter().all(|v| v.abs() <= 1e-12 * scale));
        // B applied to a constant field vanishes
        let b = k.block(nu..sp.num_dofs(), 0..nu);
        assert!(b.mul_vec(&ones).iter().all(|v| v.abs() <= 1e-12));
        // K has no pressure-pressure block
        let pp = k.block(nu..sp.num_dofs(), nu..sp.num_dofs());
        assert_eq!(pp.nnz(), 0);
    }

    #[test]
    fn element_stiffness_matches_quadrature_oracle() {
        // scalar stiffness of a single physical cell by direct quadrature
        let m = Arc::new(
            Mesh::new(vec![[0.1, 0.0], [1.3, 0.2], [0.4, 0.9]], vec![[0, 1, 2]], &[]).unwrap(),
        );
        let sp = StokesSpaces::new(m.clone(), Family::TaylorHood, 4).unwrap();
        let k = assemble_stokes_matrix(&sp).unwrap();
        let el = sp.velocity.element();
        let rule = triangle_rule(8).unwrap();
        let g = CellGeometry::new(&m, 0);
        let n = el.num_nodes();
        let nodes = sp.velocity.cell_nodes(0);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for (q, &w) in rule.weights.iter().enumerate() {
                    let l = rule.barycentric(q);
                    let gi = g.grad(el.grads(l)[i]);
                    let gj = g.grad(el.grads(l)[j]);
                    s += w * g.det_abs * (gi[0] * gj[0] + gi[1] * gj[1]);
                }
                let (gi, gj) = (nodes[i], nodes[j]);
                assert!((k.get(2 * gi, 2 * gj) - s).abs() < 1e-12);
                assert!((k.get(2 * gi + 1, 2 * gj + 1) - s).abs() < 1e-12);
                assert_eq!(k.get(2 * gi, 2 * gj + 1), 0.0);
            }
        }
    }

    #[test]
    fn vector_laplacian_matches_stokes_block() {
        let sp = StokesSpaces::new(grid(2), Family::TaylorHood, 3).unwrap();
        let k = assemble_stokes_matrix(&sp).unwrap();
        let nu = sp.num_velocity_dofs();
        let a = assemble_vector_laplacian(&sp.velocity).unwrap();
        let blk = k.block(0..nu, 0..nu);
        assert_eq!(a.row_ptr(), blk.row_ptr());
        assert_eq!(a.col_indices(), blk.col_indices());
        for (x, y) in a.values().iter().zip(blk.values()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn divergence_of_simple_fields() {
        let m = grid(2);
        let v = FunctionSpace::new(m.clone(), 2, Continuity::Continuous, 2).unwrap();
        let rot = v.interpolate_vector(|x| [x[1], -x[0]]);
        assert!(divergence_l2_norm(&rot, &v).unwrap() <= 1e-13);
        let radial = v.interpolate_vector(|x| [x[0], x[1]]);
        let n = divergence_l2_norm(&radial, &v).unwrap();
        assert!((n - 2.0 * m.area().sqrt()).abs() <= 1e-12);
        assert!((divergence_max(&radial, &v).unwrap() - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn mass_matrix_properties() {
        let single = Arc::new(Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], &[]).unwrap());
        let d0 = FunctionSpace::new(single, 0, Continuity::Discontinuous, 1).unwrap();
        let m0 = assemble_mass(&d0).unwrap();
        assert_eq!(m0.nrows(), 1);
        assert!((m0.get(0, 0) - 0.5).abs() < 1e-15);

        let bary = Arc::new(Mesh::refine_barycentric(&grid(2)));
        let d2 = FunctionSpace::new(bary.clone(), 2, Continuity::Discontinuous, 1).unwrap();
        let m2 = assemble_mass(&d2).unwrap();
        assert_eq!(m2.nnz(), bary.num_cells() * 36);
        let total: f64 = m2.values().iter().sum();
        assert!((total - bary.area()).abs() <= 1e-12);
        for r in 0..m2.nrows() {
            let (cols, _) = m2.row(r);
            assert!(cols.iter().all(|&c| c / 6 == r / 6));
        }
        let c3 = FunctionSpace::new(grid(3), 3, Continuity::Continuous, 1).unwrap();
        let m3 = assemble_mass(&c3).unwrap();
        let total: f64 = m3.values().iter().sum();
        assert!((total - 4.0).abs() <= 1e-12);
        assert!(m3.diagonal().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn errors_vanish_for_interpolated_polynomials() {
        let sp = StokesSpaces::new(grid(2), Family::TaylorHood, 3).unwrap();
        let ue = |x: Point| [x[0] * x[1] * x[1], -x[1].powi(3) / 3.0];
        let pe = |x: Point| x[0] * x[0] - x[1];
        let exact = ExactSolution { velocity: Arc::new(ue), pressure: Arc::new(pe) };
        let u = sp.velocity.interpolate_vector(ue);
        let p = sp.pressure.interpolate_scalar(pe);
        let (eu, ep) = compute_errors(&u, &p, &sp, &exact, true).unwrap();
        assert!(eu <= 1e-12 && ep <= 1e-12, "{eu} {ep}");
        let zero = vec![0.0; u.len()];
        let (eu0, _) = compute_errors(&zero, &p, &sp, &exact, false).unwrap();
        // ||u||^2 over [-1,1]^2 computed analytically: int x^2 y^4 + y^6/9
        let exact_norm = ((2.0 / 3.0) * (2.0 / 5.0) + 2.0 * (2.0 / 7.0) / 9.0f64).sqrt();
        assert!((eu0 - exact_norm).abs() <= 1e-12);
    }
}
