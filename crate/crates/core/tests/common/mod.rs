#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use stokes_mg::fem::{
    assemble_mass, assemble_stokes, BoundaryCondition, Family, FunctionSpace, ProblemInstance, SaddleSystem, StokesSpaces,
};
use stokes_mg::linalg::{CsrMatrix, DenseMatrix};
use stokes_mg::mesh::{Mesh, MeshHierarchy, Point};
use stokes_mg::profile::Profiler;
use stokes_mg::relaxation::PatchSet;
use stokes_mg::solvers::{CycleParams, MGHierarchy};

/// Unit-square channel: parabolic inflow on the left, no slip on top and
/// bottom, traction-free outflow on the right. Not enclosed, so every
/// level operator is nonsingular.
pub fn channel(base_cells: usize, refinements: usize, k: usize, family: Family) -> ProblemInstance {
    let base = Mesh::structured(base_cells, [[0.0, 1.0], [0.0, 1.0]]).unwrap();
    let mut boundary = BTreeMap::new();
    let zero: stokes_mg::fem::VectorFn = Arc::new(|_| [0.0, 0.0]);
    boundary.insert(1, BoundaryCondition::Dirichlet(zero.clone()));
    boundary.insert(3, BoundaryCondition::Dirichlet(zero.clone()));
    boundary.insert(4, BoundaryCondition::Dirichlet(Arc::new(|x| [x[1] * (1.0 - x[1]), 0.0])));
    boundary.insert(2, BoundaryCondition::Neumann(zero.clone()));
    let p = ProblemInstance {
        name: "channel".into(),
        hierarchy: MeshHierarchy::new(base, refinements, family == Family::ScottVogelius),
        family,
        degree: k,
        boundary,
        forcing: Arc::new(|x| [x[1].sin(), x[0] * x[0]]),
        exact: None,
        enclosed: false,
    };
    p.validate().unwrap();
    p
}

pub fn system(p: &ProblemInstance) -> SaddleSystem {
    assemble_stokes(p, &p.spaces().unwrap()).unwrap()
}

pub fn to_na(d: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)])
}

pub fn csr_to_na(a: &CsrMatrix) -> DMatrix<f64> {
    to_na(&a.to_dense())
}

/// Dense matrix of a linear map given by its action, column by column.
pub fn columns(n: usize, mut apply: impl FnMut(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let y = apply(&e);
        for i in 0..n {
            out[(i, j)] = y[i];
        }
        e[j] = 0.0;
    }
    out
}

/// `sum_i I_i^T W_i K_i^{-1} I_i` assembled densely from the patch index
/// lists and weights, inverting each gathered block with nalgebra.
pub fn dense_asm(k: &DMatrix<f64>, patches: &PatchSet) -> DMatrix<f64> {
    let n = k.nrows();
    let mut m = DMatrix::zeros(n, n);
    for p in patches.patches() {
        let d = &p.dofs;
        let sub = DMatrix::from_fn(d.len(), d.len(), |i, j| k[(d[i], d[j])]);
        let inv = sub.try_inverse().expect("nonsingular patch");
        for i in 0..d.len() {
            for j in 0..d.len() {
                m[(d[i], d[j])] += p.weights[i] * inv[(i, j)];
            }
        }
    }
    m
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// One Richardson step per smoothing phase so that the cycle is exactly
/// the textbook product formula.
pub fn richardson() -> CycleParams {
    CycleParams { nu_h: 1, nu_p: 1, ..Default::default() }
}

pub fn weight(params: &CycleParams, lambda: f64) -> f64 {
    2.0 / ((params.bounds.lower + params.bounds.upper) * lambda)
}

/// Error propagation of the hierarchy below and including level `l`,
/// built from dense operators: smoother `I - w M^{-1} K`, coarse correction
/// `I - P (I - E_c^{n}) K_c^{-1} R K`.
pub fn dense_error_propagation(h: &MGHierarchy, l: usize) -> DMatrix<f64> {
    let levels = h.levels();
    let lv = &levels[l];
    let k = csr_to_na(&lv.operator);
    let n = k.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    if l + 1 == levels.len() {
        return DMatrix::zeros(n, n);
    }
    let m = dense_asm(&k, lv.patches.as_ref().unwrap());
    let w = weight(h.params(), lv.lambda_max);
    let s = &id - w * &m * &k;
    let p = csr_to_na(lv.prolongation.as_ref().unwrap());
    let r = p.transpose();
    let kc = csr_to_na(&levels[l + 1].operator);
    let kc_inv = kc.clone().try_inverse().unwrap();
    let ec = dense_error_propagation(h, l + 1);
    let nc = kc.nrows();
    let repeats = if l + 1 == h.h_start() { h.params().nv } else { 1 };
    let ec_pow = (0..repeats).fold(DMatrix::<f64>::identity(nc, nc), |acc, _| acc * &ec);
    let approx = (DMatrix::<f64>::identity(nc, nc) - ec_pow) * kc_inv;
    let cgc = &id - p * approx * r * &k;
    &s * cgc * &s
}

pub fn cycle_error_propagation(h: &MGHierarchy) -> DMatrix<f64> {
    let k = csr_to_na(&h.levels()[0].operator);
    let n = k.nrows();
    let prof = Profiler::new();
    let v = columns(n, |b| h.vcycle(b, None, &prof));
    DMatrix::identity(n, n) - v * k
}

/// `[I -A~^{-1} B^T; 0 I] diag(A~^{-1}, -M_p^{-1}) [I 0; -B A~^{-1} I]`
/// with a frozen dense `A~^{-1}`.
pub fn dense_fbf(sys: &SaddleSystem, a_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let nu = sys.num_velocity_dofs();
    let np = sys.num_pressure_dofs();
    let n = nu + np;
    let b = csr_to_na(&sys.b());
    let bt = csr_to_na(&sys.bt());
    let s_inv = -csr_to_na(&assemble_mass(&sys.spaces.pressure).unwrap()).try_inverse().unwrap();
    let mut upper = DMatrix::<f64>::identity(n, n);
    upper.view_mut((0, nu), (nu, np)).copy_from(&(-a_inv * &bt));
    let mut diag = DMatrix::<f64>::zeros(n, n);
    diag.view_mut((0, 0), (nu, nu)).copy_from(&a_inv);
    diag.view_mut((nu, nu), (np, np)).copy_from(&s_inv);
    let mut lower = DMatrix::<f64>::identity(n, n);
    lower.view_mut((nu, 0), (np, nu)).copy_from(&(-&b * a_inv));
    upper * diag * lower
}

/// Interior vertex whose star has six cells, as the first vertex of the
/// returned mesh.
pub fn valence_six(barycentric: bool) -> Arc<Mesh> {
    if barycentric {
        // a triangle split at an interior point has a valence-3 vertex,
        // which barycentric refinement turns into a valence-6 one
        let base = Arc::new(
            Mesh::new(
                vec![[0.3, 0.3], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                vec![[0, 1, 2], [0, 2, 3], [0, 3, 1]],
                &[],
            )
            .unwrap(),
        );
        Arc::new(Mesh::refine_barycentric(&base))
    } else {
        let r = 1.0;
        let mut v: Vec<Point> = vec![[0.0, 0.0]];
        for i in 0..6 {
            let t = std::f64::consts::PI / 3.0 * i as f64;
            v.push([r * t.cos(), r * t.sin()]);
        }
        let cells = (0..6).map(|i| [0, 1 + i, 1 + (i + 1) % 6]).collect();
        Arc::new(Mesh::new(v, cells, &[]).unwrap())
    }
}

pub fn inside(mesh: &Mesh, c: usize, x: Point) -> bool {
    mesh.barycentric_coords(c, x).iter().all(|&l| l >= -1e-12)
}

/// Patch size by geometry alone: velocity nodes lying in a cell touching
/// `v`, pressure nodes lying in such a cell but off the outer boundary of
/// the star.
pub fn brute_force_vanka(sp: &StokesSpaces, v: usize) -> usize {
    let mesh = sp.mesh();
    let xv = mesh.vertex(v);
    let star: Vec<usize> = (0..mesh.num_cells()).filter(|&c| mesh.cell(c).contains(&v)).collect();
    let count = |space: &FunctionSpace, open: bool| -> usize {
        let mut n = 0;
        for node in 0..space.num_nodes() {
            let x = space.node_coord(node);
            let hits: Vec<usize> = star.iter().copied().filter(|&c| inside(mesh, c, x)).collect();
            if hits.is_empty() {
                continue;
            }
            if open && space.continuity() == stokes_mg::fem::Continuity::Continuous {
                // continuous nodes on the star's outer ring belong to a
                // neighbouring star: their barycentric weight at v vanishes
                let lv = hits.iter().map(|&c| {
                    let i = mesh.cell(c).iter().position(|&w| w == v).unwrap();
                    mesh.barycentric_coords(c, x)[i]
                });
                if lv.fold(0.0f64, f64::max) <= 1e-12 && (x[0] - xv[0]).hypot(x[1] - xv[1]) > 1e-12 {
                    continue;
                }
            }
            if space.continuity() == stokes_mg::fem::Continuity::Discontinuous {
                let owner = space_owner(space, node);
                if !star.contains(&owner) {
                    continue;
                }
            }
            n += space.components();
        }
        n
    };
    count(&sp.velocity, false) + count(&sp.pressure, true)
}

pub fn space_owner(space: &FunctionSpace, node: usize) -> usize {
    (0..space.mesh().num_cells()).find(|&c| space.cell_nodes(c).contains(&node)).unwrap()
}

