//! Benchmark problems.
//!
//! * `ldc2d`: regularized lid-driven cavity on `[-1, 1]^2`, lid velocity
//!   `(1 - x^4, 0)` on `y = 1`, no slip elsewhere.
//! * `bfs2d`: backward-facing step on `(-1, 0) x (0, 1) U (0, 5) x (-1, 1)`
//!   with inflow `(4 y (1 - y), 0)` at `x = -1`, traction-free outflow at
//!   `x = 5` and no slip on the walls.
//! * `manufactured`: smooth exact solution on `[-1, 1]^2` with
//!   `u = curl(sin^2(pi x) sin^2(pi y))`, `p = sin(pi x) cos(pi y)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use crate::error::Result;
use crate::fem::{BoundaryCondition, ExactSolution, Family, ProblemInstance, VectorFn};
use crate::mesh::{Mesh, MeshHierarchy, Point};

/// Unstructured base mesh of the step domain.
pub const BFS_MESH: &str = include_str!("../data/bfs2d.mesh");
pub const BFS_MESH_FILE: &str = "bfs2d.mesh";

/// Cells per side of the cavity base grid.
pub const CAVITY_BASE_CELLS: usize = 2;

pub const BFS_INFLOW: i32 = 1;
pub const BFS_OUTFLOW: i32 = 2;
pub const BFS_WALL: i32 = 3;
pub const CAVITY_LID: i32 = 3;

fn zero_vector() -> VectorFn {
    Arc::new(|_| [0.0, 0.0])
}

fn hierarchy(base: Mesh, refinements: usize, family: Family) -> MeshHierarchy {
    MeshHierarchy::new(base, refinements, family == Family::ScottVogelius)
}

fn square() -> Mesh {
    Mesh::structured(CAVITY_BASE_CELLS, [[-1.0, 1.0], [-1.0, 1.0]]).expect("valid grid")
}

pub fn lid_velocity(x: Point) -> [f64; 2] {
    [1.0 - x[0].powi(4), 0.0]
}

pub fn lid_driven_cavity(refinements: usize, k: usize, family: Family) -> Result<ProblemInstance> {
    let mut boundary = BTreeMap::new();
    for m in [1, 2, 4] {
        boundary.insert(m, BoundaryCondition::Dirichlet(zero_vector()));
    }
    boundary.insert(CAVITY_LID, BoundaryCondition::Dirichlet(Arc::new(lid_velocity)));
    let p = ProblemInstance {
        name: "ldc2d".into(),
        hierarchy: hierarchy(square(), refinements, family),
        family,
        degree: k,
        boundary,
        forcing: zero_vector(),
        exact: None,
        enclosed: true,
    };
    p.validate()?;
    Ok(p)
}

pub fn inflow_velocity(x: Point) -> [f64; 2] {
    [4.0 * x[1] * (1.0 - x[1]), 0.0]
}

/// Step problem on the bundled base mesh.
pub fn backward_facing_step(refinements: usize, k: usize, family: Family) -> Result<ProblemInstance> {
    let base = Mesh::parse(BFS_MESH, Path::new(BFS_MESH_FILE))?;
    backward_facing_step_on(base, refinements, k, family)
}

/// Step problem with the base mesh read from `dir/bfs2d.mesh`.
pub fn backward_facing_step_from_dir(
    dir: &Path,
    refinements: usize,
    k: usize,
    family: Family,
) -> Result<ProblemInstance> {
    let base = Mesh::load(dir.join(BFS_MESH_FILE))?;
    backward_facing_step_on(base, refinements, k, family)
}

pub fn backward_facing_step_on(base: Mesh, refinements: usize, k: usize, family: Family) -> Result<ProblemInstance> {
    let mut boundary = BTreeMap::new();
    boundary.insert(BFS_INFLOW, BoundaryCondition::Dirichlet(Arc::new(inflow_velocity)));
    boundary.insert(BFS_OUTFLOW, BoundaryCondition::Neumann(zero_vector()));
    boundary.insert(BFS_WALL, BoundaryCondition::Dirichlet(zero_vector()));
    let p = ProblemInstance {
        name: "bfs2d".into(),
        hierarchy: hierarchy(base, refinements, family),
        family,
        degree: k,
        boundary,
        forcing: zero_vector(),
        exact: None,
        enclosed: false,
    };
    p.validate()?;
    Ok(p)
}

pub fn manufactured_velocity(x: Point) -> [f64; 2] {
    let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
    [PI * sx * sx * (2.0 * PI * x[1]).sin(), -PI * (2.0 * PI * x[0]).sin() * sy * sy]
}

/// Has zero mean over `[-1, 1]^2` since `sin(pi x)` is odd.
pub fn manufactured_pressure(x: Point) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).cos()
}

/// `-lap(u) + grad(p)` for the manufactured fields.
pub fn manufactured_forcing(x: Point) -> [f64; 2] {
    let (tx, ty) = (2.0 * PI * x[0], 2.0 * PI * x[1]);
    let pi3 = PI * PI * PI;
    let lap = [2.0 * pi3 * ty.sin() * (2.0 * tx.cos() - 1.0), -2.0 * pi3 * tx.sin() * (2.0 * ty.cos() - 1.0)];
    let grad_p = [PI * (PI * x[0]).cos() * (PI * x[1]).cos(), -PI * (PI * x[0]).sin() * (PI * x[1]).sin()];
    [-lap[0] + grad_p[0], -lap[1] + grad_p[1]]
}

pub fn manufactured(refinements: usize, k: usize, family: Family) -> Result<ProblemInstance> {
    let velocity: VectorFn = Arc::new(manufactured_velocity);
    let mut boundary = BTreeMap::new();
    for m in 1..=4 {
        boundary.insert(m, BoundaryCondition::Dirichlet(velocity.clone()));
    }
    let p = ProblemInstance {
        name: "manufactured".into(),
        hierarchy: hierarchy(square(), refinements, family),
        family,
        degree: k,
        boundary,
        forcing: Arc::new(manufactured_forcing),
        exact: Some(ExactSolution { velocity, pressure: Arc::new(manufactured_pressure) }),
        enclosed: true,
    };
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::quadrature::{interval_rule, triangle_rule};
    use crate::fem::CellGeometry;

    #[test]
    fn lid_flux_vanishes() {
        // g_D . n is zero on every side: the lid is tangential, walls are at rest
        let p = lid_driven_cavity(1, 2, Family::TaylorHood).unwrap();
        let mesh = p.finest_mesh();
        let mut flux = 0.0;
        let (t, w) = interval_rule(8);
        for (&e, m) in mesh.boundary_markers() {
            let BoundaryCondition::Dirichlet(g) = &p.boundary[m] else { panic!() };
            let [a, b] = mesh.edge(e);
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
            for (&s, &ws) in t.iter().zip(&w) {
                let v = g([pa[0] + s * dx, pa[1] + s * dy]);
                // unnormalized normal times length
                flux += ws * (v[0] * dy - v[1] * dx);
            }
        }
        assert!(flux.abs() < 1e-14);
        assert!(p.enclosed);
    }

    #[test]
    fn refinement_counts() {
        let th = lid_driven_cavity(3, 2, Family::TaylorHood).unwrap();
        assert_eq!(th.hierarchy.len(), 4);
        assert_eq!(th.finest_mesh().num_cells(), 8 * 64);
        assert!(!th.finest_mesh().is_barycentric());
        let sv = lid_driven_cavity(3, 2, Family::ScottVogelius).unwrap();
        assert_eq!(sv.finest_mesh().num_cells(), 3 * 8 * 64);
        assert!(sv.finest_mesh().is_barycentric());
    }

    #[test]
    fn step_problem() {
        let p = backward_facing_step(0, 2, Family::TaylorHood).unwrap();
        assert!(!p.enclosed);
        assert!(matches!(p.boundary[&BFS_OUTFLOW], BoundaryCondition::Neumann(_)));
        let (t, w) = interval_rule(4);
        let flux: f64 = t.iter().zip(&w).map(|(&y, &wy)| wy * inflow_velocity([-1.0, y])[0]).sum();
        assert!((flux - 2.0 / 3.0).abs() < 1e-15);
        // inflow edges span y in [0, 1] at x = -1
        let mesh = p.finest_mesh();
        let mut len = 0.0;
        for (&e, &m) in mesh.boundary_markers() {
            if m == BFS_INFLOW {
                let [a, b] = mesh.edge(e);
                assert_eq!(mesh.vertex(a)[0], -1.0);
                assert_eq!(mesh.vertex(b)[0], -1.0);
                len += (mesh.vertex(a)[1] - mesh.vertex(b)[1]).abs();
            }
        }
        assert!((len - 1.0).abs() < 1e-14);
    }

    #[test]
    fn manufactured_fields() {
        let p = manufactured(1, 3, Family::TaylorHood).unwrap();
        let mesh = p.finest_mesh();
        let rule = triangle_rule(12).unwrap();
        let (mut mean, mut div_max) = (0.0f64, 0.0f64);
        let h = 1e-5;
        for c in 0..mesh.num_cells() {
            let g = CellGeometry::new(mesh, c);
            for (q, &w) in rule.weights.iter().enumerate() {
                let x = g.map(rule.points[q]);
                mean += w * g.det_abs * manufactured_pressure(x);
                let dudx = (manufactured_velocity([x[0] + h, x[1]])[0] - manufactured_velocity([x[0] - h, x[1]])[0]) / (2.0 * h);
                let dvdy = (manufactured_velocity([x[0], x[1] + h])[1] - manufactured_velocity([x[0], x[1] - h])[1]) / (2.0 * h);
                div_max = div_max.max((dudx + dvdy).abs());
            }
        }
        assert!(mean.abs() < 1e-12);
        assert!(div_max < 1e-6);
        // forcing against a finite-difference Laplacian
        let x = [0.31, -0.47];
        let hh = 1e-4;
        let lap = |i: usize| {
            let f = |p: Point| manufactured_velocity(p)[i];
            (f([x[0] + hh, x[1]]) + f([x[0] - hh, x[1]]) + f([x[0], x[1] + hh]) + f([x[0], x[1] - hh]) - 4.0 * f(x))
                / (hh * hh)
        };
        let gp = [
            (manufactured_pressure([x[0] + hh, x[1]]) - manufactured_pressure([x[0] - hh, x[1]])) / (2.0 * hh),
            (manufactured_pressure([x[0], x[1] + hh]) - manufactured_pressure([x[0], x[1] - hh])) / (2.0 * hh),
        ];
        let f = manufactured_forcing(x);
        assert!((f[0] - (-lap(0) + gp[0])).abs() < 1e-4 * f[0].abs().max(1.0));
        assert!((f[1] - (-lap(1) + gp[1])).abs() < 1e-4 * f[1].abs().max(1.0));
    }
}
