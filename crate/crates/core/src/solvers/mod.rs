//! Multigrid and block preconditioners for the Stokes system, and the
//! FGMRES driver that uses them.

pub mod fbf;
pub mod mg;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fem::{Continuity, Family, FunctionSpace, ProblemInstance, SaddleSystem, StokesSpaces};
use crate::linalg::{fgmres, DenseLu, FgmresOptions, KrylovReport};
use crate::profile::{kernel, Profiler};

pub use fbf::{FbfPreconditioner, SchurSolver};
pub use mg::{CoarseSolver, CycleParams, LevelKind, LevelSpace, LevelSpec, MGHierarchy, MGLevel, COARSE_DOF_LIMIT};

/// Linear map applied once per Krylov iteration.
pub trait Preconditioner: Send + Sync {
    fn apply(&self, r: &[f64], z: &mut [f64], prof: &Profiler);

    fn dim(&self) -> usize;
}

/// Exact solve by dense LU.
#[derive(Clone, Debug)]
pub struct DenseSolver {
    lu: DenseLu,
}

impl DenseSolver {
    pub fn new(k: &crate::linalg::CsrMatrix) -> Result<Self> {
        Ok(DenseSolver { lu: DenseLu::factor_owned(k.to_dense())? })
    }
}

impl Preconditioner for DenseSolver {
    fn apply(&self, r: &[f64], z: &mut [f64], prof: &Profiler) {
        prof.time(kernel::COARSE_SOLVE, None, || self.lu.solve_into(r, z));
    }

    fn dim(&self) -> usize {
        self.lu.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PMode {
    Direct,
    Gradual,
}

/// Degrees visited on the finest mesh, from `k` down to 2.
pub fn p_coarsening_schedule(k: usize, mode: PMode) -> Result<Vec<usize>> {
    if !(2..=10).contains(&k) {
        return Err(Error::InvalidArgument(format!("no p-coarsening schedule for degree {k}")));
    }
    let s = match (mode, k) {
        (_, 2) => vec![2],
        (PMode::Direct, _) | (PMode::Gradual, 3..=5) => vec![k, 2],
        (PMode::Gradual, 6 | 7) => vec![k, 4, 2],
        (PMode::Gradual, _) => vec![k, 5, 2],
    };
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Hmg,
    PhmgDirect,
    PhmgGradual,
    FbfHmg,
    FbfPhmg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] =
        [SolverKind::Hmg, SolverKind::PhmgDirect, SolverKind::PhmgGradual, SolverKind::FbfHmg, SolverKind::FbfPhmg];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Hmg => "hmg",
            SolverKind::PhmgDirect => "phmg-direct",
            SolverKind::PhmgGradual => "phmg-gradual",
            SolverKind::FbfHmg => "fbf-hmg",
            SolverKind::FbfPhmg => "fbf-phmg",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown solver '{s}'")))
    }
}

fn velocity_space(mesh: &std::sync::Arc<crate::mesh::Mesh>, k: usize) -> Result<FunctionSpace> {
    FunctionSpace::new(mesh.clone(), k, Continuity::Continuous, 2)
}

/// Meshes of the problem hierarchy, finest first.
fn meshes_fine_to_coarse(problem: &ProblemInstance) -> Vec<std::sync::Arc<crate::mesh::Mesh>> {
    problem.hierarchy.meshes().iter().rev().cloned().collect()
}

/// Monolithic hMG: the problem discretization rediscretized on every mesh.
pub fn build_hmg(
    problem: &ProblemInstance,
    system: &SaddleSystem,
    params: CycleParams,
    prof: &Profiler,
) -> Result<MGHierarchy> {
    if problem.family == Family::ScottVogelius {
        return Err(Error::Unsupported("Scott-Vogelius spaces are not nested under mesh coarsening".into()));
    }
    let mut specs = Vec::new();
    for (l, mesh) in meshes_fine_to_coarse(problem).into_iter().enumerate() {
        let space = if l == 0 { system.spaces.clone() } else { StokesSpaces::new(mesh, problem.family, problem.degree)? };
        specs.push(LevelSpec { space: LevelSpace::Stokes(space), kind: LevelKind::H });
    }
    MGHierarchy::build(
        specs,
        Some((system.k.clone(), system.dirichlet_mask.clone())),
        &problem.dirichlet_markers(),
        problem.enclosed,
        params,
        prof,
    )
}

/// Level layout of monolithic phMG: p-levels on the finest mesh following
/// the schedule, then Taylor-Hood P2/P1 on every mesh.
pub fn phmg_levels(problem: &ProblemInstance, top: &StokesSpaces, mode: PMode) -> Result<Vec<LevelSpec>> {
    let k = problem.degree;
    let schedule = p_coarsening_schedule(k, mode)?;
    let meshes = meshes_fine_to_coarse(problem);
    let fine = &meshes[0];
    let mut specs = Vec::new();
    let sv_top = top.family == Family::ScottVogelius;
    for (i, &deg) in schedule.iter().enumerate() {
        let last = i + 1 == schedule.len();
        let space = if i == 0 { top.clone() } else { StokesSpaces::new(fine.clone(), Family::TaylorHood, deg)? };
        // the P2/P1 level on the finest mesh starts the h-part, unless the
        // top is Scott-Vogelius P2, which needs its own Taylor-Hood below
        let kind = if last && !(i == 0 && sv_top) { LevelKind::H } else { LevelKind::P };
        specs.push(LevelSpec { space: LevelSpace::Stokes(space), kind });
    }
    if sv_top && k == 2 {
        specs.push(LevelSpec {
            space: LevelSpace::Stokes(StokesSpaces::new(fine.clone(), Family::TaylorHood, 2)?),
            kind: LevelKind::H,
        });
    }
    for mesh in &meshes[1..] {
        specs.push(LevelSpec {
            space: LevelSpace::Stokes(StokesSpaces::new(mesh.clone(), Family::TaylorHood, 2)?),
            kind: LevelKind::H,
        });
    }
    Ok(specs)
}

/// Monolithic phMG on the problem discretization.
pub fn build_phmg(
    problem: &ProblemInstance,
    system: &SaddleSystem,
    mode: PMode,
    params: CycleParams,
    prof: &Profiler,
) -> Result<MGHierarchy> {
    let specs = phmg_levels(problem, &system.spaces, mode)?;
    MGHierarchy::build(
        specs,
        Some((system.k.clone(), system.dirichlet_mask.clone())),
        &problem.dirichlet_markers(),
        problem.enclosed,
        params,
        prof,
    )
}

/// Velocity-block hierarchy with star relaxation. `mode = None` keeps
/// degree `k` on every mesh; otherwise p-levels on the finest mesh are
/// followed by P2 on the coarser meshes.
pub fn build_velocity_mg(
    problem: &ProblemInstance,
    system: &SaddleSystem,
    mode: Option<PMode>,
    params: CycleParams,
    prof: &Profiler,
) -> Result<MGHierarchy> {
    let k = problem.degree;
    let meshes = meshes_fine_to_coarse(problem);
    let mut specs = Vec::new();
    let coarse_degree = match mode {
        None => k,
        Some(m) => {
            let schedule = p_coarsening_schedule(k, m)?;
            for (i, &deg) in schedule.iter().enumerate() {
                let kind = if i + 1 == schedule.len() { LevelKind::H } else { LevelKind::P };
                let space = if i == 0 { system.spaces.velocity.clone() } else { velocity_space(&meshes[0], deg)? };
                specs.push(LevelSpec { space: LevelSpace::Velocity(space), kind });
            }
            2
        }
    };
    if mode.is_none() {
        specs.push(LevelSpec { space: LevelSpace::Velocity(system.spaces.velocity.clone()), kind: LevelKind::H });
    }
    for mesh in &meshes[1..] {
        specs.push(LevelSpec { space: LevelSpace::Velocity(velocity_space(mesh, coarse_degree)?), kind: LevelKind::H });
    }
    let nu = system.num_velocity_dofs();
    MGHierarchy::build(
        specs,
        Some((system.a(), system.dirichlet_mask[..nu].to_vec())),
        &problem.dirichlet_markers(),
        false,
        params,
        prof,
    )
}

/// Builds the preconditioner selected by `kind`.
pub fn build_preconditioner(
    kind: SolverKind,
    problem: &ProblemInstance,
    system: &SaddleSystem,
    params: &CycleParams,
    prof: &Profiler,
) -> Result<Box<dyn Preconditioner>> {
    let params = params.clone();
    Ok(match kind {
        SolverKind::Hmg => Box::new(build_hmg(problem, system, params, prof)?),
        SolverKind::PhmgDirect => Box::new(build_phmg(problem, system, PMode::Direct, params, prof)?),
        SolverKind::PhmgGradual => Box::new(build_phmg(problem, system, PMode::Gradual, params, prof)?),
        SolverKind::FbfHmg => {
            let inner = build_velocity_mg(problem, system, None, params, prof)?;
            Box::new(FbfPreconditioner::new(system, Box::new(inner), prof)?)
        }
        SolverKind::FbfPhmg => {
            let inner = build_velocity_mg(problem, system, Some(PMode::Gradual), params, prof)?;
            Box::new(FbfPreconditioner::new(system, Box::new(inner), prof)?)
        }
    })
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub rtol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { rtol: 1e-10, restart: 30, max_iter: 500 }
    }
}

/// Right-preconditioned FGMRES on the assembled system, starting from the
/// Dirichlet lift. Krylov-loop time is charged to the profiler.
pub fn solve(
    system: &SaddleSystem,
    pc: &dyn Preconditioner,
    opts: &SolveOptions,
    prof: &Profiler,
) -> Result<(Vec<f64>, KrylovReport)> {
    let n = system.num_dofs();
    if pc.dim() != n {
        return Err(Error::DimensionMismatch(format!("preconditioner of size {} for {} unknowns", pc.dim(), n)));
    }
    let mut x0 = vec![0.0; n];
    for (&d, &v) in system.dirichlet_dofs.iter().zip(&system.dirichlet_values) {
        x0[d] = v;
    }
    let fopts = FgmresOptions {
        rtol: opts.rtol,
        restart: opts.restart,
        max_iter: opts.max_iter,
        nullspace: system.nullspace(),
    };
    let (x, report) = fgmres(|u, v| system.k.spmv(u, v), |r, z| pc.apply(r, z, prof), &system.rhs, Some(&x0), &fopts);
    prof.add(kernel::KRYLOV_OPERATOR, None, report.timings.operator);
    prof.add(kernel::ORTHOGONALIZATION, None, report.timings.orthogonalization);
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_stokes;
    use crate::problems::{lid_driven_cavity, manufactured};

    #[test]
    fn schedules() {
        assert_eq!(p_coarsening_schedule(5, PMode::Gradual).unwrap(), vec![5, 2]);
        assert_eq!(p_coarsening_schedule(7, PMode::Gradual).unwrap(), vec![7, 4, 2]);
        assert_eq!(p_coarsening_schedule(10, PMode::Direct).unwrap(), vec![10, 2]);
        assert_eq!(p_coarsening_schedule(2, PMode::Direct).unwrap(), vec![2]);
        assert_eq!(p_coarsening_schedule(6, PMode::Gradual).unwrap(), vec![6, 4, 2]);
        assert_eq!(p_coarsening_schedule(8, PMode::Gradual).unwrap(), vec![8, 5, 2]);
        assert!(p_coarsening_schedule(1, PMode::Direct).is_err());
        assert!(p_coarsening_schedule(11, PMode::Gradual).is_err());
        for k in 3..=5 {
            assert_eq!(p_coarsening_schedule(k, PMode::Direct).unwrap(), p_coarsening_schedule(k, PMode::Gradual).unwrap());
        }
    }

    #[test]
    fn solver_names_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        assert!("amg".parse::<SolverKind>().is_err());
    }

    #[test]
    fn hmg_level_layout() {
        let p = lid_driven_cavity(3, 2, Family::TaylorHood).unwrap();
        let sys = assemble_stokes(&p, &p.spaces().unwrap()).unwrap();
        let prof = Profiler::new();
        let h = build_hmg(&p, &sys, CycleParams::default(), &prof).unwrap();
        assert_eq!(h.num_levels(), 4);
        for lv in h.levels() {
            assert_eq!(lv.dim(), lv.space.num_dofs());
            assert_eq!(lv.space.degree(), 2);
            assert_eq!(lv.kind, LevelKind::H);
        }
        assert_eq!(h.h_start(), 0);
        let sv = lid_driven_cavity(1, 2, Family::ScottVogelius).unwrap();
        let sys = assemble_stokes(&sv, &sv.spaces().unwrap()).unwrap();
        assert!(matches!(build_hmg(&sv, &sys, CycleParams::default(), &prof), Err(Error::Unsupported(_))));
    }

    #[test]
    fn phmg_level_layout() {
        let p = lid_driven_cavity(2, 6, Family::TaylorHood).unwrap();
        let spaces = p.spaces().unwrap();
        let specs = phmg_levels(&p, &spaces, PMode::Gradual).unwrap();
        let degrees: Vec<usize> = specs.iter().map(|s| s.space.degree()).collect();
        assert_eq!(degrees, vec![6, 4, 2, 2, 2]);
        let kinds: Vec<LevelKind> = specs.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, vec![LevelKind::P, LevelKind::P, LevelKind::H, LevelKind::H, LevelKind::H]);

        let sv = lid_driven_cavity(1, 3, Family::ScottVogelius).unwrap();
        let specs = phmg_levels(&sv, &sv.spaces().unwrap(), PMode::Direct).unwrap();
        assert_eq!(specs[0].space.family(), Some(Family::ScottVogelius));
        assert_eq!(specs[1].space.family(), Some(Family::TaylorHood));
        assert_eq!(specs[1].space.degree(), 2);
        assert!(specs[1].space.mesh().same_as(specs[0].space.mesh()));
        assert!(specs[0].space.mesh().is_barycentric());

        let sv2 = lid_driven_cavity(1, 2, Family::ScottVogelius).unwrap();
        let specs = phmg_levels(&sv2, &sv2.spaces().unwrap(), PMode::Gradual).unwrap();
        assert_eq!(specs.len(), 4);
        assert_eq!(specs[0].kind, LevelKind::P);
        assert_eq!(specs[1].space.family(), Some(Family::TaylorHood));
    }

    #[test]
    fn zero_rhs_gives_zero_and_coarse_only_is_exact() {
        let p = manufactured(0, 2, Family::TaylorHood).unwrap();
        let sys = assemble_stokes(&p, &p.spaces().unwrap()).unwrap();
        let prof = Profiler::new();
        let h = build_hmg(&p, &sys, CycleParams::default(), &prof).unwrap();
        assert_eq!(h.num_levels(), 1);
        let n = sys.num_dofs();
        assert!(h.vcycle(&vec![0.0; n], None, &prof).iter().all(|&v| v == 0.0));

        // single level: pinned LU solve reproduces a consistent right-hand side
        let nu = sys.num_velocity_dofs();
        let mut xs: Vec<f64> = (0..n).map(|i| ((i * 13 % 7) as f64 - 3.0) / 5.0).collect();
        for (i, &m) in sys.dirichlet_mask.iter().enumerate() {
            if m {
                xs[i] = 0.0;
            }
        }
        let shift = xs[n - 1];
        xs[nu..].iter_mut().for_each(|v| *v -= shift);
        let b = sys.k.mul_vec(&xs);
        let x = h.vcycle(&b, None, &prof);
        for (a, e) in x.iter().zip(&xs) {
            assert!((a - e).abs() < 1e-10);
        }
    }

    #[test]
    fn every_solver_converges_on_a_small_cavity() {
        let opts = SolveOptions::default();
        for fam in [Family::TaylorHood, Family::ScottVogelius] {
            let p = lid_driven_cavity(1, 3, fam).unwrap();
            let sys = assemble_stokes(&p, &p.spaces().unwrap()).unwrap();
            for kind in SolverKind::ALL {
                if fam == Family::ScottVogelius && kind == SolverKind::Hmg {
                    continue;
                }
                let prof = Profiler::new();
                let pc = build_preconditioner(kind, &p, &sys, &CycleParams::default(), &prof).unwrap();
                let (_, rep) = solve(&sys, pc.as_ref(), &opts, &prof).unwrap();
                assert!(rep.converged, "{fam} {kind}: {:?}", rep.residual_history.last());
                assert!(rep.iterations < 100, "{fam} {kind}: {}", rep.iterations);
            }
        }
    }
}
