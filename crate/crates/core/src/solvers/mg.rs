//! Multigrid hierarchies and V-cycles.
//!
//! Levels are stored fine to coarse. The first `h_start` levels are
//! p-levels on the finest mesh; from `h_start` on, levels coarsen the
//! mesh at a fixed degree. Entering the h-part from a p-level runs it
//! `n_V` times (defect correction with an inexact `K_1^{-1}`).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_level_operator, assemble_vector_laplacian, eliminate_homogeneous, velocity_dirichlet_mask, Family,
    FunctionSpace, StokesSpaces,
};
use crate::linalg::chebyshev::POWER_ITERATIONS;
use crate::linalg::{chebyshev, estimate_lambda_max, ChebyshevBounds, CsrMatrix, DenseLu};
use crate::mesh::Mesh;
use crate::profile::{kernel, Profiler};
use crate::relaxation::{PatchSet, Weighting};
use crate::solvers::Preconditioner;
use crate::transfer::{build_h_prolongation, build_monolithic_transfer, build_p_prolongation, constrain};

/// Chebyshev target interval of the multigrid smoothers, as fractions of
/// the estimated largest eigenvalue of `M^{-1} K`. The weighted Vanka
/// operator has eigenvalues well off the real axis near the low end of its
/// spectrum, and a lower end of 0.3 lets those modes grow from level to
/// level.
pub const SMOOTHER_BOUNDS: ChebyshevBounds = ChebyshevBounds { lower: 0.5, upper: 1.1 };

/// Largest coarse problem factored with dense LU.
pub const COARSE_DOF_LIMIT: usize = 20_000;

#[derive(Clone, Debug)]
pub struct CycleParams {
    /// Inner h-cycles per visit from a p-level.
    pub nv: usize,
    /// Pre- and post-smoothing steps on p-levels.
    pub nu_p: usize,
    /// Pre- and post-smoothing steps on h-levels.
    pub nu_h: usize,
    pub bounds: ChebyshevBounds,
    pub power_iterations: usize,
    pub coarse_limit: usize,
    pub weighting: Weighting,
}

impl Default for CycleParams {
    fn default() -> Self {
        CycleParams {
            nv: 1,
            nu_p: 2,
            nu_h: 2,
            bounds: SMOOTHER_BOUNDS,
            power_iterations: POWER_ITERATIONS,
            coarse_limit: COARSE_DOF_LIMIT,
            weighting: Weighting::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelKind {
    P,
    H,
}

/// Discretization of one level.
#[derive(Clone, Debug)]
pub enum LevelSpace {
    Stokes(StokesSpaces),
    /// Velocity block only.
    Velocity(FunctionSpace),
}

impl LevelSpace {
    pub fn mesh(&self) -> &Arc<Mesh> {
        match self {
            LevelSpace::Stokes(s) => s.mesh(),
            LevelSpace::Velocity(v) => v.mesh(),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            LevelSpace::Stokes(s) => s.degree(),
            LevelSpace::Velocity(v) => v.degree(),
        }
    }

    pub fn family(&self) -> Option<Family> {
        match self {
            LevelSpace::Stokes(s) => Some(s.family),
            LevelSpace::Velocity(_) => None,
        }
    }

    pub fn num_dofs(&self) -> usize {
        match self {
            LevelSpace::Stokes(s) => s.num_dofs(),
            LevelSpace::Velocity(v) => v.num_dofs(),
        }
    }

    fn operator(&self, markers: &[i32]) -> Result<(CsrMatrix, Vec<bool>)> {
        match self {
            LevelSpace::Stokes(s) => assemble_level_operator(s, markers),
            LevelSpace::Velocity(v) => {
                let mut a = assemble_vector_laplacian(v)?;
                let mask = velocity_dirichlet_mask(v, markers);
                eliminate_homogeneous(&mut a, &mask);
                Ok((a, mask))
            }
        }
    }

    fn patches(&self, mask: &[bool]) -> PatchSet {
        match self {
            LevelSpace::Stokes(s) => PatchSet::vanka(s, mask),
            LevelSpace::Velocity(v) => PatchSet::star(v, mask),
        }
    }

    /// Prolongation from `coarse` into this level.
    fn prolongation_from(&self, coarse: &LevelSpace) -> Result<CsrMatrix> {
        let same_mesh = self.mesh().same_as(coarse.mesh());
        let scalar = |lo: &FunctionSpace, hi: &FunctionSpace| -> Result<CsrMatrix> {
            if !same_mesh {
                build_h_prolongation(lo, hi)
            } else if lo.degree() == hi.degree() && lo.continuity() == hi.continuity() {
                Ok(CsrMatrix::identity(hi.num_dofs()))
            } else {
                build_p_prolongation(lo, hi)
            }
        };
        match (self, coarse) {
            (LevelSpace::Stokes(f), LevelSpace::Stokes(c)) => {
                let pv = scalar(&c.velocity, &f.velocity)?;
                let pp = scalar(&c.pressure, &f.pressure)?;
                Ok(build_monolithic_transfer(&pv, &pp))
            }
            (LevelSpace::Velocity(f), LevelSpace::Velocity(c)) => scalar(c, f),
            _ => Err(Error::InvalidArgument("mixed Stokes and velocity levels".into())),
        }
    }

    pub fn describe(&self) -> String {
        let m = self.mesh();
        let tag = if m.is_barycentric() { ", barycentric" } else { "" };
        match self {
            LevelSpace::Stokes(s) => {
                let pk = s.degree() - 1;
                let disc = if s.family == Family::ScottVogelius { "disc" } else { "" };
                format!("P{}/P{}{} on {} cells{}", s.degree(), pk, disc, m.num_cells(), tag)
            }
            LevelSpace::Velocity(v) => format!("P{} velocity on {} cells{}", v.degree(), m.num_cells(), tag),
        }
    }
}

pub struct LevelSpec {
    pub space: LevelSpace,
    pub kind: LevelKind,
}

#[derive(Clone, Debug)]
pub struct MGLevel {
    pub space: LevelSpace,
    pub kind: LevelKind,
    pub operator: CsrMatrix,
    pub mask: Vec<bool>,
    /// Absent on the coarsest level.
    pub patches: Option<PatchSet>,
    pub lambda_max: f64,
    pub sweeps: usize,
    /// Maps the next coarser level into this one.
    pub prolongation: Option<CsrMatrix>,
    pub restriction: Option<CsrMatrix>,
}

impl MGLevel {
    pub fn dim(&self) -> usize {
        self.operator.nrows()
    }

    /// `M^{-1}` of this level.
    pub fn apply_relaxation(&self, r: &[f64], z: &mut [f64]) {
        self.patches.as_ref().expect("coarsest level has no relaxation").apply(r, z);
    }
}

/// Dense LU of the coarsest operator. An enclosed-flow Stokes operator
/// gets one pressure DoF pinned to zero.
#[derive(Clone, Debug)]
pub struct CoarseSolver {
    lu: DenseLu,
    pinned: Option<usize>,
}

impl CoarseSolver {
    pub fn new(k: &CsrMatrix, pinned: Option<usize>, limit: usize) -> Result<Self> {
        let n = k.nrows();
        if n > limit {
            return Err(Error::CoarseTooLarge { dofs: n, limit });
        }
        let mut d = k.to_dense();
        if let Some(p) = pinned {
            for j in 0..n {
                d[(p, j)] = 0.0;
                d[(j, p)] = 0.0;
            }
            d[(p, p)] = 1.0;
        }
        Ok(CoarseSolver { lu: DenseLu::factor_owned(d)?, pinned })
    }

    pub fn pinned(&self) -> Option<usize> {
        self.pinned
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        match self.pinned {
            Some(p) => {
                let mut bb = b.to_vec();
                bb[p] = 0.0;
                self.lu.solve_into(&bb, x);
            }
            None => self.lu.solve_into(b, x),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MGHierarchy {
    levels: Vec<MGLevel>,
    coarse: CoarseSolver,
    params: CycleParams,
    h_start: usize,
}

impl MGHierarchy {
    /// Builds operators, transfers, patches, eigenvalue estimates and the
    /// coarse factorization for `specs` (fine to coarse). `top` replaces
    /// the rediscretized finest operator when given; `pin_pressure` pins a
    /// pressure DoF in the coarse solve.
    pub fn build(
        specs: Vec<LevelSpec>,
        top: Option<(CsrMatrix, Vec<bool>)>,
        markers: &[i32],
        pin_pressure: bool,
        params: CycleParams,
        prof: &Profiler,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidArgument("empty hierarchy".into()));
        }
        let h_start = specs.iter().position(|s| s.kind == LevelKind::H).unwrap_or(specs.len() - 1);
        if specs[h_start..].iter().any(|s| s.kind == LevelKind::P) {
            return Err(Error::InvalidArgument("p-levels must precede h-levels".into()));
        }
        let nlev = specs.len();
        let mut top = top;
        let mut levels: Vec<MGLevel> = Vec::with_capacity(nlev);
        for (l, spec) in specs.into_iter().enumerate() {
            let (operator, mask) = match top.take() {
                Some(t) if l == 0 => t,
                _ => prof.time(kernel::ASSEMBLY, Some(l), || spec.space.operator(markers))?,
            };
            if operator.nrows() != spec.space.num_dofs() {
                return Err(Error::DimensionMismatch(format!(
                    "level {l} operator has {} rows for {} DoFs",
                    operator.nrows(),
                    spec.space.num_dofs()
                )));
            }
            if let Some(prev) = levels.last_mut() {
                let p = prof.time(kernel::TRANSFER_SETUP, Some(l - 1), || -> Result<CsrMatrix> {
                    let raw = prev.space.prolongation_from(&spec.space)?;
                    constrain(&raw, &prev.mask, &mask)
                })?;
                prev.restriction = Some(p.transpose());
                prev.prolongation = Some(p);
            }
            let sweeps = if spec.kind == LevelKind::P { params.nu_p } else { params.nu_h };
            levels.push(MGLevel {
                space: spec.space,
                kind: spec.kind,
                operator,
                mask,
                patches: None,
                lambda_max: 0.0,
                sweeps,
                prolongation: None,
                restriction: None,
            });
        }

        for (l, level) in levels.iter_mut().enumerate().take(nlev - 1) {
            let patches = prof.time(kernel::PATCH_SETUP, Some(l), || -> Result<PatchSet> {
                let mut ps = level.space.patches(&level.mask).with_weighting(params.weighting);
                ps.factor(&level.operator)?;
                Ok(ps)
            })?;
            let lambda = prof.time(kernel::EIGEN_ESTIMATE, Some(l), || {
                let mut tmp = vec![0.0; level.dim()];
                estimate_lambda_max(
                    |x, y| {
                        level.operator.spmv(x, &mut tmp);
                        patches.apply(&tmp, y);
                    },
                    level.dim(),
                    params.power_iterations,
                )
            });
            level.lambda_max = lambda.value;
            level.patches = Some(patches);
        }

        let last = levels.last().unwrap();
        let pinned = match (&last.space, pin_pressure) {
            (LevelSpace::Stokes(s), true) => Some(s.num_dofs() - 1),
            _ => None,
        };
        let coarse =
            prof.time(kernel::COARSE_FACTOR, Some(nlev - 1), || CoarseSolver::new(&last.operator, pinned, params.coarse_limit))?;
        Ok(MGHierarchy { levels, coarse, params, h_start })
    }

    pub fn levels(&self) -> &[MGLevel] {
        &self.levels
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn h_start(&self) -> usize {
        self.h_start
    }

    pub fn params(&self) -> &CycleParams {
        &self.params
    }

    pub fn coarse(&self) -> &CoarseSolver {
        &self.coarse
    }

    pub fn dim(&self) -> usize {
        self.levels[0].dim()
    }

    /// One cycle on `K x = b` starting from `x0` (zero when absent).
    pub fn vcycle(&self, b: &[f64], x0: Option<&[f64]>, prof: &Profiler) -> Vec<f64> {
        assert_eq!(b.len(), self.dim());
        let mut x = x0.map_or_else(|| vec![0.0; b.len()], <[f64]>::to_vec);
        self.cycle(0, b, &mut x, x0.is_none(), prof);
        x
    }

    fn cycle(&self, l: usize, b: &[f64], x: &mut [f64], x_zero: bool, prof: &Profiler) {
        let level = &self.levels[l];
        if l + 1 == self.levels.len() {
            prof.time(kernel::COARSE_SOLVE, Some(l), || {
                if x_zero {
                    self.coarse.solve(b, x);
                } else {
                    // correct the given iterate exactly
                    let mut r = vec![0.0; b.len()];
                    level.operator.residual(b, x, &mut r);
                    let mut e = vec![0.0; b.len()];
                    self.coarse.solve(&r, &mut e);
                    x.iter_mut().zip(&e).for_each(|(xi, ei)| *xi += ei);
                }
            });
            return;
        }
        let op = &level.operator;
        let patches = level.patches.as_ref().expect("relaxation on every non-coarse level");
        let bounds = self.params.bounds;
        prof.time(kernel::RELAXATION, Some(l), || {
            chebyshev(|u, v| op.spmv(u, v), |r, z| patches.apply(r, z), b, x, level.sweeps, level.lambda_max, bounds, x_zero)
        });
        let mut r = vec![0.0; b.len()];
        prof.time(kernel::RESIDUAL, Some(l), || op.residual(b, x, &mut r));
        let rc = prof.time(kernel::TRANSFER, Some(l), || level.restriction.as_ref().unwrap().mul_vec(&r));
        let mut xc = vec![0.0; rc.len()];
        let repeats = if l + 1 == self.h_start { self.params.nv.max(1) } else { 1 };
        for i in 0..repeats {
            self.cycle(l + 1, &rc, &mut xc, i == 0, prof);
        }
        prof.time(kernel::TRANSFER, Some(l), || level.prolongation.as_ref().unwrap().spmv_add(1.0, &xc, x));
        prof.time(kernel::RELAXATION, Some(l), || {
            chebyshev(|u, v| op.spmv(u, v), |r, z| patches.apply(r, z), b, x, level.sweeps, level.lambda_max, bounds, false)
        });
    }
}

impl Preconditioner for MGHierarchy {
    /// One cycle from zero; constrained DoFs pass through unchanged.
    fn apply(&self, r: &[f64], z: &mut [f64], prof: &Profiler) {
        let x = self.vcycle(r, None, prof);
        z.copy_from_slice(&x);
        for (i, &m) in self.levels[0].mask.iter().enumerate() {
            if m {
                z[i] = r[i];
            }
        }
    }

    fn dim(&self) -> usize {
        MGHierarchy::dim(self)
    }
}
