//! Benchmark harness: runs one solver configuration end to end, records
//! iteration counts and a phase/kernel timing breakdown, and compares
//! solvers against a reference in CSV or markdown tables.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use stokes_mg::fem::{assemble_stokes, Family, ProblemInstance};
use stokes_mg::problems::{backward_facing_step, backward_facing_step_from_dir, lid_driven_cavity, manufactured};
use stokes_mg::profile::{kernel, Phase, Profiler};
use stokes_mg::solvers::{build_preconditioner, solve, CycleParams, SolveOptions, SolverKind};

pub mod table;

pub use table::{relative_metrics, sweep, ComparisonTable, Format, Relative, Row, SweepConfig, Times};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Solver(#[from] stokes_mg::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no {reference} run for {group}")]
    MissingReference { reference: String, group: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    #[value(name = "ldc2d")]
    Ldc2d,
    #[value(name = "bfs2d")]
    Bfs2d,
    Manufactured,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Ldc2d => "ldc2d",
            ProblemKind::Bfs2d => "bfs2d",
            ProblemKind::Manufactured => "manufactured",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Th,
    Sv,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Th => Family::TaylorHood,
            FamilyArg::Sv => Family::ScottVogelius,
        }
    }
}

pub fn parse_solver(s: &str) -> std::result::Result<SolverKind, String> {
    s.parse().map_err(|e: stokes_mg::Error| e.to_string())
}

pub(crate) fn ser_solver<S: Serializer>(k: &SolverKind, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(k.name())
}

pub(crate) fn de_solver<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<SolverKind, D::Error> {
    let s = String::deserialize(d)?;
    parse_solver(&s).map_err(serde::de::Error::custom)
}

/// One benchmark configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub family: FamilyArg,
    pub k: usize,
    pub refinements: usize,
    #[serde(serialize_with = "ser_solver", deserialize_with = "de_solver")]
    pub solver: SolverKind,
    pub nv: usize,
    pub nu_p: usize,
    pub nu_h: usize,
    pub rtol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Directory holding `bfs2d.mesh`; the bundled mesh is used if unset.
    pub mesh_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(problem: ProblemKind, family: FamilyArg, k: usize, refinements: usize, solver: SolverKind) -> Self {
        let c = CycleParams::default();
        let s = SolveOptions::default();
        RunConfig {
            problem,
            family,
            k,
            refinements,
            solver,
            nv: c.nv,
            nu_p: c.nu_p,
            nu_h: c.nu_h,
            rtol: s.rtol,
            restart: s.restart,
            max_iter: s.max_iter,
            mesh_dir: None,
        }
    }

    pub fn problem_instance(&self) -> Result<ProblemInstance> {
        let (r, k, fam) = (self.refinements, self.k, self.family.into());
        Ok(match self.problem {
            ProblemKind::Ldc2d => lid_driven_cavity(r, k, fam)?,
            ProblemKind::Bfs2d => match &self.mesh_dir {
                Some(dir) => backward_facing_step_from_dir(dir, r, k, fam)?,
                None => backward_facing_step(r, k, fam)?,
            },
            ProblemKind::Manufactured => manufactured(r, k, fam)?,
        })
    }

    pub fn cycle_params(&self) -> CycleParams {
        CycleParams { nv: self.nv, nu_p: self.nu_p, nu_h: self.nu_h, ..CycleParams::default() }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions { rtol: self.rtol, restart: self.restart, max_iter: self.max_iter }
    }

    fn validate(&self) -> Result<()> {
        if self.nv == 0 || self.restart == 0 || !(self.rtol > 0.0) {
            return Err(BenchError::Config("nv, restart and rtol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub config: RunConfig,
    pub dofs: usize,
    pub nnz_per_dof: f64,
    pub iterations: usize,
    pub converged: bool,
    pub relative_residual: f64,
    pub residual_history: Vec<f64>,
    pub t_setup: f64,
    pub t_solve: f64,
    pub t_total: f64,
    /// Seconds per `kernel` or `kernel_l<level>` label.
    pub setup_kernels: Vec<(String, f64)>,
    pub solve_kernels: Vec<(String, f64)>,
}

impl RunReport {
    pub fn times(&self) -> Times {
        Times { setup: self.t_setup, solve: self.t_solve, total: self.t_total }
    }

    pub fn setup_frac(&self) -> f64 {
        self.t_setup / self.t_total
    }

    pub fn solve_kernel_sum(&self) -> f64 {
        self.solve_kernels.iter().map(|(_, t)| t).sum()
    }

    /// Fraction of the solve time attributed to named kernels.
    pub fn kernel_coverage(&self) -> f64 {
        if self.t_solve == 0.0 {
            return 1.0;
        }
        self.solve_kernel_sum() / self.t_solve
    }

    /// Unattributed solve time.
    pub fn other(&self) -> f64 {
        (self.t_solve - self.solve_kernel_sum()).max(0.0)
    }

    pub fn solve_kernel(&self, label: &str) -> f64 {
        self.solve_kernels.iter().find(|(l, _)| l == label).map_or(0.0, |(_, t)| *t)
    }

    /// Checks `T(total) = T(setup) + T(solve)` to 1% and kernel coverage of
    /// at least 95% of `T(solve)` without exceeding it.
    pub fn check_integrity(&self) -> std::result::Result<(), String> {
        let sum = self.t_setup + self.t_solve;
        if (self.t_total - sum).abs() > 0.01 * self.t_total {
            return Err(format!("total {:.6} s vs setup + solve {:.6} s", self.t_total, sum));
        }
        let kernels = self.solve_kernel_sum();
        if kernels > self.t_solve * (1.0 + 1e-9) {
            return Err(format!("kernels {:.6} s exceed solve {:.6} s", kernels, self.t_solve));
        }
        let cov = self.kernel_coverage();
        if cov < 0.95 {
            return Err(format!("kernel coverage {:.1}% of solve time", 100.0 * cov));
        }
        Ok(())
    }
}

/// Builds the problem and preconditioner (setup, including assembly and
/// rediscretization on coarse levels), then runs FGMRES (solve).
/// Non-convergence is reported, not raised.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let prof = Profiler::new();
    let start = Instant::now();
    let (problem, system) = prof.time(kernel::ASSEMBLY, None, || -> Result<_> {
        let p = cfg.problem_instance()?;
        let spaces = p.spaces()?;
        let s = assemble_stokes(&p, &spaces)?;
        Ok((p, s))
    })?;
    let pc = build_preconditioner(cfg.solver, &problem, &system, &cfg.cycle_params(), &prof)?;
    let t_setup = start.elapsed().as_secs_f64();

    prof.set_phase(Phase::Solve);
    let t0 = Instant::now();
    let (_, rep) = solve(&system, pc.as_ref(), &cfg.solve_options(), &prof)?;
    let t_solve = t0.elapsed().as_secs_f64();
    let t_total = start.elapsed().as_secs_f64();

    Ok(RunReport {
        config: cfg.clone(),
        dofs: system.num_dofs(),
        nnz_per_dof: system.nnz_per_dof(),
        iterations: rep.iterations,
        converged: rep.converged,
        relative_residual: rep.relative_residual(),
        residual_history: rep.residual_history.clone(),
        t_setup,
        t_solve,
        t_total,
        setup_kernels: prof.phase_entries(Phase::Setup),
        solve_kernels: prof.phase_entries(Phase::Solve),
    })
}
