//! Solver comparison tables and sweeps.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer};

use stokes_mg::solvers::SolverKind;

use crate::{de_solver, parse_solver, run, BenchError, FamilyArg, ProblemKind, Result, RunConfig, RunReport};

/// Fixed leading CSV columns; kernel columns follow.
pub const CSV_COLUMNS: [&str; 16] = [
    "problem",
    "family",
    "k",
    "refinements",
    "solver",
    "dofs",
    "nnz_per_dof",
    "iterations",
    "converged",
    "t_setup_s",
    "t_solve_s",
    "t_total_s",
    "setup_frac",
    "r_total",
    "r_setup",
    "r_solve",
];

/// Column for solve time not attributed to any kernel.
pub const OTHER_COLUMN: &str = "other";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Times {
    pub setup: f64,
    pub solve: f64,
    pub total: f64,
}

/// Speedups of a solver over the reference; above 1 means faster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Relative {
    pub r_total: f64,
    pub r_setup: f64,
    pub r_solve: f64,
}

/// `R(x) = T_x(reference) / T_x(candidate)`
pub fn relative_metrics(reference: Times, candidate: Times) -> Relative {
    Relative {
        r_total: reference.total / candidate.total,
        r_setup: reference.setup / candidate.setup,
        r_solve: reference.solve / candidate.solve,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Markdown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub report: RunReport,
    /// Missing when either run did not converge.
    pub relative: Option<Relative>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub reference: SolverKind,
    pub rows: Vec<Row>,
}

type GroupKey = (ProblemKind, FamilyArg, usize, usize);

fn group_key(c: &RunConfig) -> GroupKey {
    (c.problem, c.family, c.k, c.refinements)
}

/// Sort key that puts `relaxation_l2` before `relaxation_l10`.
fn kernel_order(label: &str) -> (String, usize) {
    if let Some((base, lvl)) = label.rsplit_once("_l") {
        if let Ok(l) = lvl.parse() {
            return (base.to_string(), l);
        }
    }
    (label.to_string(), 0)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ComparisonTable {
    /// Relates each report to the reference run of the same problem,
    /// family, degree and refinement level.
    pub fn build(reports: Vec<RunReport>, reference: SolverKind) -> Result<Self> {
        let mut rows = Vec::with_capacity(reports.len());
        for rep in &reports {
            let key = group_key(&rep.config);
            let r = reports
                .iter()
                .find(|o| o.config.solver == reference && group_key(&o.config) == key)
                .ok_or_else(|| BenchError::MissingReference {
                    reference: reference.to_string(),
                    group: format!("{} {} k={} r={}", key.0.name(), Into::<stokes_mg::fem::Family>::into(key.1), key.2, key.3),
                })?;
            let relative = (r.converged && rep.converged).then(|| relative_metrics(r.times(), rep.times()));
            rows.push(Row { report: rep.clone(), relative });
        }
        Ok(ComparisonTable { reference, rows })
    }

    /// Solve-phase kernel labels present in any row, followed by `other`.
    pub fn kernel_columns(&self) -> Vec<String> {
        let set: BTreeSet<(String, usize, String)> = self
            .rows
            .iter()
            .flat_map(|r| r.report.solve_kernels.iter())
            .map(|(l, _)| {
                let (b, n) = kernel_order(l);
                (b, n, l.clone())
            })
            .collect();
        let mut cols: Vec<String> = set.into_iter().map(|(_, _, l)| l).collect();
        cols.push(OTHER_COLUMN.to_string());
        cols
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let kernels = self.kernel_columns();
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<&str> = CSV_COLUMNS.iter().copied().chain(kernels.iter().map(String::as_str)).collect();
        w.write_record(&header)?;
        for row in &self.rows {
            let r = &row.report;
            let c = &r.config;
            let rel = row.relative;
            let mut rec = vec![
                c.problem.name().to_string(),
                stokes_mg::fem::Family::from(c.family).to_string(),
                c.k.to_string(),
                c.refinements.to_string(),
                c.solver.to_string(),
                r.dofs.to_string(),
                r.nnz_per_dof.to_string(),
                r.iterations.to_string(),
                r.converged.to_string(),
                r.t_setup.to_string(),
                r.t_solve.to_string(),
                r.t_total.to_string(),
                r.setup_frac().to_string(),
                opt(rel.map(|x| x.r_total)),
                opt(rel.map(|x| x.r_setup)),
                opt(rel.map(|x| x.r_solve)),
            ];
            for k in &kernels {
                let t = if k == OTHER_COLUMN { r.other() } else { r.solve_kernel(k) };
                rec.push(t.to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// One table per problem, family and refinement level, with a row per
    /// degree and solver.
    pub fn to_markdown(&self) -> String {
        let mut groups: Vec<(ProblemKind, FamilyArg, usize)> = Vec::new();
        for r in &self.rows {
            let c = &r.report.config;
            let g = (c.problem, c.family, c.refinements);
            if !groups.contains(&g) {
                groups.push(g);
            }
        }
        let mut s = String::new();
        for (problem, family, refinements) in groups {
            let fam: stokes_mg::fem::Family = family.into();
            let _ = writeln!(
                s,
                "### {} {}, {} refinements (reference: {})\n",
                problem.name(),
                fam,
                refinements,
                self.reference
            );
            s.push_str("| k | solver | DoFs | nnz/DoF | iterations | T(setup)/T(total) | R(total) | R(setup) | R(solve) |\n");
            s.push_str("|---|---|---|---|---|---|---|---|---|\n");
            for row in self.rows.iter().filter(|r| {
                let c = &r.report.config;
                (c.problem, c.family, c.refinements) == (problem, family, refinements)
            }) {
                let r = &row.report;
                let its = if r.converged { r.iterations.to_string() } else { format!("{} (n/c)", r.iterations) };
                let f = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {:.1} | {} | {:.2} | {} | {} | {} |",
                    r.config.k,
                    r.config.solver,
                    r.dofs,
                    r.nnz_per_dof,
                    its,
                    r.setup_frac(),
                    f(row.relative.map(|x| x.r_total)),
                    f(row.relative.map(|x| x.r_setup)),
                    f(row.relative.map(|x| x.r_solve)),
                );
            }
            s.push('\n');
        }
        s
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Markdown => Ok(self.to_markdown()),
        }
    }

    pub fn emit(&self, path: &Path, format: Format) -> Result<()> {
        std::fs::write(path, self.render(format)?)?;
        Ok(())
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.report.converged)
    }
}

fn de_solvers<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<SolverKind>, D::Error> {
    Vec::<String>::deserialize(d)?.iter().map(|s| parse_solver(s).map_err(serde::de::Error::custom)).collect()
}

/// Grid of configurations read from TOML:
///
/// ```toml
/// reference = "hmg"
/// solvers = ["hmg", "phmg-direct"]
/// problems = ["ldc2d"]
/// families = ["th"]
/// k = [2, 3, 4]
/// refinements = [2]
/// ```
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(deserialize_with = "de_solver")]
    pub reference: SolverKind,
    #[serde(deserialize_with = "de_solvers")]
    pub solvers: Vec<SolverKind>,
    pub problems: Vec<ProblemKind>,
    pub families: Vec<FamilyArg>,
    pub k: Vec<usize>,
    pub refinements: Vec<usize>,
    pub nv: Option<usize>,
    pub nu_p: Option<usize>,
    pub nu_h: Option<usize>,
    pub rtol: Option<f64>,
    pub restart: Option<usize>,
    pub max_iter: Option<usize>,
    pub mesh_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: SweepConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a config file. Relative `mesh_dir` and `out` paths are taken
    /// relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let mut c = Self::parse(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut c.mesh_dir, &mut c.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(BenchError::Config("sweep needs at least one solver".into()));
        }
        if !self.solvers.contains(&self.reference) {
            return Err(BenchError::Config(format!("reference {} is not among the solvers", self.reference)));
        }
        Ok(())
    }

    /// Configurations in run order: problem, family, refinements, k, solver.
    pub fn configs(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &problem in &self.problems {
            for &family in &self.families {
                for &r in &self.refinements {
                    for &k in &self.k {
                        for &solver in &self.solvers {
                            let mut c = RunConfig::new(problem, family, k, r, solver);
                            c.nv = self.nv.unwrap_or(c.nv);
                            c.nu_p = self.nu_p.unwrap_or(c.nu_p);
                            c.nu_h = self.nu_h.unwrap_or(c.nu_h);
                            c.rtol = self.rtol.unwrap_or(c.rtol);
                            c.restart = self.restart.unwrap_or(c.restart);
                            c.max_iter = self.max_iter.unwrap_or(c.max_iter);
                            c.mesh_dir = self.mesh_dir.clone();
                            out.push(c);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Runs every configuration sequentially, calling `progress` after each.
pub fn sweep(cfg: &SweepConfig, mut progress: impl FnMut(&RunReport)) -> Result<ComparisonTable> {
    cfg.validate()?;
    let mut reports = Vec::new();
    for c in cfg.configs() {
        let r = run(&c)?;
        progress(&r);
        reports.push(r);
    }
    ComparisonTable::build(reports, cfg.reference)
}
