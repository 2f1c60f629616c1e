use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stokes_bench::{parse_solver, run, sweep, ComparisonTable, FamilyArg, Format, ProblemKind, RunConfig, RunReport, SweepConfig};
use stokes_mg::solvers::SolverKind;

/// Benchmarks monolithic multigrid and block preconditioners for Stokes.
#[derive(Parser)]
#[command(name = "bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single configuration.
    Run(RunArgs),
    /// Run a grid of configurations from a TOML file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    problem: ProblemKind,
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    refinements: usize,
    #[arg(long, value_parser = parse_solver)]
    solver: SolverKind,
    #[arg(long)]
    nv: Option<usize>,
    #[arg(long)]
    nup: Option<usize>,
    #[arg(long)]
    nuh: Option<usize>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    restart: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    format: Format,
    #[arg(long)]
    mesh_dir: Option<PathBuf>,
}

fn progress(r: &RunReport) {
    let c = &r.config;
    eprintln!(
        "{} {} k={} r={} {}: {} DoFs, {} iterations{}, setup {:.3} s, solve {:.3} s",
        c.problem.name(),
        stokes_mg::fem::Family::from(c.family),
        c.k,
        c.refinements,
        c.solver,
        r.dofs,
        r.iterations,
        if r.converged { "" } else { " (not converged)" },
        r.t_setup,
        r.t_solve
    );
}

fn output(table: &ComparisonTable, out: Option<&PathBuf>, format: Format) -> stokes_bench::Result<()> {
    match out {
        Some(p) => table.emit(p, format),
        None => {
            print!("{}", table.render(format)?);
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> stokes_bench::Result<bool> {
    match cli.command {
        Command::Run(a) => {
            let mut c = RunConfig::new(a.problem, a.family, a.k, a.refinements, a.solver);
            c.nv = a.nv.unwrap_or(c.nv);
            c.nu_p = a.nup.unwrap_or(c.nu_p);
            c.nu_h = a.nuh.unwrap_or(c.nu_h);
            c.rtol = a.rtol.unwrap_or(c.rtol);
            c.restart = a.restart.unwrap_or(c.restart);
            c.mesh_dir = a.mesh_dir;
            let r = run(&c)?;
            progress(&r);
            let table = ComparisonTable::build(vec![r], c.solver)?;
            output(&table, a.out.as_ref(), a.format)?;
            Ok(table.all_converged())
        }
        Command::Sweep { config } => {
            let cfg = SweepConfig::load(&config)?;
            let table = sweep(&cfg, progress)?;
            output(&table, cfg.out.as_ref(), cfg.format.unwrap_or_default())?;
            Ok(table.all_converged())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
