use std::process::Command;

use stokes_bench::{
    relative_metrics, run, ComparisonTable, FamilyArg, Format, ProblemKind, RunConfig, RunReport, SweepConfig, Times,
};
use stokes_mg::solvers::SolverKind;

fn cfg(k: usize, r: usize, solver: SolverKind) -> RunConfig {
    RunConfig::new(ProblemKind::Ldc2d, FamilyArg::Th, k, r, solver)
}

fn synthetic(k: usize, solver: SolverKind, setup: f64, solve: f64) -> RunReport {
    RunReport {
        config: cfg(k, 1, solver),
        dofs: 100,
        nnz_per_dof: 20.5,
        iterations: 7,
        converged: true,
        relative_residual: 1e-11,
        residual_history: vec![1.0, 1e-11],
        t_setup: setup,
        t_solve: solve,
        t_total: setup + solve,
        setup_kernels: vec![("assembly".into(), setup)],
        solve_kernels: vec![("relaxation_l0".into(), 0.6 * solve), ("relaxation_l10".into(), 0.1 * solve), ("transfer_l2".into(), 0.25 * solve)],
    }
}

#[test]
fn hmg_cavity_converges_and_is_consistent() {
    let r = run(&cfg(2, 2, SolverKind::Hmg)).unwrap();
    assert!(r.converged);
    assert!(r.iterations <= 60, "{}", r.iterations);
    assert!(r.relative_residual <= 1e-10);
    assert!((r.nnz_per_dof - 26.5).abs() < 0.1);
    r.check_integrity().unwrap();
    assert!(r.setup_kernels.iter().any(|(l, _)| l == "assembly"));
}

#[test]
fn runs_are_reproducible() {
    let a = run(&cfg(3, 1, SolverKind::PhmgDirect)).unwrap();
    let b = run(&cfg(3, 1, SolverKind::PhmgDirect)).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.residual_history, b.residual_history);
}

#[test]
fn reference_compared_to_itself_is_one() {
    let r = run(&cfg(2, 1, SolverKind::Hmg)).unwrap();
    let t = ComparisonTable::build(vec![r], SolverKind::Hmg).unwrap();
    let rel = t.rows[0].relative.unwrap();
    assert_eq!((rel.r_total, rel.r_setup, rel.r_solve), (1.0, 1.0, 1.0));
}

#[test]
fn relative_metrics_divide_reference_by_candidate() {
    let rel = relative_metrics(
        Times { setup: 2.0, solve: 6.0, total: 8.0 },
        Times { setup: 1.0, solve: 3.0, total: 4.0 },
    );
    assert_eq!((rel.r_total, rel.r_setup, rel.r_solve), (2.0, 2.0, 2.0));
    let t = ComparisonTable::build(
        vec![synthetic(2, SolverKind::Hmg, 1.0, 3.0), synthetic(2, SolverKind::PhmgDirect, 0.5, 1.5)],
        SolverKind::Hmg,
    )
    .unwrap();
    let rel = t.rows[1].relative.unwrap();
    assert_eq!(rel.r_total, 4.0 / 2.0);
    assert_eq!(rel.r_setup, 1.0 / 0.5);
    assert_eq!(rel.r_solve, 3.0 / 1.5);
}

#[test]
fn missing_reference_is_an_error() {
    let e = ComparisonTable::build(vec![synthetic(2, SolverKind::PhmgDirect, 1.0, 1.0)], SolverKind::Hmg);
    assert!(e.is_err());
}

#[test]
fn non_converged_rows_have_blank_relatives() {
    let mut bad = synthetic(2, SolverKind::PhmgDirect, 1.0, 1.0);
    bad.converged = false;
    let t = ComparisonTable::build(vec![synthetic(2, SolverKind::Hmg, 1.0, 1.0), bad], SolverKind::Hmg).unwrap();
    assert!(t.rows[1].relative.is_none());
    assert!(!t.all_converged());
    let csv = t.to_csv().unwrap();
    let mut rd = csv::Reader::from_reader(csv.as_bytes());
    let rec = rd.records().nth(1).unwrap().unwrap();
    assert_eq!(&rec[13], "");
    assert!(t.to_markdown().contains("(n/c)"));
}

#[test]
fn empty_table_is_header_only() {
    let t = ComparisonTable::build(vec![], SolverKind::Hmg).unwrap();
    let csv = t.to_csv().unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("problem,family,k,refinements,solver,dofs,nnz_per_dof,iterations,converged,t_setup_s,t_solve_s,t_total_s,setup_frac,r_total,r_setup,r_solve"));
}

#[test]
fn csv_round_trips_numbers() {
    let reports = vec![
        synthetic(2, SolverKind::Hmg, 0.123456789012345, 3.0e-3),
        synthetic(2, SolverKind::PhmgGradual, 1.0 / 3.0, 2.0 / 7.0),
        synthetic(3, SolverKind::Hmg, 0.1, 0.2),
        synthetic(3, SolverKind::PhmgGradual, 0.3, 0.4),
    ];
    let t = ComparisonTable::build(reports, SolverKind::Hmg).unwrap();
    let text = t.to_csv().unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().unwrap().clone();
    let kernels: Vec<String> = header.iter().skip(16).map(String::from).collect();
    assert_eq!(kernels, ["relaxation_l0", "relaxation_l10", "transfer_l2", "other"]);
    for (rec, row) in rd.records().zip(&t.rows) {
        let rec = rec.unwrap();
        let f = |i: usize| rec[i].parse::<f64>().unwrap();
        let r = &row.report;
        assert_eq!(rec[5].parse::<usize>().unwrap(), r.dofs);
        assert_eq!(f(6), r.nnz_per_dof);
        assert_eq!(rec[7].parse::<usize>().unwrap(), r.iterations);
        assert_eq!(f(9), r.t_setup);
        assert_eq!(f(10), r.t_solve);
        assert_eq!(f(11), r.t_total);
        assert!((f(12) - f(9) / f(11)).abs() <= 1e-9);
        let rel = row.relative.unwrap();
        assert_eq!((f(13), f(14), f(15)), (rel.r_total, rel.r_setup, rel.r_solve));
        assert_eq!(f(16), r.solve_kernel("relaxation_l0"));
        assert_eq!(f(19), r.other());
    }
}

#[test]
fn sweep_config_rules() {
    let ok = r#"
        reference = "hmg"
        solvers = ["hmg", "phmg-direct"]
        problems = ["ldc2d"]
        families = ["th"]
        k = [2, 3, 4]
        refinements = [1]
        nv = 2
    "#;
    let c = SweepConfig::parse(ok).unwrap();
    let cs = c.configs();
    assert_eq!(cs.len(), 3 * 2);
    assert!(cs.iter().all(|c| c.nv == 2));
    assert!(SweepConfig::parse(&ok.replace("reference = \"hmg\"", "reference = \"fbf-hmg\"")).is_err());
    assert!(SweepConfig::parse(&ok.replace("[\"hmg\", \"phmg-direct\"]", "[]")).is_err());
    assert!(SweepConfig::parse(&ok.replace("phmg-direct", "amg")).is_err());
}

#[test]
fn sweep_rows_cover_grid() {
    let c = SweepConfig::parse(
        r#"
        reference = "phmg-direct"
        solvers = ["phmg-direct", "fbf-phmg"]
        problems = ["ldc2d"]
        families = ["sv"]
        k = [2, 3]
        refinements = [0]
    "#,
    )
    .unwrap();
    let t = stokes_bench::sweep(&c, |_| {}).unwrap();
    assert_eq!(t.rows.len(), 2 * 2);
    assert!(t.all_converged());
    for row in &t.rows {
        row.report.check_integrity().unwrap();
    }
    let md = t.to_markdown();
    assert_eq!(md.lines().filter(|l| l.starts_with("| ")).count(), 1 + 4);
}

#[test]
fn emit_reports_unwritable_path() {
    let dir = tempfile::tempdir().unwrap();
    let t = ComparisonTable::build(vec![], SolverKind::Hmg).unwrap();
    assert!(t.emit(&dir.path().join("missing/out.csv"), Format::Csv).is_err());
    let p = dir.path().join("out.md");
    t.emit(&p, Format::Markdown).unwrap();
    assert!(p.exists());
}

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bench"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let base = ["run", "--problem", "ldc2d", "--family", "th", "--k", "2", "--refinements", "0", "--solver", "hmg"];
    let s = bench().args(base).args(["--format", "csv", "--out"]).arg(&out).status().unwrap();
    assert_eq!(s.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);

    let s = bench().args(base).args(["--rtol", "1e-40", "--restart", "5"]).output().unwrap();
    assert_eq!(s.status.code(), Some(2));

    let s = bench()
        .args(["run", "--problem", "bfs2d", "--family", "th", "--k", "2", "--refinements", "0", "--solver", "hmg", "--mesh-dir"])
        .arg(dir.path().join("nowhere"))
        .output()
        .unwrap();
    assert_eq!(s.status.code(), Some(1));

    let s = bench().args(["run", "--problem", "ldc2d", "--family", "sv", "--k", "2", "--refinements", "0", "--solver", "hmg"]).output().unwrap();
    assert_eq!(s.status.code(), Some(1));
}
