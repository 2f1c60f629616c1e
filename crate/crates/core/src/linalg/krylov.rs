//! Restarted flexible GMRES with right preconditioning.

use std::time::Instant;

use crate::linalg::{axpy, dot, norm2};

#[derive(Clone, Debug)]
pub struct FgmresOptions {
    /// Converged once `||b - K x|| <= rtol * ||b||`.
    pub rtol: f64,
    /// Maximum Krylov subspace size before a restart.
    pub restart: usize,
    pub max_iter: usize,
    /// Unit vector spanning the operator's null space. Residuals and
    /// preconditioned directions are kept orthogonal to it.
    pub nullspace: Option<Vec<f64>>,
}

impl Default for FgmresOptions {
    fn default() -> Self {
        FgmresOptions { rtol: 1e-10, restart: 30, max_iter: 1000, nullspace: None }
    }
}

/// Wall time spent inside the Krylov loop, in seconds.
#[derive(Clone, Debug, Default)]
pub struct KrylovTimings {
    /// One entry per iteration: time spent in the preconditioner.
    pub preconditioner: Vec<f64>,
    /// Operator applications, including true-residual recomputation.
    pub operator: f64,
    /// Arnoldi orthogonalization, Givens updates and solution updates.
    pub orthogonalization: f64,
}

#[derive(Clone, Debug, Default)]
pub struct KrylovReport {
    pub iterations: usize,
    /// Starts with the initial residual norm; then one (Arnoldi) residual
    /// estimate per iteration.
    pub residual_history: Vec<f64>,
    /// True residual norm of the returned iterate.
    pub final_residual: f64,
    pub converged: bool,
    pub timings: KrylovTimings,
}

impl KrylovReport {
    pub fn initial_residual(&self) -> f64 {
        self.residual_history.first().copied().unwrap_or(0.0)
    }

    pub fn relative_residual(&self) -> f64 {
        let r0 = self.initial_residual();
        if r0 == 0.0 {
            0.0
        } else {
            self.final_residual / r0
        }
    }
}

fn project_out(n: Option<&[f64]>, v: &mut [f64]) {
    if let Some(n) = n {
        let c = dot(n, v);
        axpy(-c, n, v);
    }
}

fn residual(
    apply_k: &mut impl FnMut(&[f64], &mut [f64]),
    rhs: &[f64],
    x: &[f64],
    r: &mut [f64],
    ns: Option<&[f64]>,
    timings: &mut KrylovTimings,
) -> f64 {
    let t = Instant::now();
    apply_k(x, r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    project_out(ns, r);
    timings.operator += t.elapsed().as_secs_f64();
    norm2(r)
}

/// Solves `K x = b` with FGMRES(`restart`), calling `apply_p` once per
/// iteration. The preconditioner may change from call to call.
pub fn fgmres(
    mut apply_k: impl FnMut(&[f64], &mut [f64]),
    mut apply_p: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &FgmresOptions,
) -> (Vec<f64>, KrylovReport) {
    let n = b.len();
    let m = opts.restart.max(1);
    let ns = opts.nullspace.as_deref();
    let mut report = KrylovReport::default();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);

    let mut rhs = b.to_vec();
    project_out(ns, &mut rhs);
    let bnorm = norm2(&rhs);
    let tol = opts.rtol * bnorm;

    let mut r = vec![0.0; n];
    let mut beta = residual(&mut apply_k, &rhs, &x, &mut r, ns, &mut report.timings);
    report.residual_history.push(beta);
    report.final_residual = beta;
    if beta <= tol || bnorm == 0.0 {
        report.converged = true;
        return (x, report);
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut zs: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut w = vec![0.0; n];

    loop {
        let t = Instant::now();
        basis.clear();
        zs.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;
        report.timings.orthogonalization += t.elapsed().as_secs_f64();

        let mut steps = 0;
        for j in 0..m {
            let t = Instant::now();
            let mut z = vec![0.0; n];
            apply_p(&basis[j], &mut z);
            project_out(ns, &mut z);
            report.timings.preconditioner.push(t.elapsed().as_secs_f64());

            let t = Instant::now();
            apply_k(&z, &mut w);
            report.timings.operator += t.elapsed().as_secs_f64();

            let t = Instant::now();
            for i in 0..=j {
                let hij = dot(&w, &basis[i]);
                h[i][j] = hij;
                axpy(-hij, &basis[i], &mut w);
            }
            let hnext = norm2(&w);
            h[j + 1][j] = hnext;
            for i in 0..j {
                let tmp = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = tmp;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / denom;
                sn[j] = h[j + 1][j] / denom;
            }
            h[j][j] = cs[j] * h[j][j] + sn[j] * h[j + 1][j];
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            zs.push(z);
            steps = j + 1;
            report.iterations += 1;
            let estimate = g[j + 1].abs();
            report.residual_history.push(estimate);
            let breakdown = hnext <= 1e-300;
            if !breakdown {
                basis.push(w.iter().map(|v| v / hnext).collect());
            }
            report.timings.orthogonalization += t.elapsed().as_secs_f64();
            if estimate <= tol || breakdown || report.iterations >= opts.max_iter {
                break;
            }
        }

        let t = Instant::now();
        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let mut s = g[i];
            for k in i + 1..steps {
                s -= h[i][k] * y[k];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (yi, z) in y.iter().zip(&zs) {
            axpy(*yi, z, &mut x);
        }
        report.timings.orthogonalization += t.elapsed().as_secs_f64();

        beta = residual(&mut apply_k, &rhs, &x, &mut r, ns, &mut report.timings);
        report.final_residual = beta;
        if beta <= tol {
            report.converged = true;
            break;
        }
        if report.iterations >= opts.max_iter {
            break;
        }
    }
    (x, report)
}
