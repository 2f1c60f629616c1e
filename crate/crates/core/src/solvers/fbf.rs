//! Full block factorization preconditioner
//!
//! ```text
//! P^{-1} = [I  -A~^{-1} B^T] [A~^{-1}    0    ] [    I        0]
//!          [0        I     ] [   0    S~^{-1} ] [-B A~^{-1}   I]
//! ```
//!
//! with `S~ = -M_p` standing in for the Schur complement `-B A^{-1} B^T`.

use crate::error::{Error, Result};
use crate::fem::{assemble_mass, Continuity, FunctionSpace, SaddleSystem};
use crate::linalg::{dot, CsrMatrix, DenseLu};
use crate::profile::{kernel, Profiler};
use crate::solvers::Preconditioner;

/// Relative residual of the conjugate gradient mass solve.
const MASS_CG_RTOL: f64 = 1e-14;

/// Exact inverse of the pressure mass matrix.
#[derive(Clone, Debug)]
pub enum SchurSolver {
    /// One dense LU per cell.
    Blocks { cells: Vec<(Vec<usize>, DenseLu)>, dim: usize },
    /// Jacobi-preconditioned conjugate gradients to round-off.
    Cg { mass: CsrMatrix, inv_diag: Vec<f64> },
}

impl SchurSolver {
    pub fn new(pressure: &FunctionSpace) -> Result<Self> {
        let m = assemble_mass(pressure)?;
        Ok(match pressure.continuity() {
            Continuity::Discontinuous => {
                let cells = (0..pressure.mesh().num_cells())
                    .map(|c| {
                        let nodes = pressure.cell_nodes(c).to_vec();
                        let lu = DenseLu::factor_owned(m.gather_dense(&nodes))?;
                        Ok((nodes, lu))
                    })
                    .collect::<Result<Vec<_>>>()?;
                SchurSolver::Blocks { cells, dim: m.nrows() }
            }
            Continuity::Continuous => {
                let inv_diag = m.diagonal().iter().map(|d| 1.0 / d).collect();
                SchurSolver::Cg { mass: m, inv_diag }
            }
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            SchurSolver::Blocks { dim, .. } => *dim,
            SchurSolver::Cg { mass, .. } => mass.nrows(),
        }
    }

    /// `x = M_p^{-1} b`
    pub fn solve_mass(&self, b: &[f64], x: &mut [f64]) {
        match self {
            SchurSolver::Blocks { cells, .. } => {
                for (nodes, lu) in cells {
                    let bl: Vec<f64> = nodes.iter().map(|&i| b[i]).collect();
                    for (&i, v) in nodes.iter().zip(lu.solve(&bl)) {
                        x[i] = v;
                    }
                }
            }
            SchurSolver::Cg { mass, inv_diag } => pcg(mass, inv_diag, b, x),
        }
    }
}

fn pcg(a: &CsrMatrix, inv_diag: &[f64], b: &[f64], x: &mut [f64]) {
    let n = b.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return;
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for _ in 0..10 * n.max(10) {
        a.spmv(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= MASS_CG_RTOL * bnorm {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
}

pub struct FbfPreconditioner {
    inner: Box<dyn Preconditioner>,
    schur: SchurSolver,
    b: CsrMatrix,
    bt: CsrMatrix,
    nu: usize,
}

impl FbfPreconditioner {
    /// `inner` approximates `A^{-1}` on the velocity block of `system`.
    pub fn new(system: &SaddleSystem, inner: Box<dyn Preconditioner>, prof: &Profiler) -> Result<Self> {
        let nu = system.num_velocity_dofs();
        if inner.dim() != nu {
            return Err(Error::DimensionMismatch(format!("velocity solver of size {} for {} DoFs", inner.dim(), nu)));
        }
        let schur = prof.time(kernel::SCHUR_FACTOR, None, || SchurSolver::new(&system.spaces.pressure))?;
        Ok(FbfPreconditioner { inner, schur, b: system.b(), bt: system.bt(), nu })
    }

    pub fn schur(&self) -> &SchurSolver {
        &self.schur
    }

    pub fn inner(&self) -> &dyn Preconditioner {
        self.inner.as_ref()
    }
}

impl Preconditioner for FbfPreconditioner {
    /// Right to left: `w = A~^{-1} r_u`, `z_p = S~^{-1} (r_p - B w)`,
    /// `z_u = A~^{-1} (r_u - B^T z_p)`.
    fn apply(&self, r: &[f64], z: &mut [f64], prof: &Profiler) {
        let nu = self.nu;
        let (ru, rp) = r.split_at(nu);
        let (zu, zp) = z.split_at_mut(nu);
        let mut w = vec![0.0; nu];
        self.inner.apply(ru, &mut w, prof);
        let mut y = rp.to_vec();
        prof.time(kernel::BLOCK_PRODUCTS, None, || self.b.spmv_add(-1.0, &w, &mut y));
        prof.time(kernel::SCHUR_SOLVE, None, || {
            self.schur.solve_mass(&y, zp);
            zp.iter_mut().for_each(|v| *v = -*v);
        });
        let mut t = ru.to_vec();
        prof.time(kernel::BLOCK_PRODUCTS, None, || self.bt.spmv_add(-1.0, zp, &mut t));
        self.inner.apply(&t, zu, prof);
    }

    fn dim(&self) -> usize {
        self.nu + self.schur.dim()
    }
}
