//! Prolongation between nested spaces by nodal evaluation: column `j`
//! holds coarse basis function `j` evaluated at every fine node.
//! Restriction is the transpose.

use crate::error::{Error, Result};
use crate::fem::space::{Continuity, FunctionSpace};
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh;

/// Entries at or below this magnitude are dropped.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Evaluates the `coarse` basis at the nodes of `fine`; `parent(c)` names
/// the coarse cell containing fine cell `c`.
fn nodal_transfer(coarse: &FunctionSpace, fine: &FunctionSpace, parent: impl Fn(usize) -> usize) -> CsrMatrix {
    let nc = fine.components();
    let fine_mesh = fine.mesh();
    let coarse_mesh = coarse.mesh();
    let mut rows: Vec<Option<Vec<(usize, f64)>>> = vec![None; fine.num_nodes()];
    let mut vals = vec![0.0; coarse.nodes_per_cell()];
    for c in 0..fine_mesh.num_cells() {
        let pc = parent(c);
        let cnodes = coarse.cell_nodes(pc);
        for &n in fine.cell_nodes(c) {
            if rows[n].is_some() {
                continue;
            }
            let l = coarse_mesh.barycentric_coords(pc, fine.node_coord(n));
            coarse.element().eval(l, &mut vals);
            let mut row: Vec<(usize, f64)> =
                cnodes.iter().zip(&vals).filter(|(_, v)| v.abs() > DROP_TOLERANCE).map(|(&j, &v)| (j, v)).collect();
            row.sort_unstable_by_key(|e| e.0);
            rows[n] = Some(row);
        }
    }
    let mut triplets = Vec::new();
    for (n, row) in rows.into_iter().enumerate() {
        for (j, v) in row.expect("every fine node lies in a fine cell") {
            for comp in 0..nc {
                triplets.push((nc * n + comp, nc * j + comp, v));
            }
        }
    }
    CsrMatrix::from_triplets(fine.num_dofs(), coarse.num_dofs(), &triplets)
}

fn check_components(a: &FunctionSpace, b: &FunctionSpace) -> Result<()> {
    if a.components() != b.components() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} components",
            a.components(),
            b.components()
        )));
    }
    Ok(())
}

/// Prolongation from a space on a mesh to the same kind of space on its
/// refinement.
pub fn build_h_prolongation(coarse: &FunctionSpace, fine: &FunctionSpace) -> Result<CsrMatrix> {
    check_components(coarse, fine)?;
    if coarse.degree() != fine.degree() || coarse.continuity() != fine.continuity() {
        return Err(Error::InvalidArgument("h-prolongation needs matching degree and continuity".into()));
    }
    let link = fine
        .mesh()
        .parent()
        .filter(|l| l.mesh.same_as(coarse.mesh()))
        .ok_or_else(|| Error::NotNested("fine mesh is not a refinement of the coarse mesh".into()))?;
    Ok(nodal_transfer(coarse, fine, |c| link.cell_map[c]))
}

/// Prolongation from a lower-degree space to a higher-degree space on the
/// same mesh. Continuous spaces may be embedded into discontinuous ones
/// (degrees may then coincide); the reverse is rejected.
pub fn build_p_prolongation(low: &FunctionSpace, high: &FunctionSpace) -> Result<CsrMatrix> {
    check_components(low, high)?;
    if !low.mesh().same_as(high.mesh()) {
        return Err(Error::InvalidArgument("p-prolongation needs a shared mesh".into()));
    }
    let embeds = low.continuity() == Continuity::Continuous && high.continuity() == Continuity::Discontinuous;
    if low.continuity() == Continuity::Discontinuous && high.continuity() == Continuity::Continuous {
        return Err(Error::InvalidArgument("cannot prolongate a discontinuous space into a continuous one".into()));
    }
    let ordered = if embeds { low.degree() <= high.degree() } else { low.degree() < high.degree() };
    if !ordered {
        return Err(Error::InvalidArgument(format!(
            "p-prolongation from degree {} to degree {}",
            low.degree(),
            high.degree()
        )));
    }
    Ok(nodal_transfer(low, high, |c| c))
}

/// Velocity-pressure block-diagonal transfer in monolithic ordering.
pub fn build_monolithic_transfer(velocity: &CsrMatrix, pressure: &CsrMatrix) -> CsrMatrix {
    CsrMatrix::block_diag(velocity, pressure)
}

/// Zeroes rows of constrained fine DoFs and columns of constrained coarse
/// DoFs, then drops the zeros.
pub fn constrain(p: &CsrMatrix, fine_mask: &[bool], coarse_mask: &[bool]) -> Result<CsrMatrix> {
    if fine_mask.len() != p.nrows() || coarse_mask.len() != p.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "masks of length {}/{} for a {}x{} transfer",
            fine_mask.len(),
            coarse_mask.len(),
            p.nrows(),
            p.ncols()
        )));
    }
    let mut q = p.clone();
    q.zero_rows_and_cols(fine_mask, coarse_mask);
    Ok(q.prune(0.0))
}

/// Whether `fine` is obtained from `coarse` by one refinement.
pub fn is_refinement_of(fine: &Mesh, coarse: &Mesh) -> bool {
    fine.parent().is_some_and(|l| l.mesh.same_as(coarse))
}
