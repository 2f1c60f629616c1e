//! Vertex-patch additive Schwarz relaxation
//!
//! ```text
//! M^{-1} r = sum_i I_i^T W_i K_i^{-1} I_i r
//! ```
//!
//! where `I_i` gathers the DoFs of patch `i`, `K_i = I_i K I_i^T` and `W_i`
//! is the inverse multiplicity of each patch DoF.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{FunctionSpace, StokesSpaces};
use crate::linalg::{CsrMatrix, DenseLu};
use crate::mesh::{EntitySet, Mesh};

#[derive(Clone, Debug)]
pub struct Patch {
    pub vertex: usize,
    /// Sorted global DoFs.
    pub dofs: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Where the partition-of-unity weights enter a local correction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Weighting {
    /// `I_i^T W_i K_i^{-1} I_i`
    #[default]
    Left,
    /// `I_i^T W_i^{1/2} K_i^{-1} W_i^{1/2} I_i`
    Symmetric,
    /// Unweighted sum of local solves.
    None,
}

#[derive(Clone, Debug)]
pub struct PatchSet {
    dim: usize,
    patches: Vec<Patch>,
    factors: Vec<DenseLu>,
    weighting: Weighting,
}

/// Nodes attached to the entities of `set`.
fn entity_nodes(space: &FunctionSpace, set: &EntitySet) -> Vec<usize> {
    let mut out = Vec::new();
    for &v in &set.vertices {
        out.extend(space.vertex_nodes(v));
    }
    for &e in &set.edges {
        out.extend(space.edge_nodes(e));
    }
    for &c in &set.cells {
        out.extend(space.cell_owned_nodes(c));
    }
    out
}

fn push_dofs(space: &FunctionSpace, nodes: &[usize], offset: usize, mask: &[bool], out: &mut Vec<usize>) {
    for &n in nodes {
        for comp in 0..space.components() {
            let d = offset + space.dof(n, comp);
            if !mask[d] {
                out.push(d);
            }
        }
    }
}

fn vertex_sets(mesh: &Mesh) -> impl Iterator<Item = (usize, EntitySet)> + '_ {
    (0..mesh.num_vertices()).map(move |v| (v, mesh.vertex_star(v).expect("vertex id in range")))
}

impl PatchSet {
    /// Builds patches from raw index lists. Empty lists are dropped;
    /// weights are inverse multiplicities.
    pub fn from_index_lists(dim: usize, lists: Vec<(usize, Vec<usize>)>) -> Self {
        let mut mult = vec![0usize; dim];
        let mut kept = Vec::new();
        for (vertex, mut dofs) in lists {
            dofs.sort_unstable();
            dofs.dedup();
            if dofs.is_empty() {
                continue;
            }
            for &d in &dofs {
                mult[d] += 1;
            }
            kept.push((vertex, dofs));
        }
        let patches = kept
            .into_iter()
            .map(|(vertex, dofs)| {
                let weights = dofs.iter().map(|&d| 1.0 / mult[d] as f64).collect();
                Patch { vertex, dofs, weights }
            })
            .collect();
        PatchSet { dim, patches, factors: Vec::new(), weighting: Weighting::default() }
    }

    /// Vanka patches: velocity DoFs on the closure of each vertex star,
    /// pressure DoFs on the star itself. Masked DoFs are left out.
    pub fn vanka(spaces: &StokesSpaces, mask: &[bool]) -> Self {
        let mesh = spaces.mesh();
        let nu = spaces.num_velocity_dofs();
        assert_eq!(mask.len(), spaces.num_dofs());
        let lists = vertex_sets(mesh)
            .map(|(v, star)| {
                let closure = mesh.closure(&star);
                let mut dofs = Vec::new();
                push_dofs(&spaces.velocity, &entity_nodes(&spaces.velocity, &closure), 0, mask, &mut dofs);
                push_dofs(&spaces.pressure, &entity_nodes(&spaces.pressure, &star), nu, mask, &mut dofs);
                (v, dofs)
            })
            .collect();
        Self::from_index_lists(spaces.num_dofs(), lists)
    }

    /// Star patches of a single space: DoFs on the entities of each
    /// vertex star.
    pub fn star(space: &FunctionSpace, mask: &[bool]) -> Self {
        assert_eq!(mask.len(), space.num_dofs());
        let lists = vertex_sets(space.mesh())
            .map(|(v, star)| {
                let mut dofs = Vec::new();
                push_dofs(space, &entity_nodes(space, &star), 0, mask, &mut dofs);
                (v, dofs)
            })
            .collect();
        Self::from_index_lists(space.num_dofs(), lists)
    }

    pub fn with_weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn patch_for_vertex(&self, v: usize) -> Option<&Patch> {
        self.patches.iter().find(|p| p.vertex == v)
    }

    /// Number of patches containing each DoF.
    pub fn multiplicity(&self) -> Vec<usize> {
        let mut m = vec![0; self.dim];
        for p in &self.patches {
            for &d in &p.dofs {
                m[d] += 1;
            }
        }
        m
    }

    pub fn is_factored(&self) -> bool {
        !self.patches.is_empty() && self.factors.len() == self.patches.len()
    }

    /// Extracts and LU-factors every patch matrix of `k`.
    pub fn factor(&mut self, k: &CsrMatrix) -> Result<()> {
        if k.nrows() != self.dim || k.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator for patches over {} DoFs",
                k.nrows(),
                k.ncols(),
                self.dim
            )));
        }
        self.factors = self
            .patches
            .par_iter()
            .map(|p| DenseLu::factor_owned(k.gather_dense(&p.dofs)).map_err(|_| Error::SingularPatch { vertex: p.vertex }))
            .collect::<Result<Vec<_>>>()?;
        Ok(())
    }

    /// One additive Schwarz application. Local solves run in parallel;
    /// contributions are summed in patch order.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        assert!(self.is_factored() || self.patches.is_empty(), "patches are not factored");
        assert_eq!(r.len(), self.dim);
        assert_eq!(z.len(), self.dim);
        let locals: Vec<Vec<f64>> = self
            .patches
            .par_iter()
            .zip(&self.factors)
            .map(|(p, lu)| {
                let mut rl: Vec<f64> = p.dofs.iter().map(|&d| r[d]).collect();
                if self.weighting == Weighting::Symmetric {
                    rl.iter_mut().zip(&p.weights).for_each(|(x, w)| *x *= w.sqrt());
                }
                let mut xl = lu.solve(&rl);
                match self.weighting {
                    Weighting::Left => xl.iter_mut().zip(&p.weights).for_each(|(x, w)| *x *= w),
                    Weighting::Symmetric => xl.iter_mut().zip(&p.weights).for_each(|(x, w)| *x *= w.sqrt()),
                    Weighting::None => {}
                }
                xl
            })
            .collect();
        z.iter_mut().for_each(|v| *v = 0.0);
        for (p, xl) in self.patches.iter().zip(&locals) {
            for (&d, &x) in p.dofs.iter().zip(xl) {
                z[d] += x;
            }
        }
    }
}
