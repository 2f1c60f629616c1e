use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::space::{Continuity, FunctionSpace};
use crate::mesh::{Mesh, MeshHierarchy, Point};

pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Mixed element pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Continuous `P_k / P_{k-1}`.
    TaylorHood,
    /// Continuous `P_k` velocity with discontinuous `P_{k-1}` pressure on
    /// a barycentrically refined mesh.
    ScottVogelius,
}

impl Family {
    pub fn short_name(self) -> &'static str {
        match self {
            Family::TaylorHood => "th",
            Family::ScottVogelius => "sv",
        }
    }

    pub fn pressure_continuity(self) -> Continuity {
        match self {
            Family::TaylorHood => Continuity::Continuous,
            Family::ScottVogelius => Continuity::Discontinuous,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Clone)]
pub enum BoundaryCondition {
    /// Prescribed velocity.
    Dirichlet(VectorFn),
    /// Prescribed traction `grad(u) n - p n`.
    Neumann(VectorFn),
}

impl BoundaryCondition {
    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet(_))
    }
}

#[derive(Clone)]
pub struct ExactSolution {
    pub velocity: VectorFn,
    pub pressure: ScalarFn,
}

/// Velocity and pressure spaces of one discretization level.
#[derive(Clone, Debug)]
pub struct StokesSpaces {
    pub family: Family,
    pub velocity: FunctionSpace,
    pub pressure: FunctionSpace,
}

impl StokesSpaces {
    /// Spaces of degree `k / k-1`. Scott-Vogelius needs `k >= 2` and a
    /// barycentrically refined mesh; Taylor-Hood needs `k >= 2`.
    pub fn new(mesh: Arc<Mesh>, family: Family, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("velocity degree {k} is below 2")));
        }
        if family == Family::ScottVogelius && !mesh.is_barycentric() {
            return Err(Error::InvalidArgument("Scott-Vogelius elements need a barycentrically refined mesh".into()));
        }
        let velocity = FunctionSpace::new(mesh.clone(), k, Continuity::Continuous, 2)?;
        let pressure = FunctionSpace::new(mesh, k - 1, family.pressure_continuity(), 1)?;
        Ok(StokesSpaces { family, velocity, pressure })
    }

    pub fn degree(&self) -> usize {
        self.velocity.degree()
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.velocity.mesh()
    }

    pub fn num_velocity_dofs(&self) -> usize {
        self.velocity.num_dofs()
    }

    pub fn num_pressure_dofs(&self) -> usize {
        self.pressure.num_dofs()
    }

    pub fn num_dofs(&self) -> usize {
        self.num_velocity_dofs() + self.num_pressure_dofs()
    }
}

/// Boundary value problem plus its discretization choice.
#[derive(Clone)]
pub struct ProblemInstance {
    pub name: String,
    /// Nested meshes, coarse to fine. Scott-Vogelius instances end with a
    /// barycentric split.
    pub hierarchy: MeshHierarchy,
    pub family: Family,
    pub degree: usize,
    pub boundary: BTreeMap<i32, BoundaryCondition>,
    pub forcing: VectorFn,
    pub exact: Option<ExactSolution>,
    /// No Neumann boundary: pressure is determined up to a constant.
    pub enclosed: bool,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("levels", &self.hierarchy.len())
            .field("family", &self.family)
            .field("degree", &self.degree)
            .field("markers", &self.boundary.keys().collect::<Vec<_>>())
            .field("enclosed", &self.enclosed)
            .finish()
    }
}

impl ProblemInstance {
    pub fn finest_mesh(&self) -> &Arc<Mesh> {
        self.hierarchy.finest()
    }

    pub fn dirichlet_markers(&self) -> Vec<i32> {
        self.boundary.iter().filter(|(_, bc)| bc.is_dirichlet()).map(|(&m, _)| m).collect()
    }

    pub fn spaces(&self) -> Result<StokesSpaces> {
        StokesSpaces::new(self.finest_mesh().clone(), self.family, self.degree)
    }

    pub fn validate(&self) -> Result<()> {
        let fine = self.finest_mesh();
        for (e, m) in fine.boundary_markers() {
            if !self.boundary.contains_key(m) {
                return Err(Error::InvalidArgument(format!("boundary edge {e} has marker {m} without a condition")));
            }
        }
        match self.family {
            Family::ScottVogelius if !fine.is_barycentric() => {
                Err(Error::InvalidArgument("Scott-Vogelius instance without a barycentric finest mesh".into()))
            }
            Family::TaylorHood if fine.is_barycentric() => {
                Err(Error::InvalidArgument("Taylor-Hood instance on a barycentric mesh".into()))
            }
            _ if self.degree < 2 => Err(Error::InvalidArgument(format!("velocity degree {} is below 2", self.degree))),
            _ => Ok(()),
        }
    }
}
