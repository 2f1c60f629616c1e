use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("failed to parse mesh file {path}: line {line}: {msg}")]
    MeshParse { path: PathBuf, line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular (pivot {pivot:.3e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("patch around vertex {vertex} is singular")]
    SingularPatch { vertex: usize },

    #[error("meshes are not nested: {0}")]
    NotNested(String),

    #[error("coarse grid has {dofs} unknowns, above the dense LU limit of {limit}")]
    CoarseTooLarge { dofs: usize, limit: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
