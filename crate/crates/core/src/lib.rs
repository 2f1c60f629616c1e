pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod profile;
pub mod relaxation;
pub mod solvers;
pub mod transfer;

pub use error::{Error, Result};
