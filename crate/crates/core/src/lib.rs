pub mod cli;
pub mod config;
pub mod deformation;
pub mod error;
pub mod evolution;
pub mod field;
pub mod grid;
pub mod io;
pub mod roots;
pub mod spectral;
pub mod stationary;
pub mod tridiag;
pub mod verification;

pub use error::{Error, Result};
