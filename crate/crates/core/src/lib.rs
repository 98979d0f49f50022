pub mod checks;
pub mod dispersion;
pub mod dno;
pub mod error;
pub mod linalg;
pub mod operators;
pub mod quadrature;
pub mod solver;
pub mod specfun;
pub mod spectral;
pub mod wnl;

pub use error::{Error, Result};
