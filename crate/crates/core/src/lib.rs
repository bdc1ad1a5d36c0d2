pub mod error;
pub mod tol;
pub mod json;
pub mod linalg;
pub mod braid;
pub mod connection;
pub mod ode;
pub mod garnier;
pub mod cli;

pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use num_complex::Complex64 as C64;
pub use tol::Tolerances;
