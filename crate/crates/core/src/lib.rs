pub mod basis;
pub mod dg;
pub mod error;
pub mod experiments;
pub mod mesh;
pub mod norms;
pub mod operator;
pub mod quadrature;
pub mod rational;

pub use error::{Error, Result};
