pub mod cli;
pub mod error;
pub mod fields;
pub mod functionals;
pub mod geometry;
pub mod riesz;
pub mod shapeopt;
pub mod surgery;

pub use error::{Result, ShapeError};
