pub mod boundary;
pub mod convection;
pub mod error;
pub mod grid;
pub mod inverse;
pub mod pipeline;
pub mod forward;
pub mod solve;

pub use error::{Error, Result};
