pub mod analysis;
pub mod beams;
pub mod error;
pub mod io;
pub mod params;
pub mod solver;
pub mod susceptibility;

pub use error::{Error, Result};
