pub mod banded;
pub mod bogoliubov;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod meanfield;
pub mod observables;
pub mod probe;
pub mod units;

pub use error::{Error, Result};
pub use grid::SpatialGrid;
