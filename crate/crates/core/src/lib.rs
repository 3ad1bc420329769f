pub mod assoc;
pub mod bridges;
pub mod cli;
pub mod curvature;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod forms;
pub mod grid;
pub mod hyper;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod sections;
pub mod suites;

pub use error::{Error, Result};
