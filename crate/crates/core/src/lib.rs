pub mod algnahm;
pub mod dirac;
pub mod error;
pub mod linalg;
pub mod flow;
pub mod model;
pub mod monopole;
pub mod pipeline;
pub mod torus;

pub use error::{NahmError, Result};
