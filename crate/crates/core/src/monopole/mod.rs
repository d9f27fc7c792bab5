//! The transformed monopole on the dual torus: Higgs field, link connection, Bogomolny
//! residual and Dirac-type weights.

pub mod bogomolny;
pub mod frame;
pub mod model_end;
pub mod weights;
pub mod winding;

pub use bogomolny::{bogomolny_residual, BogomolnyResidual, Cube, ORIENTATION_SIGN};
pub use frame::{connection_link, higgs_field, BlockLabel, KernelFrame, LinkOverlap, MonopoleSample};
pub use model_end::ModelEnd;
pub use weights::{fit_singularity_weights, RaySamples, WeightReport};
pub use winding::{det_winding_weight_sum, winding_number, Drum, WINDING_SIGN};
