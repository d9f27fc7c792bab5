//! Dirac operators of a Nahm curve twisted by a flat line bundle, split into Fourier modes,
//! and their `L²` kernels.

pub mod clifford;
pub mod halfline;
pub mod kernel;
pub mod operator;
pub mod shooting;
pub mod slice;
pub mod total;

pub use clifford::CliffordModel;
pub use halfline::{half_line_kernel, HalfLineGrid, Side};
pub use kernel::{mode_kernel, KernelOptions, ModeKernel};
pub use operator::{build_mode_operator, Chirality, ModeOperator};
pub use shooting::{Grid, KernelFunction, Measure, ShootingOptions};
pub use slice::{slice_energy, SliceEnergyProfile};
pub use total::{total_kernel, ModePolicy, TotalKernel};
