//! The three adjustment solvers plus the exact closed form they validate
//! against.

pub mod analytic;
pub mod fd;
pub mod heatkernel;
pub mod mc;
