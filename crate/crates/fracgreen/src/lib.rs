//! Green matrices of fractional-parabolic systems.
//!
//! The crate computes and cross-validates the fundamental solution pair
//! {Z_alpha, Y_alpha} of systems D^alpha u = A(x, D)u + f, where D^alpha is
//! the Caputo-Dzhrbashyan fractional derivative of order 0 < alpha < 1 and
//! A is strongly parabolic of order 2b. Two independent routes are provided
//! for constant coefficients (subordination against Wright kernels, and
//! Fourier synthesis of matrix Mittag-Leffler symbols), a Levi parametrix
//! construction extends them to variable coefficients, anisotropic decay
//! estimates are certified empirically on sampled kernel fields, and an L1
//! time-stepping oracle provides an independent check of Cauchy solutions.
//!
//! The `examples/` directory demonstrates each capability end to end; the
//! `fracgreen` binary exposes the same operations as subcommands.

pub mod error;
pub mod types;
pub mod util;

pub mod estimates;
pub mod kernels;
pub mod operators;
pub mod specfun;

pub use error::{Error, Result};
pub use types::FractionalOrder;
