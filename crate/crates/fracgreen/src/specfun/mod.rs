//! Special functions: gamma utilities, Wright functions of negative order
//! (subordination kernels), and scalar/matrix Mittag-Leffler functions.

pub mod contour;
pub mod gamma;
pub mod mittag;
pub mod wright;

pub use contour::HankelContour;
pub use gamma::{gamma, ln_gamma, recip_gamma};
pub use mittag::{
    dissipativity_constant, mittag_leffler_matrix, mittag_leffler_scalar, MLFamily,
};
pub use wright::{subordination_kernel, wright_phi, wright_w, WrightKernel};
