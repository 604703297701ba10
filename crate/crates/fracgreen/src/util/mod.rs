pub mod artifact;
pub mod cheb;
pub mod linalg;
pub mod quad;
