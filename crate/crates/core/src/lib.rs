//! Christoffel-Darboux kernels, Weyl m-functions and canonical systems.
//!
//! The crate computes scalar and matrix CD kernels for orthogonal
//! polynomials on the real line and the unit circle, transfer matrices of
//! Jacobi recursions and general canonical (Hamiltonian) systems, Weyl
//! disks and m-functions, and the rescaled-kernel limits against the sinc
//! kernel and the constant-Hamiltonian kernels.

pub mod cansys;
pub mod error;
pub mod mat2;
pub mod oprl;
pub mod opuc;
pub mod quadrature;
pub mod universality;
pub mod weyl;

pub use error::{Error, Result};
pub use mat2::{Mat2C, SpherePoint};
pub use num_complex::Complex64 as C64;
