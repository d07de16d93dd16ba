//! Orthonormal polynomials on the real line: the three-term recurrence,
//! transfer matrices, scalar and matrix Christoffel-Darboux kernels, and
//! zeros by Sturm bisection.

mod params;
mod poly;
mod table;
mod zeros;

pub use params::{JacobiParams, DEFAULT_HORIZON};
pub(crate) use poly::Recurrence;
pub use poly::{
    cd_kernel, eval_polys, interp_m, monotone_transfer, scalar_kernel, tau_scale, transfer_matrix,
    KernelMode, PolyPair, DIAGONAL_THRESHOLD, OVERFLOW_GUARD,
};
pub use table::{fmt_num, KernelTable, KernelValues};
pub use zeros::{all_zeros, sturm_count, zeros_around, zeros_near, Tridiagonal, ZerosNear};
