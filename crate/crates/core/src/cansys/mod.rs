//! Canonical (Hamiltonian) systems, their transfer matrices and kernels.

mod gauge;
mod ring;
mod schrodinger;
mod system;

pub use gauge::{
    jacobi_embedding, rescaled, shift_kernel, shift_m, spectral_shift, triangular_shift, PdbGauge,
    TraceReparam,
};
pub use ring::{sinc, RingObjects};
pub use schrodinger::{
    schrodinger_free_model, Potential, PotentialFn, SchrodingerSolutions, SchrodingerSystem,
};
pub use system::{
    cansys_kernel, integrate_transfer, jform_kernel, CoefFn, HamiltonianSystem, Segment, SegmentKind,
    TransferResult, DEFAULT_CONTINUUM_HORIZON, DEFAULT_INTEGRATOR_TOL,
};
