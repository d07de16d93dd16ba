//! Weyl m-functions: closed-form models, Weyl disks of transfer matrices,
//! boundary limits and point masses.

mod boundary;
mod disk;
mod models;

pub use boundary::{
    boundary_limit, dyadic_schedule, point_mass_mass, ray_limit, sector_probe, BoundaryKind, BoundaryLimit,
    SectorProbe,
};
pub use disk::{m_from_transfer, weyl_disk, CertifiedM, TransferFamily, WeylDisk};
pub use models::{log_periodic_amplitude, BoundaryData, ModelKind, ModelM};
