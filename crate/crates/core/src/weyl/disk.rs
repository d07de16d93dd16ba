use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::Mat2C;
use crate::oprl::{monotone_transfer, JacobiParams};

/// `{ w : T w in closure(C+) }` for a unimodular `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum WeylDisk {
    Disk {
        center: C64,
        radius: f64,
    },
    /// `2 Re(normal * w) + offset >= 0`; the starting region when `T = I`.
    HalfPlane {
        normal: C64,
        offset: f64,
    },
}

impl WeylDisk {
    pub fn radius(&self) -> f64 {
        match self {
            Self::Disk { radius, .. } => *radius,
            Self::HalfPlane { .. } => f64::INFINITY,
        }
    }

    pub fn contains(&self, w: C64, tol: f64) -> bool {
        match *self {
            Self::Disk { center, radius } => (w - center).norm() <= radius + tol,
            Self::HalfPlane { normal, offset } => {
                2.0 * (normal * w).re + offset >= -tol * normal.norm().max(1.0)
            }
        }
    }
}

/// Weyl disk of `T`, from the Hermitian form `G = T* j T / (2i)`: the region
/// is `g11 |w|^2 + 2 Re(g21 w) + g22 >= 0`, a disk of center `-g12/g11` and
/// radius `1/(2|g11|)` when `g11 < 0`.
pub fn weyl_disk(t: &Mat2C) -> Result<WeylDisk> {
    let (a, b, c, d) = (t.e11, t.e12, t.e21, t.e22);
    let size = a.norm() * d.norm() + b.norm() * c.norm();
    let drift = (t.det() - 1.0).norm();
    if !(drift <= 1e-8 * size.max(1.0)) {
        return Err(Error::NotUnimodular(drift));
    }
    let g11 = (a * c.conj()).im;
    let g12 = (c.conj() * b - a.conj() * d) / C64::new(0.0, 2.0);
    let g22 = (b * d.conj()).im;
    let flat = 1e-13 * (a.norm_sqr() + c.norm_sqr());
    if g11.abs() <= flat {
        return Ok(WeylDisk::HalfPlane {
            normal: g12.conj(),
            offset: g22,
        });
    }
    if g11 > 0.0 {
        return Err(Error::NotADisk(format!(
            "transfer matrix maps the upper half-plane outward (g11 = {g11:e})"
        )));
    }
    Ok(WeylDisk::Disk {
        center: -g12 / g11,
        radius: 0.5 / g11.abs(),
    })
}

/// A one-parameter family of transfer matrices `T(L, z)`, `L >= 0`.
pub trait TransferFamily: Send + Sync {
    fn transfer_at(&self, length: f64, z: C64) -> Result<Mat2C>;
    /// Largest admissible `L`.
    fn horizon(&self) -> f64;
    /// Starting length for the doubling search in [`m_from_transfer`].
    fn base_step(&self) -> f64 {
        1.0
    }
}

impl TransferFamily for JacobiParams {
    fn transfer_at(&self, length: f64, z: C64) -> Result<Mat2C> {
        if length.fract() != 0.0 || length < 0.0 {
            return Err(Error::NonIntegerIndex(length));
        }
        monotone_transfer(self, length as usize, z)
    }

    fn horizon(&self) -> f64 {
        match self.support() {
            Some(s) => (s - 1) as f64,
            None => self.horizon() as f64,
        }
    }
}

/// An m-value with a certified error bound (the Weyl disk radius).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedM {
    pub value: C64,
    pub radius: f64,
    pub length: f64,
}

/// Doubles `L` from the family's base step until the Weyl disk at `z` has
/// radius below `tol`, and returns its center.
pub fn m_from_transfer(family: &dyn TransferFamily, z: C64, tol: f64) -> Result<CertifiedM> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("m evaluated at {z}, needs Im z > 0")));
    }
    let horizon = family.horizon();
    let mut length = family.base_step().min(horizon);
    let mut last_radius = f64::INFINITY;
    loop {
        let disk = weyl_disk(&family.transfer_at(length, z)?)?;
        if let WeylDisk::Disk { center, radius } = disk {
            last_radius = radius;
            if radius < tol {
                return Ok(CertifiedM {
                    value: center,
                    radius,
                    length,
                });
            }
        }
        if length >= horizon {
            return Err(Error::LimitCircleStall {
                radius: last_radius,
                length,
            });
        }
        length = (2.0 * length).min(horizon);
    }
}
