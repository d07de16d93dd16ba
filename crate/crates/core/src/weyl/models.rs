use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::disk::{m_from_transfer, TransferFamily};
use crate::error::{Error, Result};
use crate::mat2::SpherePoint;

/// Amplitude of the log-periodic model, `(pi/2) e^{-pi/2}`.
pub fn log_periodic_amplitude() -> f64 {
    std::f64::consts::FRAC_PI_2 * (-std::f64::consts::FRAC_PI_2).exp()
}

#[derive(Clone)]
pub enum ModelKind {
    /// Stieltjes transform of the semicircle law on `[-2, 2]`.
    FreeJacobi,
    /// Stieltjes transform of the arcsine law on `[-1, 1]`.
    Chebyshev,
    /// `i exp(c sin log(-iz))`, invariant under `z -> z e^{2 pi}`.
    LogPeriodic,
    /// `sum w_k / (x_k - z)`.
    Discrete(Vec<(f64, f64)>),
    /// `sum c_k m_k(z)`.
    Mixture(Vec<(f64, ModelM)>),
    /// Weyl-disk limit of a transfer family, certified to `tol`.
    Transfer {
        family: Arc<dyn TransferFamily>,
        tol: f64,
    },
}

/// A Herglotz function on the upper half-plane with an id and, where
/// known, explicit boundary data.
#[derive(Clone)]
pub struct ModelM {
    id: String,
    kind: ModelKind,
}

impl fmt::Debug for ModelM {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModelM({})", self.id)
    }
}

/// Known boundary value `eta = m(xi + i0)` and `f = Im eta / pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub eta: SpherePoint,
    pub f_mu: f64,
}

impl ModelM {
    /// Builds a model and spot-checks it: values on a grid in the upper
    /// half-plane must have `Im m >= -1e-12`, and Stieltjes transforms of
    /// probability measures must satisfy `z m(z) -> -1` at `z = 1e6 i`.
    pub fn new(id: impl Into<String>, kind: ModelKind) -> Result<Self> {
        let model = Self { id: id.into(), kind };
        for x in [-3.0, -1.0, 0.0, 0.5, 3.0] {
            for y in [0.1, 1.0, 10.0] {
                let z = C64::new(x, y);
                let m = model.eval(z)?;
                if m.im < -1e-12 || !m.is_finite() {
                    return Err(Error::Domain(format!(
                        "model {} is not Herglotz: m({z}) = {m}",
                        model.id
                    )));
                }
            }
        }
        if let Some(mass) = model.total_mass() {
            let z = C64::new(0.0, 1e6);
            let lead = -(z * model.eval(z)?);
            if (lead - mass).norm() > 1e-4 * mass.max(1.0) {
                return Err(Error::Domain(format!(
                    "model {} has the wrong branch at infinity: -z m(z) = {lead}",
                    model.id
                )));
            }
        }
        Ok(model)
    }

    pub fn free_jacobi() -> Self {
        Self::new("free-jacobi", ModelKind::FreeJacobi).expect("built-in model")
    }

    pub fn chebyshev() -> Self {
        Self::new("chebyshev", ModelKind::Chebyshev).expect("built-in model")
    }

    pub fn log_periodic() -> Self {
        Self::new("log-periodic", ModelKind::LogPeriodic).expect("built-in model")
    }

    pub fn discrete(id: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|&(x, w)| !(w > 0.0) || !x.is_finite()) {
            return Err(Error::Domain("discrete measure needs positive weights".into()));
        }
        Self::new(id, ModelKind::Discrete(points))
    }

    pub fn mixture(id: impl Into<String>, parts: Vec<(f64, ModelM)>) -> Result<Self> {
        if parts.is_empty() || parts.iter().any(|(c, _)| !(*c > 0.0)) {
            return Err(Error::Domain("mixture needs positive coefficients".into()));
        }
        Self::new(id, ModelKind::Mixture(parts))
    }

    pub fn from_transfer(id: impl Into<String>, family: Arc<dyn TransferFamily>, tol: f64) -> Result<Self> {
        Self::new(id, ModelKind::Transfer { family, tol })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Total mass for Stieltjes transforms of finite measures.
    fn total_mass(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::FreeJacobi | ModelKind::Chebyshev => Some(1.0),
            ModelKind::Discrete(pts) => Some(pts.iter().map(|p| p.1).sum()),
            ModelKind::Mixture(parts) => parts.iter().map(|(c, m)| m.total_mass().map(|t| c * t)).sum(),
            ModelKind::LogPeriodic | ModelKind::Transfer { .. } => None,
        }
    }

    /// `m(z)` for `Im z > 0`.
    pub fn eval(&self, z: C64) -> Result<C64> {
        if !(z.im > 0.0) {
            return Err(Error::Domain(format!("m evaluated at {z}, needs Im z > 0")));
        }
        Ok(match &self.kind {
            ModelKind::FreeJacobi => {
                // (-z + sqrt(z^2 - 4))/2 written without cancellation.
                let s = (z - 2.0).sqrt() * (z + 2.0).sqrt();
                -2.0 / (z + s)
            }
            ModelKind::Chebyshev => -1.0 / ((z - 1.0).sqrt() * (z + 1.0).sqrt()),
            ModelKind::LogPeriodic => {
                let c = log_periodic_amplitude();
                C64::new(0.0, 1.0) * (c * (C64::new(0.0, -1.0) * z).ln().sin()).exp()
            }
            ModelKind::Discrete(pts) => pts.iter().map(|&(x, w)| w / (x - z)).sum(),
            ModelKind::Mixture(parts) => {
                let mut acc = C64::new(0.0, 0.0);
                for (c, m) in parts {
                    acc += m.eval(z)? * *c;
                }
                acc
            }
            ModelKind::Transfer { family, tol } => m_from_transfer(family.as_ref(), z, *tol)?.value,
        })
    }

    /// Explicit `m(xi + i0)` where the model provides it.
    pub fn boundary_data(&self, xi: f64) -> Option<BoundaryData> {
        use std::f64::consts::PI;
        match &self.kind {
            ModelKind::FreeJacobi => {
                let eta = if xi.abs() < 2.0 {
                    C64::new(-xi / 2.0, (4.0 - xi * xi).sqrt() / 2.0)
                } else if xi.abs() > 2.0 {
                    C64::new((-xi + xi.signum() * (xi * xi - 4.0).sqrt()) / 2.0, 0.0)
                } else {
                    return None;
                };
                Some(BoundaryData {
                    eta: SpherePoint::finite(eta),
                    f_mu: eta.im / PI,
                })
            }
            ModelKind::Chebyshev => {
                let eta = if xi.abs() < 1.0 {
                    C64::new(0.0, 1.0 / (1.0 - xi * xi).sqrt())
                } else if xi.abs() > 1.0 {
                    C64::new(-xi.signum() / (xi * xi - 1.0).sqrt(), 0.0)
                } else {
                    return None;
                };
                Some(BoundaryData {
                    eta: SpherePoint::finite(eta),
                    f_mu: eta.im / PI,
                })
            }
            ModelKind::Discrete(pts) => {
                if pts.iter().any(|p| p.0 == xi) {
                    Some(BoundaryData {
                        eta: SpherePoint::infinity(),
                        f_mu: f64::INFINITY,
                    })
                } else {
                    let v: f64 = pts.iter().map(|&(x, w)| w / (x - xi)).sum();
                    Some(BoundaryData {
                        eta: SpherePoint::finite(C64::new(v, 0.0)),
                        f_mu: 0.0,
                    })
                }
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Stieltjes transform of the semicircle density by the trapezoid rule
    /// in `x = 2 cos(theta)`, spectrally accurate off the support.
    fn semicircle_oracle(z: C64) -> C64 {
        let n = 4000;
        let mut acc = c(0.0, 0.0);
        for k in 0..n {
            let th = PI * (k as f64 + 0.5) / n as f64;
            let x = 2.0 * th.cos();
            let dens = (4.0 - x * x).sqrt() / (2.0 * PI);
            acc += dens * 2.0 * th.sin() / (x - z);
        }
        acc * (PI / n as f64)
    }

    #[test]
    fn free_at_i() {
        let m = ModelM::free_jacobi().eval(c(0.0, 1.0)).unwrap();
        let exact = c(0.0, (5f64.sqrt() - 1.0) / 2.0);
        assert!((m - exact).norm() < 1e-15);
        assert!((semicircle_oracle(c(0.0, 1.0)) - exact).norm() < 1e-10);
        for z in [c(0.3, 0.5), c(-2.5, 0.1), c(4.0, 2.0)] {
            let m = ModelM::free_jacobi().eval(z).unwrap();
            assert!((m - semicircle_oracle(z)).norm() < 1e-9, "{z}");
        }
    }

    #[test]
    fn chebyshev_matches_quadrature() {
        // x = cos(theta) turns the arcsine law into d(theta)/pi.
        let oracle = |z: C64| {
            let n = 4000;
            let mut acc = c(0.0, 0.0);
            for k in 0..n {
                let th = PI * (k as f64 + 0.5) / n as f64;
                acc += 1.0 / (th.cos() - z);
            }
            acc / n as f64
        };
        for z in [c(0.0, 2.0), c(0.7, 0.3), c(-1.5, 0.2)] {
            let m = ModelM::chebyshev().eval(z).unwrap();
            assert!((m - oracle(z)).norm() < 1e-9, "{z}");
        }
    }

    #[test]
    fn discrete_two_point() {
        let m = ModelM::discrete("d", vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        assert!((m.eval(c(0.0, 1.0)).unwrap() - c(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn domain_error_off_half_plane() {
        assert!(ModelM::free_jacobi().eval(c(1.0, 0.0)).is_err());
        assert!(ModelM::free_jacobi().eval(c(1.0, -1.0)).is_err());
    }

    #[test]
    fn boundary_data_free() {
        let b = ModelM::free_jacobi().boundary_data(0.0).unwrap();
        assert!((b.eta.to_complex().unwrap() - c(0.0, 1.0)).norm() < 1e-15);
        assert!((b.f_mu - 1.0 / PI).abs() < 1e-15);
        let b = ModelM::free_jacobi().boundary_data(3.0).unwrap();
        assert!((b.eta.to_complex().unwrap().re - (-3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        // Boundary values agree with the closed form just above the axis.
        for xi in [-1.7, 0.4, 2.6] {
            let b = ModelM::free_jacobi().boundary_data(xi).unwrap();
            let m = ModelM::free_jacobi().eval(c(xi, 1e-10)).unwrap();
            assert!((b.eta.to_complex().unwrap() - m).norm() < 1e-8);
        }
        for xi in [-0.5, 0.9, 1.3] {
            let b = ModelM::chebyshev().boundary_data(xi).unwrap();
            let m = ModelM::chebyshev().eval(c(xi, 1e-12)).unwrap();
            assert!((b.eta.to_complex().unwrap() - m).norm() < 1e-6);
        }
    }

    fn upper() -> impl Strategy<Value = C64> {
        (-5.0f64..5.0, 1e-3f64..5.0).prop_map(|(x, y)| c(x, y))
    }

    proptest! {
        #[test]
        fn log_periodic_invariance(z in upper()) {
            let m = ModelM::log_periodic();
            let a = m.eval(z).unwrap();
            let b = m.eval(z * (-2.0 * PI).exp()).unwrap();
            prop_assert!((a - b).norm() < 1e-12);
        }

        #[test]
        fn herglotz(z in upper()) {
            let mix = ModelM::mixture("mix", vec![
                (0.5, ModelM::discrete("p", vec![(2.5, 1.0)]).unwrap()),
                (0.5, ModelM::free_jacobi()),
            ]).unwrap();
            for m in [ModelM::free_jacobi(), ModelM::chebyshev(), ModelM::log_periodic(), mix] {
                prop_assert!(m.eval(z).unwrap().im >= -1e-12);
            }
        }
    }
}
