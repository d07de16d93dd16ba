use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::system::{cansys_kernel, integrate_transfer, HamiltonianSystem, Segment};
use crate::error::{Error, Result};
use crate::mat2::Mat2C;
use crate::weyl::ModelM;

pub type PotentialFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum Potential {
    Constant(f64),
    Smooth { id: String, v: Arc<PotentialFn> },
}

impl Potential {
    pub fn smooth<F>(id: impl Into<String>, v: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::Smooth {
            id: id.into(),
            v: Arc::new(v),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Self::Constant(c) => format!("const{c}"),
            Self::Smooth { id, .. } => id.clone(),
        }
    }
}

fn rotation(beta: f64) -> Mat2C {
    let (s, c) = beta.sin_cos();
    Mat2C::real(c, -s, s, c)
}

fn coefficients(beta: f64, v: f64) -> (Mat2C, Mat2C) {
    let r = rotation(beta);
    let a = r * Mat2C::real(0.0, 0.0, 0.0, 1.0) * r.transpose();
    let b = r * Mat2C::real(-1.0, 0.0, 0.0, v) * r.transpose();
    (a, b)
}

/// Fundamental solutions of `-u'' + V u = z u` at `x`: `phi` with
/// `(phi, phi')(0) = (-sin beta, cos beta)` and `theta` with
/// `(theta, theta')(0) = (cos beta, sin beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchrodingerSolutions {
    pub phi: C64,
    pub dphi: C64,
    pub theta: C64,
    pub dtheta: C64,
}

/// A half-line Schrodinger operator with boundary angle `beta`, written as
/// the canonical system `A = R diag(0, 1) R^T`, `B = R diag(-1, V) R^T`
/// with `R` the rotation by `beta`.
#[derive(Debug, Clone)]
pub struct SchrodingerSystem {
    beta: f64,
    system: HamiltonianSystem,
}

impl SchrodingerSystem {
    pub fn new(potential: &Potential, beta: f64, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Domain(format!("horizon {horizon} must be positive")));
        }
        let id = format!("schrodinger-{}@{beta}", potential.id());
        let segments = match potential {
            Potential::Constant(c) => {
                let (a, b) = coefficients(beta, *c);
                vec![Segment::constant(horizon, a, b)]
            }
            Potential::Smooth { id, v } => {
                let pieces = horizon.ceil() as usize;
                (0..pieces)
                    .map(|k| {
                        let len = (horizon - k as f64).min(1.0);
                        let v = v.clone();
                        Segment::smooth(len, id.clone(), move |x| coefficients(beta, v(x)))
                    })
                    .collect()
            }
        };
        Ok(Self {
            beta,
            system: HamiltonianSystem::new(id, segments)?,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.system = self.system.with_tolerance(tol);
        self
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn system(&self) -> &HamiltonianSystem {
        &self.system
    }

    pub fn solutions(&self, x: f64, z: C64) -> Result<SchrodingerSolutions> {
        let s = rotation(self.beta).transpose() * integrate_transfer(&self.system, x, z)?.t;
        Ok(SchrodingerSolutions {
            phi: s.e21,
            dphi: s.e11,
            theta: s.e22,
            dtheta: s.e12,
        })
    }

    pub fn kernel(&self, x: f64, z: C64, w: C64) -> Result<Mat2C> {
        cansys_kernel(&self.system, x, z, w)
    }
}

/// The m-function of `-u''` on the half-line (Dirichlet-type angle 0),
/// obtained from nested Weyl disks of the exact constant system.
pub fn schrodinger_free_model() -> ModelM {
    let sys = SchrodingerSystem::new(&Potential::Constant(0.0), 0.0, 1e9)
        .expect("valid free system")
        .system;
    ModelM::from_transfer("schrodinger-free", Arc::new(sys), 1e-12).expect("free m is Herglotz")
}
