use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::system::HamiltonianSystem;
use crate::error::Result;
use crate::mat2::{j, Mat2C, SpherePoint};

/// The constant trace-normalized Hamiltonian attached to a point `eta` of
/// the closed upper half-plane, with its unit-length solution and kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingObjects {
    pub eta: SpherePoint,
    /// `Im eta / (1 + |eta|^2)`; zero for real and infinite `eta`.
    pub h: f64,
    /// `[[1, -Re eta], [-Re eta, |eta|^2]] / (1 + |eta|^2)`.
    pub hamiltonian: Mat2C,
}

/// `sin(u)/u`, equal to 1 at 0.
pub fn sinc(u: C64) -> C64 {
    if u.norm() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

/// `(cos(u) - 1)/u`, equal to 0 at 0.
fn cosc(u: C64) -> C64 {
    if u.norm() < 1e-4 {
        let u2 = u * u;
        -u / 2.0 + u * u2 / 24.0 - u * u2 * u2 / 720.0
    } else {
        (u.cos() - 1.0) / u
    }
}

impl RingObjects {
    pub fn new(eta: SpherePoint) -> Self {
        // With eta = v1/v2 the formulas are homogeneous of degree 0 in (v1, v2),
        // so infinity needs no separate branch.
        let (v1, v2) = eta.pair();
        let norm = v1.norm_sqr() + v2.norm_sqr();
        let cross = v1 * v2.conj();
        let hamiltonian =
            Mat2C::real(v2.norm_sqr(), -cross.re, -cross.re, v1.norm_sqr()).scale_re(1.0 / norm);
        Self {
            eta,
            h: (cross.im / norm).max(0.0),
            hamiltonian,
        }
    }

    pub fn at(eta: C64) -> Self {
        Self::new(SpherePoint::finite(eta))
    }

    pub fn infinity() -> Self {
        Self::new(SpherePoint::infinity())
    }

    /// `exp(z j H) = cos(z h) I + z sinc(z h) j H`.
    pub fn solution(&self, z: C64) -> Mat2C {
        let zh = z * self.h;
        Mat2C::identity().scale(zh.cos()) + (j() * self.hamiltonian).scale(z * sinc(zh))
    }

    /// `j h cosc(h d) + H sinc(h d)` with `d = conj(w) - z`; equals `H` on
    /// the diagonal and identically for real or infinite `eta`.
    pub fn kernel(&self, z: C64, w: C64) -> Mat2C {
        let hd = (w.conj() - z) * self.h;
        j().scale(cosc(hd) * self.h) + self.hamiltonian.scale(sinc(hd))
    }

    /// Solution of the constant system at length `t`: `exp(t z j H)`.
    pub fn solution_at(&self, t: f64, z: C64) -> Mat2C {
        self.solution(z * t)
    }

    /// Kernel of the constant system at length `t`: `t K(t z, t w)`.
    pub fn kernel_at(&self, t: f64, z: C64, w: C64) -> Mat2C {
        self.kernel(z * t, w * t).scale_re(t)
    }

    /// The constant system `A = H`, `B = 0` on `[0, horizon]`.
    pub fn system(&self, horizon: f64) -> Result<HamiltonianSystem> {
        HamiltonianSystem::constant(
            format!("constant-eta:{:?}", self.eta),
            self.hamiltonian,
            Mat2C::zero(),
            horizon,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eta_i() {
        let r = RingObjects::at(c(0.0, 1.0));
        assert!(r.hamiltonian.dist(&Mat2C::identity().scale_re(0.5)) < 1e-15);
        assert!((r.h - 0.5).abs() < 1e-15);
        assert!(r.kernel(c(0.0, 0.0), c(0.0, 0.0)).dist(&r.hamiltonian) < 1e-15);
        let (z, w) = (c(0.7, 0.2), c(-1.1, 0.4));
        let d = w.conj() - z;
        let corner = (d / 2.0).sin() / d;
        assert!((r.kernel(z, w).e11 - corner).norm() < 1e-15);
        let t = 1.3;
        let closed = Mat2C::identity().scale((z * t / 2.0).cos()) + j().scale((z * t / 2.0).sin());
        assert!(r.solution_at(t, z).dist(&closed) < 1e-14);
    }

    #[test]
    fn eta_infinity() {
        let r = RingObjects::infinity();
        assert_eq!(r.hamiltonian, Mat2C::real(0.0, 0.0, 0.0, 1.0));
        assert_eq!(r.h, 0.0);
        assert_eq!(r.kernel(c(1.0, 2.0), c(-3.0, 0.5)), r.hamiltonian);
        // Linear solution for singular H.
        let z = c(0.4, -0.3);
        assert!(
            r.solution(z)
                .dist(&(Mat2C::identity() + (j() * r.hamiltonian).scale(z)))
                < 1e-15
        );
    }

    #[test]
    fn eta_real_is_singular() {
        let r = RingObjects::at(c(0.7, 0.0));
        assert!(r.hamiltonian.det().norm() < 1e-16);
        assert_eq!(r.kernel(c(1.0, 2.0), c(-3.0, 0.5)), r.hamiltonian);
    }

    fn eta() -> impl Strategy<Value = C64> {
        (-4.0f64..4.0, 1e-3f64..4.0).prop_map(|(x, y)| c(x, y))
    }

    proptest! {
        #[test]
        fn hamiltonian_invariants(e in eta()) {
            let r = RingObjects::at(e);
            prop_assert!((r.hamiltonian.trace().re - 1.0).abs() < 1e-14);
            prop_assert!(r.hamiltonian.hermitian_eigenvalues()[0] >= -1e-15);
            prop_assert!((r.hamiltonian.det().re - r.h * r.h).abs() < 1e-14);
            prop_assert!(r.kernel(c(0.0, 0.0), c(0.0, 0.0)).dist(&r.hamiltonian) < 1e-15);
        }

        #[test]
        fn kernel_matches_jform(e in eta(), zr in -3.0f64..3.0, zi in -1.0f64..1.0,
                                wr in -3.0f64..3.0, wi in -1.0f64..1.0) {
            let r = RingObjects::at(e);
            let (z, w) = (c(zr, zi), c(wr, wi));
            let d = w.conj() - z;
            prop_assume!(d.norm() > 1e-3);
            let jf = (r.solution(w).adjoint() * j() * r.solution(z) - j()).scale(d.inv());
            prop_assert!(r.kernel(z, w).dist(&jf) < 1e-10 * jf.max_abs().max(1.0));
        }
    }
}
