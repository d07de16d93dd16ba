//! Orthogonal polynomials on the unit circle: Szego recursion, CD kernel,
//! Caratheodory functions and the embedding of Szego transfer matrices as
//! a j-monotonic family.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cansys::RingObjects;
use crate::error::{Error, Result};
use crate::mat2::{cayley, j, swap, Mat2C};
use crate::oprl::{KernelTable, KernelValues};
use crate::universality::{Grid, Rescaled, SCALE_THRESHOLD};
use crate::weyl::{m_from_transfer, TransferFamily};

/// `|1 - z conj(w)|` below this uses the direct sum for the CD kernel.
pub const OPUC_DIAGONAL_THRESHOLD: f64 = 1e-8;
/// Default number of coefficients a generator may be asked for.
pub const DEFAULT_OPUC_HORIZON: usize = 1_000_000;

type AlphaFn = dyn Fn(usize) -> C64 + Send + Sync;

/// Verblunsky coefficients `alpha_0, alpha_1, ...` from a generator.
#[derive(Clone)]
pub struct VerblunskyParams {
    id: String,
    horizon: usize,
    alpha: Arc<AlphaFn>,
}

impl std::fmt::Debug for VerblunskyParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VerblunskyParams")
            .field("id", &self.id)
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl VerblunskyParams {
    pub fn from_fn<F>(id: impl Into<String>, horizon: usize, f: F) -> Self
    where
        F: Fn(usize) -> C64 + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            horizon,
            alpha: Arc::new(f),
        }
    }

    /// `alpha = 0`: normalized Lebesgue measure.
    pub fn free() -> Self {
        Self::from_fn("opuc-free", DEFAULT_OPUC_HORIZON, |_| C64::new(0.0, 0.0))
    }

    pub fn constant(alpha: C64) -> Result<Self> {
        if !(alpha.norm() < 1.0) {
            return Err(Error::VerblunskyOutsideDisk {
                index: 0,
                modulus: alpha.norm(),
            });
        }
        Ok(Self::from_fn(
            format!("opuc-constant:{alpha}"),
            DEFAULT_OPUC_HORIZON,
            move |_| alpha,
        ))
    }

    /// The listed coefficients followed by zeros.
    pub fn from_list(id: impl Into<String>, values: Vec<C64>) -> Result<Self> {
        if let Some((index, a)) = values.iter().enumerate().find(|(_, a)| !(a.norm() < 1.0)) {
            return Err(Error::VerblunskyOutsideDisk {
                index,
                modulus: a.norm(),
            });
        }
        Ok(Self::from_fn(id, DEFAULT_OPUC_HORIZON, move |n| {
            values.get(n).copied().unwrap_or(C64::new(0.0, 0.0))
        }))
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn alpha(&self, n: usize) -> Result<C64> {
        if n >= self.horizon {
            return Err(Error::HorizonExceeded {
                requested: n,
                horizon: self.horizon,
            });
        }
        let a = (self.alpha)(n);
        if !(a.norm() < 1.0) {
            return Err(Error::VerblunskyOutsideDisk {
                index: n,
                modulus: a.norm(),
            });
        }
        Ok(a)
    }
}

/// `A(alpha, z) = [[z, -conj(alpha)], [-alpha z, 1]] / rho`.
pub fn szego_step(alpha: C64, z: C64) -> Mat2C {
    let rho = (1.0 - alpha.norm_sqr()).sqrt();
    Mat2C::new(z, -alpha.conj(), -alpha * z, C64::new(1.0, 0.0)).scale_re(1.0 / rho)
}

/// `S(n, z)` together with `phi_n(z)` and `phi_n^*(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SzegoValues {
    pub s: Mat2C,
    pub phi: C64,
    pub phi_star: C64,
}

/// `S(n, z) = A(alpha_{n-1}, z) ... A(alpha_0, z)`, with `phi_n`, `phi_n^*`
/// from their own recursion `phi_{k+1} = (z phi_k - conj(alpha_k) phi_k^*)/rho_k`,
/// `phi_{k+1}^* = (phi_k^* - alpha_k z phi_k)/rho_k`.
pub fn szego_eval(alphas: &VerblunskyParams, n: usize, z: C64) -> Result<SzegoValues> {
    let mut s = Mat2C::identity();
    let (mut phi, mut phi_star) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
    for k in 0..n {
        let a = alphas.alpha(k)?;
        let rho = (1.0 - a.norm_sqr()).sqrt();
        s = szego_step(a, z) * s;
        (phi, phi_star) = (
            (z * phi - a.conj() * phi_star) / rho,
            (phi_star - a * z * phi) / rho,
        );
    }
    Ok(SzegoValues { s, phi, phi_star })
}

/// `k_n(z, w) = sum_{j<n} phi_j(z) conj(phi_j(w))`, by the CD formula
/// `(phi_n^*(z) conj(phi_n^*(w)) - phi_n(z) conj(phi_n(w))) / (1 - z conj(w))`
/// away from `z conj(w) = 1` and by the direct sum near it.
pub fn opuc_kernel(alphas: &VerblunskyParams, n: usize, z: C64, w: C64) -> Result<C64> {
    if n == 0 {
        return Err(Error::Domain("OPUC kernel needs n >= 1".into()));
    }
    let denom = 1.0 - z * w.conj();
    if denom.norm() > OPUC_DIAGONAL_THRESHOLD {
        let a = szego_eval(alphas, n, z)?;
        let b = szego_eval(alphas, n, w)?;
        return Ok((a.phi_star * b.phi_star.conj() - a.phi * b.phi.conj()) / denom);
    }
    opuc_kernel_sum(alphas, n, z, w)
}

/// The direct sum `sum_{j<n} phi_j(z) conj(phi_j(w))`.
pub fn opuc_kernel_sum(alphas: &VerblunskyParams, n: usize, z: C64, w: C64) -> Result<C64> {
    let (mut pz, mut sz) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
    let (mut pw, mut sw) = (pz, sz);
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        acc += pz * pw.conj();
        if k + 1 == n {
            break;
        }
        let a = alphas.alpha(k)?;
        let rho = (1.0 - a.norm_sqr()).sqrt();
        (pz, sz) = ((z * pz - a.conj() * sz) / rho, (sz - a * z * pz) / rho);
        (pw, sw) = ((w * pw - a.conj() * sw) / rho, (sw - a * w * pw) / rho);
    }
    Ok(acc)
}

/// Caratheodory functions `F(z) = int (e^{it} + z)/(e^{it} - z) dmu`.
#[derive(Debug, Clone)]
pub enum CaratheodoryModel {
    /// Normalized arc length, `F = 1`.
    Lebesgue,
    /// Point masses `(angle, weight)`, weights normalized to 1.
    Discrete(Vec<(f64, f64)>),
    /// The measure of a Verblunsky sequence, through nested Weyl disks of
    /// the embedded family: `F(e^{iz}) = -i m(z)`.
    Verblunsky { alphas: VerblunskyParams, tol: f64 },
}

impl CaratheodoryModel {
    pub fn discrete(points: Vec<(f64, f64)>) -> Result<Self> {
        let total: f64 = points.iter().map(|p| p.1).sum();
        if points.is_empty() || points.iter().any(|p| !(p.1 > 0.0) || !p.0.is_finite()) {
            return Err(Error::Domain(
                "point masses need finite angles and positive weights".into(),
            ));
        }
        Ok(Self::Discrete(
            points.into_iter().map(|(t, w)| (t, w / total)).collect(),
        ))
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        if !(z.norm() < 1.0) {
            return Err(Error::Domain(format!(
                "Caratheodory function needs |z| < 1, got {z}"
            )));
        }
        Ok(match self {
            Self::Lebesgue => C64::new(1.0, 0.0),
            Self::Discrete(points) => points
                .iter()
                .map(|&(t, w)| {
                    let e = C64::from_polar(1.0, t);
                    (e + z) / (e - z) * w
                })
                .sum(),
            Self::Verblunsky { alphas, tol } => {
                if z.norm() == 0.0 {
                    return Ok(C64::new(1.0, 0.0));
                }
                let family = OpucFamily::new(alphas.clone());
                let zeta = -C64::i() * z.ln();
                -C64::i() * m_from_transfer(&family, zeta, *tol)?.value
            }
        })
    }

    /// `g(xi) = lim Re F` toward `e^{i xi}` where it is known in closed form.
    pub fn boundary_density(&self, xi: f64) -> Option<f64> {
        match self {
            Self::Lebesgue => Some(1.0),
            Self::Discrete(points) => {
                let on_atom = points.iter().any(|p| {
                    let d = (p.0 - xi).rem_euclid(2.0 * PI);
                    d.min(2.0 * PI - d) < 1e-12
                });
                (!on_atom).then_some(0.0)
            }
            Self::Verblunsky { .. } => None,
        }
    }
}

fn embed_step(alpha: C64, z: C64) -> Mat2C {
    let c = cayley();
    let inner = swap() * szego_step(alpha, (C64::i() * z).exp()) * swap();
    (c.inverse().expect("Cayley matrix is invertible") * inner * c).scale((-C64::i() * z / 2.0).exp())
}

/// `T(n, z) = e^{-inz/2} C^{-1} swap S(n, e^{iz}) swap C`, a j-monotonic
/// family with unit determinant and m-function `i F(e^{iz})`.
pub fn embed_transfer(alphas: &VerblunskyParams, n: usize, z: C64) -> Result<Mat2C> {
    let mut t = Mat2C::identity();
    for k in 0..n {
        t = embed_step(alphas.alpha(k)?, z) * t;
    }
    Ok(t)
}

/// Matrix kernel of the embedded family. Each step factors as
/// `L_k(z) = L_k(0) exp(z j / 2)` with `L_k(0)` j-unitary, so
/// `K_n(z, w) = sum_{k<n} T(k, w)^* K_i(z, w) T(k, z)` with `K_i` the
/// constant kernel of `H = I/2`; this holds on the diagonal as well.
pub fn embed_kernel(alphas: &VerblunskyParams, n: usize, z: C64, w: C64) -> Result<Mat2C> {
    let step_kernel = RingObjects::at(C64::i()).kernel(z, w);
    let (mut tz, mut tw) = (Mat2C::identity(), Mat2C::identity());
    let mut acc = Mat2C::zero();
    for k in 0..n {
        acc += tw.adjoint() * step_kernel * tz;
        let a = alphas.alpha(k)?;
        tz = embed_step(a, z) * tz;
        tw = embed_step(a, w) * tw;
    }
    Ok(acc)
}

/// `(T(n, w)^* j T(n, z) - j) / (conj(w) - z)` off the diagonal.
pub fn embed_jform_kernel(alphas: &VerblunskyParams, n: usize, z: C64, w: C64) -> Result<Mat2C> {
    let d = w.conj() - z;
    if d.norm() < crate::oprl::DIAGONAL_THRESHOLD {
        return Err(Error::DiagonalJForm);
    }
    let tz = embed_transfer(alphas, n, z)?;
    let tw = embed_transfer(alphas, n, w)?;
    Ok((tw.adjoint() * j() * tz - j()).scale(d.inv()))
}

/// The embedded family as a transfer-matrix source for Weyl disks.
#[derive(Debug, Clone)]
pub struct OpucFamily {
    alphas: VerblunskyParams,
}

impl OpucFamily {
    pub fn new(alphas: VerblunskyParams) -> Self {
        Self { alphas }
    }
}

impl TransferFamily for OpucFamily {
    fn transfer_at(&self, length: f64, z: C64) -> Result<Mat2C> {
        if length.fract() != 0.0 {
            return Err(Error::NonIntegerIndex(length));
        }
        embed_transfer(&self.alphas, length as usize, z)
    }

    fn horizon(&self) -> f64 {
        self.alphas.horizon() as f64
    }
}

/// `e^{-in(z - conj(w))/(2 g k)} k_n(e^{i(xi + z/(g k))}, e^{i(xi + w/(g k))}) / k`
/// with `k = k_n(e^{i xi}, e^{i xi})` over all grid pairs, and its sup
/// distance to `sin(d/2)/(d/2)`, `d = conj(w) - z`.
pub fn opuc_universality(
    alphas: &VerblunskyParams,
    xi: f64,
    g: f64,
    n: usize,
    grid: &Grid,
) -> Result<Rescaled> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::Domain(format!("boundary density {g} must be positive")));
    }
    let e = C64::from_polar(1.0, xi);
    let k0 = opuc_kernel(alphas, n, e, e)?.re;
    if !(k0 > SCALE_THRESHOLD) {
        return Err(Error::ScaleNotDeveloped(k0));
    }
    let s = g * k0;
    let pairs = grid.pairs();
    let values = pairs
        .par_iter()
        .map(|(z, w)| {
            let u = (z - w.conj()) / s;
            let prefactor = (-C64::i() * n as f64 * u / 2.0).exp();
            let zz = (C64::i() * (xi + z / s)).exp();
            let ww = (C64::i() * (xi + w / s)).exp();
            Ok(prefactor * opuc_kernel(alphas, n, zz, ww)? / k0)
        })
        .collect::<Result<Vec<C64>>>()?;
    let sup_error = pairs
        .iter()
        .zip(&values)
        .map(|((z, w), v)| (v - half_sinc(*z, *w)).norm())
        .fold(0.0, f64::max);
    Ok(Rescaled {
        table: KernelTable::new(alphas.id(), xi, s, n as f64, pairs, KernelValues::Scalar(values))?,
        sup_error,
    })
}

/// `sin(d/2)/(d/2)` with `d = conj(w) - z`.
pub fn half_sinc(z: C64, w: C64) -> C64 {
    crate::cansys::sinc((w.conj() - z) / 2.0)
}
