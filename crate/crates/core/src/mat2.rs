//! 2x2 complex matrices, signature matrices and the Riemann sphere.
//!
//! Everything downstream (transfer matrices, kernels, Hamiltonians) is carried
//! by [`Mat2C`]. Points of the extended plane are [`SpherePoint`]s, stored as
//! unit-normalized projective pairs so that infinity needs no special casing.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2C {
    pub e11: C64,
    pub e12: C64,
    pub e21: C64,
    pub e22: C64,
}

impl fmt::Debug for Mat2C {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.e11, self.e12, self.e21, self.e22)
    }
}

impl Mat2C {
    pub const fn new(e11: C64, e12: C64, e21: C64, e22: C64) -> Self {
        Self { e11, e12, e21, e22 }
    }

    pub const fn real(e11: f64, e12: f64, e21: f64, e22: f64) -> Self {
        Self::new(
            C64::new(e11, 0.0),
            C64::new(e12, 0.0),
            C64::new(e21, 0.0),
            C64::new(e22, 0.0),
        )
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Self::new(a, ZERO, ZERO, d)
    }

    /// Outer product `u* v` of row vectors, i.e. the matrix with entries
    /// `conj(u_r) v_c`.
    pub fn row_outer(u: [C64; 2], v: [C64; 2]) -> Self {
        Self::new(
            u[0].conj() * v[0],
            u[0].conj() * v[1],
            u[1].conj() * v[0],
            u[1].conj() * v[1],
        )
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.e11, self.e12, self.e21, self.e22]
    }

    pub fn from_entries(e: [C64; 4]) -> Self {
        Self::new(e[0], e[1], e[2], e[3])
    }

    pub fn det(&self) -> C64 {
        self.e11 * self.e22 - self.e12 * self.e21
    }

    pub fn trace(&self) -> C64 {
        self.e11 + self.e22
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.e11.conj(), self.e21.conj(), self.e12.conj(), self.e22.conj())
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.e11, self.e21, self.e12, self.e22)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.e11 * s, self.e12 * s, self.e21 * s, self.e22 * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self::new(self.e11 * s, self.e12 * s, self.e21 * s, self.e22 * s)
    }

    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if d.norm() <= 1e-300 || !d.is_finite() {
            return Err(Error::SingularMatrix);
        }
        Ok(Self::new(self.e22, -self.e12, -self.e21, self.e11).scale(d.inv()))
    }

    /// Inverse of a matrix known to have unit determinant (the adjugate).
    pub fn inverse_unimodular(&self) -> Self {
        Self::new(self.e22, -self.e12, -self.e21, self.e11)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.entries().iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|e| e.is_finite())
    }

    /// `(X + X*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale_re(0.5)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let h = self.hermitian_part();
        let s = h.max_abs();
        if s == 0.0 || !s.is_finite() {
            return [s * 0.0, s * 0.0];
        }
        let a = h.e11.re / s;
        let d = h.e22.re / s;
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + (h.e12 / s).norm_sqr()).sqrt();
        [(mean - rad) * s, (mean + rad) * s]
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }
}

impl Add for Mat2C {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.e11 + o.e11,
            self.e12 + o.e12,
            self.e21 + o.e21,
            self.e22 + o.e22,
        )
    }
}

impl AddAssign for Mat2C {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Mat2C {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.e11 - o.e11,
            self.e12 - o.e12,
            self.e21 - o.e21,
            self.e22 - o.e22,
        )
    }
}

impl Neg for Mat2C {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2C {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.e11 * o.e11 + self.e12 * o.e21,
            self.e11 * o.e12 + self.e12 * o.e22,
            self.e21 * o.e11 + self.e22 * o.e21,
            self.e21 * o.e12 + self.e22 * o.e22,
        )
    }
}

impl Mul<C64> for Mat2C {
    type Output = Self;
    fn mul(self, s: C64) -> Self {
        self.scale(s)
    }
}

impl Mul<f64> for Mat2C {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale_re(s)
    }
}

/// `j = [[0, -1], [1, 0]]`, the signature matrix of the upper half-plane.
pub const fn j() -> Mat2C {
    Mat2C::real(0.0, -1.0, 1.0, 0.0)
}

/// `diag(-1, 1)`; conjugating a Jacobi transfer matrix by it gives the
/// j-monotonic family.
pub const fn sigma() -> Mat2C {
    Mat2C::real(-1.0, 0.0, 0.0, 1.0)
}

/// `antidiag(1, 1)`, used to flip the Szego recursion into the right sign
/// convention.
pub const fn swap() -> Mat2C {
    Mat2C::real(0.0, 1.0, 1.0, 0.0)
}

/// Signature matrix of the unit disk, `diag(-1, 1)`.
pub const fn disk_signature() -> Mat2C {
    Mat2C::real(-1.0, 0.0, 0.0, 1.0)
}

/// Cayley matrix `[[1, -i], [1, i]]`; as a Mobius map it sends the upper
/// half-plane onto the unit disk.
pub const fn cayley() -> Mat2C {
    Mat2C::new(ONE, C64::new(0.0, -1.0), ONE, I)
}

/// `[[1, a], [0, 1]]`.
pub fn upper_triangular(a: f64) -> Mat2C {
    Mat2C::real(1.0, a, 0.0, 1.0)
}

/// `exp(G)` for a trace-free `G`.
///
/// Uses `G^2 = -det(G) I`, so `exp(G) = cosh(s) I + sinh(s)/s G` with
/// `s^2 = -det(G)`. Both coefficients are even in `s`, so no branch of the
/// square root is ever selected; near the nilpotent point the Taylor series
/// is used.
pub fn expm_tracefree(g: &Mat2C) -> Mat2C {
    let delta = -g.det();
    let (c, s) = if delta.norm() < 1e-12 {
        let d2 = delta * delta;
        (
            ONE + delta / 2.0 + d2 / 24.0 + d2 * delta / 720.0,
            ONE + delta / 6.0 + d2 / 120.0 + d2 * delta / 5040.0,
        )
    } else {
        let r = delta.sqrt();
        (r.cosh(), r.sinh() / r)
    };
    Mat2C::identity().scale(c) + g.scale(s)
}

/// The Hermitian defect of a transfer matrix with respect to a signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signature {
    /// `(T* j T - j) / i`
    UpperHalfPlane,
    /// `T* J T - J` with `J = diag(-1, 1)`
    Disk,
}

#[derive(Debug, Clone, Copy)]
pub struct Defect {
    pub matrix: Mat2C,
    /// Ascending.
    pub eigenvalues: [f64; 2],
}

/// `(T* j T - j)/i`, symmetrized, with its eigenvalues. Zero exactly when `T`
/// is real unimodular; negative semidefinite for j-monotonic families in the
/// upper half-plane.
pub fn j_defect(t: &Mat2C) -> Defect {
    signature_defect(t, Signature::UpperHalfPlane)
}

pub fn signature_defect(t: &Mat2C, sig: Signature) -> Defect {
    let raw = match sig {
        Signature::UpperHalfPlane => (t.adjoint() * j() * *t - j()).scale(-I),
        Signature::Disk => t.adjoint() * disk_signature() * *t - disk_signature(),
    };
    let matrix = raw.hermitian_part();
    Defect {
        matrix,
        eigenvalues: matrix.hermitian_eigenvalues(),
    }
}

/// A point of the Riemann sphere as a unit-normalized projective pair
/// `(v1, v2)`, read as `v1 / v2`; `(1, 0)` is infinity.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    v1: C64,
    v2: C64,
}

impl fmt::Debug for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_complex() {
            Some(w) => write!(f, "SpherePoint({w})"),
            None => write!(f, "SpherePoint(inf)"),
        }
    }
}

impl SpherePoint {
    /// Projective class of `(v1, v2)`; `None` for the zero vector.
    pub fn from_pair(v1: C64, v2: C64) -> Option<Self> {
        // Rescale by the largest modulus first so tiny or huge pairs normalize cleanly.
        let m = v1.norm().max(v2.norm());
        if m == 0.0 || !m.is_finite() {
            return None;
        }
        let (a, b) = (v1 / m, v2 / m);
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (mut a, mut b) = (a / n, b / n);
        // Fix the phase so that equal classes compare equal.
        let lead = if b.norm() >= a.norm() { b } else { a };
        let phase = lead.conj() / lead.norm();
        a *= phase;
        b *= phase;
        Some(Self { v1: a, v2: b })
    }

    pub fn finite(w: C64) -> Self {
        Self::from_pair(w, ONE).expect("finite point")
    }

    pub fn infinity() -> Self {
        Self { v1: ONE, v2: ZERO }
    }

    pub fn pair(&self) -> (C64, C64) {
        (self.v1, self.v2)
    }

    pub fn is_infinity(&self) -> bool {
        self.v2 == ZERO
    }

    /// `v1 / v2`, or `None` at infinity.
    pub fn to_complex(&self) -> Option<C64> {
        if self.v2 == ZERO {
            None
        } else {
            Some(self.v1 / self.v2)
        }
    }

    /// Whether the point lies in the closed upper half-plane (including the
    /// real line and infinity), up to `tol` in the imaginary part.
    pub fn in_closed_upper(&self, tol: f64) -> bool {
        // Im(v1/v2) has the sign of Im(v1 conj v2).
        (self.v1 * self.v2.conj()).im >= -tol
    }
}

impl From<C64> for SpherePoint {
    fn from(w: C64) -> Self {
        Self::finite(w)
    }
}

/// Mobius action of `m` on the sphere.
pub fn mobius_apply(m: &Mat2C, p: &SpherePoint) -> Result<SpherePoint> {
    let d = m.det();
    let scale = m.max_abs();
    if !(d.norm() > 1e-14 * scale * scale) {
        return Err(Error::SingularMatrix);
    }
    let (v1, v2) = p.pair();
    SpherePoint::from_pair(m.e11 * v1 + m.e12 * v2, m.e21 * v1 + m.e22 * v2).ok_or(Error::SingularMatrix)
}

/// Chordal distance on the sphere of diameter 2: `2|v1 u2 - v2 u1|` for
/// unit representatives. Equals `2|p - q| / sqrt((1+|p|^2)(1+|q|^2))` for
/// finite points.
pub fn chordal_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    let (a1, a2) = p.pair();
    let (b1, b2) = q.pair();
    (2.0 * (a1 * b2 - a2 * b1).norm()).min(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn mobius_examples() {
        let i = SpherePoint::finite(I);
        let out = mobius_apply(&Mat2C::identity(), &i).unwrap();
        assert!(chordal_distance(&out, &i) < 1e-15);

        let zero = SpherePoint::finite(ZERO);
        assert!(mobius_apply(&j(), &zero).unwrap().is_infinity());

        let w = mobius_apply(&cayley(), &i).unwrap();
        assert!(w.to_complex().unwrap().norm() < 1e-15);
    }

    #[test]
    fn mobius_singular() {
        let m = Mat2C::real(1.0, 2.0, 2.0, 4.0);
        assert_eq!(
            mobius_apply(&m, &SpherePoint::finite(I)),
            Err(Error::SingularMatrix)
        );
    }

    #[test]
    fn chordal_examples() {
        let zero = SpherePoint::finite(ZERO);
        let one = SpherePoint::finite(ONE);
        let inf = SpherePoint::infinity();
        let i = SpherePoint::finite(I);
        assert!((chordal_distance(&zero, &inf) - 2.0).abs() < 1e-15);
        assert_eq!(chordal_distance(&i, &i), 0.0);
        assert!((chordal_distance(&zero, &one) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn j_defect_examples() {
        let d = j_defect(&Mat2C::identity());
        assert_eq!(d.matrix.max_abs(), 0.0);
        assert_eq!(d.eigenvalues, [0.0, 0.0]);
        let t = Mat2C::real(2.0, 3.0, 1.0, 2.0);
        assert!(j_defect(&t).matrix.max_abs() < 1e-14);
    }

    #[test]
    fn cayley_switches_signatures() {
        // C* J C / 2 = -i j
        let lhs = (cayley().adjoint() * disk_signature() * cayley()).scale_re(0.5);
        assert!(lhs.dist(&j().scale(-I)) < 1e-15);
    }

    #[test]
    fn expm_matches_series() {
        let g = Mat2C::new(c(0.3, 0.1), c(-1.2, 0.4), c(0.7, -0.2), c(-0.3, -0.1));
        let mut term = Mat2C::identity();
        let mut sum = Mat2C::identity();
        for k in 1..40 {
            term = (term * g).scale_re(1.0 / k as f64);
            sum += term;
        }
        assert!(expm_tracefree(&g).dist(&sum) < 1e-14);
        let nil = Mat2C::real(0.0, 0.0, 2.5, 0.0);
        assert_eq!(expm_tracefree(&nil), Mat2C::real(1.0, 0.0, 2.5, 1.0));
    }

    fn unimodular() -> impl Strategy<Value = Mat2C> {
        prop::array::uniform6(-2.0f64..2.0).prop_filter_map("well conditioned", |v| {
            let a = C64::new(v[0], v[1]);
            let b = C64::new(v[2], v[3]);
            let cc = C64::new(v[4], v[5]);
            if a.norm() < 0.2 {
                return None;
            }
            // d chosen so that ad - bc = 1
            let d = (ONE + b * cc) / a;
            Some(Mat2C::new(a, b, cc, d))
        })
    }

    fn point() -> impl Strategy<Value = SpherePoint> {
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(x, y)| SpherePoint::finite(C64::new(x, y)))
    }

    proptest! {
        #[test]
        fn mobius_is_an_action(m1 in unimodular(), m2 in unimodular(), p in point()) {
            let lhs = mobius_apply(&(m1 * m2), &p).unwrap();
            let rhs = mobius_apply(&m1, &mobius_apply(&m2, &p).unwrap()).unwrap();
            prop_assert!(chordal_distance(&lhs, &rhs) < 1e-12);
        }

        #[test]
        fn chordal_triangle(p in point(), q in point(), r in point()) {
            let pq = chordal_distance(&p, &q);
            prop_assert!((pq - chordal_distance(&q, &p)).abs() < 1e-15);
            prop_assert!((0.0..=2.0).contains(&pq));
            prop_assert!(chordal_distance(&p, &r) <= pq + chordal_distance(&q, &r) + 1e-12);
        }

        #[test]
        fn chordal_matches_stereographic(x in -3.0f64..3.0, y in -3.0f64..3.0,
                                         u in -3.0f64..3.0, v in -3.0f64..3.0) {
            let (p, q) = (C64::new(x, y), C64::new(u, v));
            let expect = 2.0 * (p - q).norm()
                / ((1.0 + p.norm_sqr()) * (1.0 + q.norm_sqr())).sqrt();
            let got = chordal_distance(&SpherePoint::finite(p), &SpherePoint::finite(q));
            prop_assert!((got - expect).abs() < 1e-14);
        }

        #[test]
        fn real_unimodular_has_no_defect(a in 0.2f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
            let t = Mat2C::real(a, b, c, (1.0 + b * c) / a);
            prop_assert!(j_defect(&t).matrix.max_abs() < 1e-12);
        }
    }
}
