use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::params::JacobiParams;
use crate::error::{Error, Result};
use crate::mat2::{j, Mat2C};

/// Running values of the recurrence are refused beyond this magnitude.
pub const OVERFLOW_GUARD: f64 = 1e300;

/// `|conj(w) - z|` below this counts as the diagonal for the j-form.
pub const DIAGONAL_THRESHOLD: f64 = 1e-8;

/// First- and second-kind polynomials `p_0..p_n`, `q_0..q_n` at `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyPair {
    pub z: C64,
    pub p: Vec<C64>,
    pub q: Vec<C64>,
}

/// One step of the three-term recurrence, carried for both solutions at once.
///
/// Holds `(p_{k-1}, p_k)`, `(q_{k-1}, q_k)` and `a_k` (with `a_0 = 1`).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Recurrence {
    pub z: C64,
    pub k: usize,
    pub p_prev: C64,
    pub p: C64,
    pub q_prev: C64,
    pub q: C64,
    pub a: f64,
}

impl Recurrence {
    pub fn new(z: C64) -> Self {
        Self {
            z,
            k: 0,
            p_prev: C64::new(0.0, 0.0),
            p: C64::new(1.0, 0.0),
            q_prev: C64::new(-1.0, 0.0),
            q: C64::new(0.0, 0.0),
            a: 1.0,
        }
    }

    /// `(p_k, q_k)`.
    pub fn row(&self) -> [C64; 2] {
        [self.p, self.q]
    }

    /// Advance with `(a_{k+1}, b_{k+1})`. A zero `a` (terminal index of a
    /// finite measure) is replaced by 1, giving the monic-scaled
    /// polynomial that vanishes on the support.
    pub fn advance(&mut self, a_next: f64, b_next: f64) -> Result<()> {
        let a_div = if a_next == 0.0 { 1.0 } else { a_next };
        let p = ((self.z - b_next) * self.p - self.p_prev * self.a) / a_div;
        let q = ((self.z - b_next) * self.q - self.q_prev * self.a) / a_div;
        self.p_prev = self.p;
        self.q_prev = self.q;
        self.p = p;
        self.q = q;
        self.a = a_next;
        self.k += 1;
        if !(p.norm() <= OVERFLOW_GUARD && q.norm() <= OVERFLOW_GUARD) {
            return Err(Error::Overflow(self.k));
        }
        Ok(())
    }

    /// `B(k, z) = [[p_k, -q_k], [a_k p_{k-1}, -a_k q_{k-1}]]`.
    pub fn transfer(&self) -> Mat2C {
        Mat2C::new(self.p, -self.q, self.p_prev * self.a, -self.q_prev * self.a)
    }
}

fn check_support(params: &JacobiParams, n: usize) -> Result<()> {
    match params.support() {
        Some(s) if n >= s => Err(Error::FiniteSupport {
            support: s,
            requested: n,
        }),
        _ => Ok(()),
    }
}

fn run_to(params: &JacobiParams, n: usize, z: C64) -> Result<Recurrence> {
    let mut r = Recurrence::new(z);
    for k in 1..=n {
        let (a, b) = params.coefficients(k)?;
        r.advance(a, b)?;
    }
    Ok(r)
}

/// `p_0..p_n` and `q_0..q_n` at `z` from `p_{-1} = 0`, `q_{-1} = -1`.
pub fn eval_polys(params: &JacobiParams, n: usize, z: C64) -> Result<PolyPair> {
    check_support(params, n)?;
    let mut r = Recurrence::new(z);
    let mut p = Vec::with_capacity(n + 1);
    let mut q = Vec::with_capacity(n + 1);
    p.push(r.p);
    q.push(r.q);
    for k in 1..=n {
        let (a, b) = params.coefficients(k)?;
        r.advance(a, b)?;
        p.push(r.p);
        q.push(r.q);
    }
    Ok(PolyPair { z, p, q })
}

/// `B(n, z) = A(a_n, b_n; z) ... A(a_1, b_1; z)` with
/// `A(a, b; z) = [[(z - b)/a, -1/a], [a, 0]]`.
pub fn transfer_matrix(params: &JacobiParams, n: usize, z: C64) -> Result<Mat2C> {
    check_support(params, n)?;
    Ok(run_to(params, n, z)?.transfer())
}

/// `T(n, z) = sigma B(n, z) sigma`, the j-monotonic family with the same
/// Weyl function.
pub fn monotone_transfer(params: &JacobiParams, n: usize, z: C64) -> Result<Mat2C> {
    let b = transfer_matrix(params, n, z)?;
    Ok(Mat2C::new(b.e11, -b.e12, -b.e21, b.e22))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    /// Running sum of `e_j(w)* e_j(z)`, `e_j = (p_j, q_j)`.
    Sum,
    /// `(T(n,w)* j T(n,z) - j) / (conj(w) - z)`; integer index, off-diagonal.
    JForm,
}

/// Matrix CD kernel at a possibly fractional index `L`:
/// `sum_{j<n} e_j(w)* e_j(z) + (L - n) e_n(w)* e_n(z)`, `n = floor(L)`.
///
/// For a finitely supported measure with `N` points the interpolation
/// continues past `N` along the vanishing tail vector, so the scalar
/// kernel saturates on the support.
pub fn cd_kernel(params: &JacobiParams, l: f64, z: C64, w: C64, mode: KernelMode) -> Result<Mat2C> {
    if !(l >= 0.0) || !l.is_finite() {
        return Err(Error::Domain(format!("kernel index must be >= 0, got {l}")));
    }
    match mode {
        KernelMode::Sum => kernel_sum(params, l, z, w),
        KernelMode::JForm => kernel_jform(params, l, z, w),
    }
}

fn kernel_sum(params: &JacobiParams, l: f64, z: C64, w: C64) -> Result<Mat2C> {
    let n = l.floor() as usize;
    let stop = params.support().map_or(n, |s| n.min(s));
    let mut rz = Recurrence::new(z);
    let mut rw = Recurrence::new(w);
    let mut acc = Mat2C::zero();
    for k in 0..stop {
        acc += Mat2C::row_outer(rw.row(), rz.row());
        if k + 1 < stop || l > stop as f64 {
            let (a, b) = params.coefficients(k + 1)?;
            rz.advance(a, b)?;
            rw.advance(a, b)?;
        }
    }
    let weight = l - stop as f64;
    if weight > 0.0 {
        acc += Mat2C::row_outer(rw.row(), rz.row()).scale_re(weight);
    }
    Ok(acc)
}

fn kernel_jform(params: &JacobiParams, l: f64, z: C64, w: C64) -> Result<Mat2C> {
    if l.fract() != 0.0 {
        return Err(Error::NonIntegerIndex(l));
    }
    let delta = w.conj() - z;
    if delta.norm() < DIAGONAL_THRESHOLD {
        return Err(Error::DiagonalJForm);
    }
    let n = l as usize;
    let tz = monotone_transfer(params, n, z)?;
    let tw = monotone_transfer(params, n, w)?;
    Ok((tw.adjoint() * j() * tz - j()).scale(delta.inv()))
}

/// Scalar CD kernel `K_L(z, w)`, the (1,1) entry of the matrix kernel.
pub fn scalar_kernel(params: &JacobiParams, l: f64, z: C64, w: C64) -> Result<C64> {
    Ok(cd_kernel(params, l, z, w, KernelMode::Sum)?.e11)
}

/// `tau_xi(L) = tr K_L(xi, xi)`.
pub fn tau_scale(params: &JacobiParams, xi: f64, l: f64) -> Result<f64> {
    let x = C64::new(xi, 0.0);
    Ok(cd_kernel(params, l, x, x, KernelMode::Sum)?.trace().re)
}

/// `M_L(z, xi) = I + (z - xi) j K_L(z, xi)`.
pub fn interp_m(params: &JacobiParams, l: f64, xi: f64, z: C64) -> Result<Mat2C> {
    let x = C64::new(xi, 0.0);
    let k = cd_kernel(params, l, z, x, KernelMode::Sum)?;
    Ok(Mat2C::identity() + (j() * k).scale(z - x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::{j_defect, sigma};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn free_polys_at_zero() {
        let pp = eval_polys(&JacobiParams::free(), 2, c(0.0, 0.0)).unwrap();
        assert_eq!(pp.p, vec![c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(pp.q, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let pp = eval_polys(&JacobiParams::chebyshev(), 0, c(0.3, 0.1)).unwrap();
        assert_eq!((pp.p.len(), pp.q.len()), (1, 1));
    }

    #[test]
    fn free_polys_are_chebyshev_second_kind() {
        let theta = std::f64::consts::PI / 3.0;
        let pp = eval_polys(&JacobiParams::free(), 3, c(2.0 * theta.cos(), 0.0)).unwrap();
        assert!((pp.p[3] - c(-1.0, 0.0)).norm() < 1e-14);
        for (k, p) in pp.p.iter().enumerate() {
            let exact = ((k as f64 + 1.0) * theta).sin() / theta.sin();
            assert!((p.re - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn q1_is_reciprocal_a1() {
        let pp = eval_polys(&JacobiParams::chebyshev(), 1, c(0.2, 0.3)).unwrap();
        assert!((pp.q[1].re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn transfer_entries_match_polys() {
        let params = JacobiParams::chebyshev();
        let z = c(0.4, -0.7);
        let n = 9;
        let pp = eval_polys(&params, n, z).unwrap();
        let bm = transfer_matrix(&params, n, z).unwrap();
        let a = params.coefficients(n).unwrap().0;
        let expect = Mat2C::new(pp.p[n], -pp.q[n], pp.p[n - 1] * a, -pp.q[n - 1] * a);
        assert!(bm.dist(&expect) < 1e-14);
        // Direct product of one-step matrices.
        let mut prod = Mat2C::identity();
        for k in 1..=n {
            let (a, b) = params.coefficients(k).unwrap();
            let step = Mat2C::new((z - b) / a, c(-1.0 / a, 0.0), c(a, 0.0), c(0.0, 0.0));
            prod = step * prod;
        }
        assert!(bm.dist(&prod) < 1e-13);
        assert_eq!(transfer_matrix(&params, 0, z).unwrap(), Mat2C::identity());
    }

    #[test]
    fn monotone_transfer_has_nonpositive_defect() {
        let t = monotone_transfer(&JacobiParams::free(), 5, c(0.0, 1.0)).unwrap();
        let ev = j_defect(&t).eigenvalues;
        assert!(ev[1] <= 1e-12, "{ev:?}");
        let b = transfer_matrix(&JacobiParams::free(), 5, c(0.0, 1.0)).unwrap();
        assert!((sigma() * b * sigma()).dist(&t) == 0.0);
    }

    #[test]
    fn kernel_small_cases() {
        let free = JacobiParams::free();
        let zero = c(0.0, 0.0);
        assert_eq!(
            cd_kernel(&free, 0.0, zero, zero, KernelMode::Sum).unwrap(),
            Mat2C::zero()
        );
        assert_eq!(tau_scale(&free, 0.0, 2.0).unwrap(), 2.0);
        assert_eq!(tau_scale(&free, 0.0, 0.0).unwrap(), 0.0);
        for n in 1..20 {
            assert_eq!(tau_scale(&free, 0.0, n as f64).unwrap(), n as f64);
        }
    }

    #[test]
    fn kernel_interpolates_linearly() {
        let params = JacobiParams::chebyshev();
        let (z, w) = (c(0.3, 0.2), c(-0.1, 0.5));
        let k3 = cd_kernel(&params, 3.0, z, w, KernelMode::Sum).unwrap();
        let k4 = cd_kernel(&params, 4.0, z, w, KernelMode::Sum).unwrap();
        let mid = cd_kernel(&params, 3.25, z, w, KernelMode::Sum).unwrap();
        assert!(mid.dist(&(k3.scale_re(0.75) + k4.scale_re(0.25))) < 1e-14);
    }

    #[test]
    fn jform_errors() {
        let free = JacobiParams::free();
        let z = c(0.5, 0.5);
        assert_eq!(
            cd_kernel(&free, 3.0, z, z.conj(), KernelMode::JForm),
            Err(Error::DiagonalJForm)
        );
        assert_eq!(
            cd_kernel(&free, 2.5, z, c(0.1, 0.0), KernelMode::JForm),
            Err(Error::NonIntegerIndex(2.5))
        );
    }

    #[test]
    fn sum_equals_jform() {
        let free = JacobiParams::free();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n = rng.gen_range(1..=300) as f64;
            // Keep Im small enough that the polynomials stay moderate.
            let z = c(rng.gen_range(-2.5..2.5), rng.gen_range(-0.02..0.02));
            let w = c(rng.gen_range(-2.5..2.5), rng.gen_range(-0.02..0.02));
            let s = cd_kernel(&free, n, z, w, KernelMode::Sum).unwrap();
            let f = cd_kernel(&free, n, z, w, KernelMode::JForm).unwrap();
            assert!(s.dist(&f) <= 1e-10 * s.max_abs().max(1.0), "n={n}");
        }
    }

    #[test]
    fn interp_m_matches_transfer_products() {
        let free = JacobiParams::free();
        let xi = 0.3;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 7, 40, 100] {
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-0.05..0.05));
            let m = interp_m(&free, n as f64, xi, z).unwrap();
            let bx = transfer_matrix(&free, n, c(xi, 0.0)).unwrap();
            let bz = transfer_matrix(&free, n, z).unwrap();
            let oracle = bx.inverse().unwrap() * bz;
            let scale = oracle.max_abs().max(1.0);
            assert!((sigma() * m * sigma()).dist(&oracle) < 1e-10 * scale, "n={n}");
            assert!((m.det() - 1.0).norm() < 1e-9 * scale * scale);
        }
        assert_eq!(interp_m(&free, 5.0, xi, c(xi, 0.0)).unwrap(), Mat2C::identity());
    }

    #[test]
    fn finite_support_saturates() {
        let d = JacobiParams::from_discrete("d", &[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let zero = c(0.0, 0.0);
        for l in [2.0, 10.0, 1e4] {
            let k = scalar_kernel(&d, l, zero, zero).unwrap();
            assert!((k.re - 2.0).abs() < 1e-12, "L={l}: {k}");
        }
        assert!(matches!(
            eval_polys(&d, 2, zero),
            Err(Error::FiniteSupport {
                support: 2,
                requested: 2
            })
        ));
    }

    #[test]
    fn overflow_guard() {
        let r = eval_polys(&JacobiParams::free(), 5000, c(0.0, 50.0));
        assert!(matches!(r, Err(Error::Overflow(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn unimodular_transfer(n in 0usize..50, x in -3.0f64..3.0, y in -1.0f64..1.0) {
            let b = transfer_matrix(&JacobiParams::chebyshev(), n, c(x, y)).unwrap();
            let scale = b.max_abs().powi(2).max(1.0);
            prop_assert!((b.det() - 1.0).norm() < 1e-12 * scale);
        }

        #[test]
        fn hermitian_symmetry(l in 0.0f64..60.0, zr in -2.0f64..2.0, zi in -0.3f64..0.3,
                              wr in -2.0f64..2.0, wi in -0.3f64..0.3) {
            let free = JacobiParams::free();
            let (z, w) = (c(zr, zi), c(wr, wi));
            let kzw = cd_kernel(&free, l, z, w, KernelMode::Sum).unwrap();
            let kwz = cd_kernel(&free, l, w, z, KernelMode::Sum).unwrap();
            prop_assert!(kzw.adjoint().dist(&kwz) <= 1e-12 * kzw.max_abs().max(1.0));
        }

        #[test]
        fn diagonal_kernel_is_psd(l in 0.0f64..200.0, xi in -3.0f64..3.0) {
            let x = c(xi, 0.0);
            let k = cd_kernel(&JacobiParams::chebyshev(), l, x, x, KernelMode::Sum).unwrap();
            prop_assert!(k.hermitian_eigenvalues()[0] >= -1e-12 * k.max_abs().max(1.0));
        }

        #[test]
        fn tau_is_monotone(l1 in 0.0f64..100.0, dl in 0.0f64..50.0, xi in -1.5f64..1.5) {
            let p = JacobiParams::chebyshev();
            prop_assert!(tau_scale(&p, xi, l1).unwrap() <= tau_scale(&p, xi, l1 + dl).unwrap() + 1e-12);
        }
    }
}
