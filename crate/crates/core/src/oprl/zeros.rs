use serde::{Deserialize, Serialize};

use super::params::JacobiParams;
use crate::error::{Error, Result};

/// The truncated Jacobi matrix `J_n`: diagonal `b_1..b_n`, off-diagonal
/// `a_1..a_{n-1}`. Its eigenvalues are the zeros of `p_n`.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    lower: f64,
    upper: f64,
    tol: f64,
}

impl Tridiagonal {
    pub fn truncated(params: &JacobiParams, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("zeros of p_0 requested".into()));
        }
        let (a, b) = params.take(n)?;
        let off = a[..n - 1].to_vec();
        let mut lower = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        for k in 0..n {
            let left = if k > 0 { off[k - 1] } else { 0.0 };
            let right = if k + 1 < n { off[k] } else { 0.0 };
            lower = lower.min(b[k] - left - right);
            upper = upper.max(b[k] + left + right);
        }
        let amax = off.iter().cloned().fold(0.0, f64::max);
        let bmax = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let width = (bmax + 2.0 * amax).max(f64::MIN_POSITIVE);
        Ok(Self {
            diag: b,
            off,
            lower,
            upper,
            tol: 1e-13 * width,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x`, from the signs of the
    /// LDL^T pivots of `J - x`. An exactly zero pivot is nudged positive,
    /// so an eigenvalue equal to `x` is not counted.
    pub fn count_below(&self, x: f64) -> usize {
        const PIVMIN: f64 = 1e-300;
        let mut count = 0;
        let mut d = 1.0;
        for k in 0..self.diag.len() {
            let coupling = if k > 0 {
                self.off[k - 1] * self.off[k - 1] / d
            } else {
                0.0
            };
            d = self.diag[k] - x - coupling;
            if d == 0.0 {
                d = PIVMIN;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th eigenvalue in ascending order (0-based), by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = (self.lower, self.upper);
        while hi - lo > self.tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Number of zeros of `p_n` strictly below `x`.
pub fn sturm_count(params: &JacobiParams, n: usize, x: f64) -> Result<usize> {
    Ok(Tridiagonal::truncated(params, n)?.count_below(x))
}

/// All zeros of `p_n`, ascending.
pub fn all_zeros(params: &JacobiParams, n: usize) -> Result<Vec<f64>> {
    let t = Tridiagonal::truncated(params, n)?;
    Ok((0..n).map(|k| t.eigenvalue(k)).collect())
}

/// Zeros of `p_n` around `xi`, labeled so that `xi_{-1} < xi <= xi_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZerosNear {
    pub xi: f64,
    /// `xi_{-1}, xi_{-2}, ...`, nearest first.
    pub below: Vec<f64>,
    /// `xi_0, xi_1, ...`, nearest first.
    pub above: Vec<f64>,
    /// Fewer zeros than requested exist on at least one side.
    pub truncated: bool,
}

impl ZerosNear {
    /// `xi_j` for `j` in the available range.
    pub fn get(&self, j: i64) -> Option<f64> {
        if j >= 0 {
            self.above.get(j as usize).copied()
        } else {
            self.below.get((-j - 1) as usize).copied()
        }
    }

    /// `(j, xi_j)` pairs, ascending.
    pub fn labeled(&self) -> Vec<(i64, f64)> {
        let mut out: Vec<(i64, f64)> = self
            .below
            .iter()
            .enumerate()
            .rev()
            .map(|(k, &x)| (-(k as i64) - 1, x))
            .collect();
        out.extend(self.above.iter().enumerate().map(|(k, &x)| (k as i64, x)));
        out
    }
}

/// Up to `count` zeros of `p_n` on each side of `xi` (`count_above` may be
/// given separately by [`zeros_around`]).
pub fn zeros_near(params: &JacobiParams, n: usize, xi: f64, count: usize) -> Result<ZerosNear> {
    zeros_around(params, n, xi, count, count)
}

pub fn zeros_around(
    params: &JacobiParams,
    n: usize,
    xi: f64,
    count_below: usize,
    count_above: usize,
) -> Result<ZerosNear> {
    if count_below + count_above == 0 {
        return Err(Error::Domain("zero count requested".into()));
    }
    let t = Tridiagonal::truncated(params, n)?;
    let k0 = t.count_below(xi);
    let nb = count_below.min(k0);
    let na = count_above.min(n - k0);
    let below = (0..nb).map(|i| t.eigenvalue(k0 - 1 - i)).collect();
    let above = (0..na).map(|i| t.eigenvalue(k0 + i)).collect();
    Ok(ZerosNear {
        xi,
        below,
        above,
        truncated: nb < count_below || na < count_above,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oprl::poly::eval_polys;
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn cubic_zeros() {
        let z = zeros_near(&JacobiParams::free(), 3, 0.1, 1).unwrap();
        assert!(z.get(-1).unwrap().abs() < 1e-13);
        assert!((z.get(0).unwrap() - 2f64.sqrt()).abs() < 1e-13);
        assert!(!z.truncated);
        // xi itself a zero: it is labeled xi_0.
        let z = zeros_near(&JacobiParams::free(), 3, 0.0, 1).unwrap();
        assert_eq!(z.get(0).unwrap(), z.above[0]);
        assert!(z.get(0).unwrap().abs() < 1e-13);
        assert!((z.get(-1).unwrap() + 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn truncation_flag() {
        let z = zeros_near(&JacobiParams::free(), 3, 1.0, 2).unwrap();
        assert!(z.truncated);
        assert_eq!(z.above.len(), 1);
        assert_eq!(z.below.len(), 2);
    }

    #[test]
    fn free_zeros_closed_form() {
        let n = 99;
        let zs = all_zeros(&JacobiParams::free(), n).unwrap();
        for (i, x) in zs.iter().enumerate() {
            let k = n - i;
            let exact = 2.0 * (k as f64 * PI / (n as f64 + 1.0)).cos();
            assert!((x - exact).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn zeros_are_roots() {
        let params = JacobiParams::chebyshev();
        for x in all_zeros(&params, 12).unwrap() {
            let p = eval_polys(&params, 12, C64::new(x, 0.0)).unwrap().p[12];
            assert!(p.norm() < 1e-9, "{x}: {p}");
        }
    }

    #[test]
    fn labels_ascend() {
        let z = zeros_near(&JacobiParams::free(), 40, 0.37, 3).unwrap();
        let lab = z.labeled();
        assert_eq!(
            lab.iter().map(|l| l.0).collect::<Vec<_>>(),
            vec![-3, -2, -1, 0, 1, 2]
        );
        assert!(lab.windows(2).all(|w| w[0].1 < w[1].1));
        assert!(z.get(-1).unwrap() < 0.37 && 0.37 <= z.get(0).unwrap());
    }

    #[test]
    fn free_zeros_interlace_strictly() {
        let free = JacobiParams::free();
        for n in 1..=50 {
            let zn = all_zeros(&free, n).unwrap();
            let zn1 = all_zeros(&free, n + 1).unwrap();
            for k in 0..n {
                assert!(zn1[k] < zn[k] && zn[k] < zn1[k + 1], "n={n}");
            }
        }
    }

    fn params_from(a: Vec<f64>, b: Vec<f64>) -> JacobiParams {
        JacobiParams::from_lists("random", a, b).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn symmetric_when_b_vanishes(a in prop::collection::vec(0.2f64..2.0, 1..50)) {
            let n = a.len();
            let params = params_from(a, vec![0.0; n]);
            let zs = all_zeros(&params, n).unwrap();
            for i in 0..n {
                prop_assert!((zs[i] + zs[n - 1 - i]).abs() < 1e-11);
            }
        }

        #[test]
        fn interlacing(ab in prop::collection::vec((0.2f64..2.0, -1.0f64..1.0), 2..51)) {
            let n = ab.len() - 1;
            let (a, b): (Vec<f64>, Vec<f64>) = ab.into_iter().unzip();
            let params = params_from(a, b);
            let zn = all_zeros(&params, n).unwrap();
            let zn1 = all_zeros(&params, n + 1).unwrap();
            // Strict in exact arithmetic; clustered random spectra can put
            // neighbours closer than the bisection tolerance.
            for k in 0..n {
                prop_assert!(zn1[k] <= zn[k] + 1e-12 && zn[k] <= zn1[k + 1] + 1e-12);
            }
        }
    }
}
