use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type CoeffFn = dyn Fn(usize) -> (f64, f64) + Send + Sync;

/// Jacobi parameters `(a_n, b_n)`, `n >= 1`, served by a deterministic
/// generator with random access up to `horizon`.
///
/// A measure with finitely many support points `N` is represented with
/// `support = Some(N)`: the generator then provides `a_1..a_{N-1} > 0`,
/// `b_1..b_N`, and `a_N = 0` marks the end of the recursion.
#[derive(Clone)]
pub struct JacobiParams {
    id: String,
    horizon: usize,
    coeff: Arc<CoeffFn>,
    support: Option<usize>,
}

impl fmt::Debug for JacobiParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JacobiParams")
            .field("id", &self.id)
            .field("horizon", &self.horizon)
            .field("support", &self.support)
            .finish()
    }
}

pub const DEFAULT_HORIZON: usize = 1_000_000;

impl JacobiParams {
    pub fn from_fn<F>(id: impl Into<String>, horizon: usize, f: F) -> Self
    where
        F: Fn(usize) -> (f64, f64) + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            horizon,
            coeff: Arc::new(f),
            support: None,
        }
    }

    /// `a_n = 1`, `b_n = 0`: the semicircle law on `[-2, 2]`.
    pub fn free() -> Self {
        Self::from_fn("free-jacobi", DEFAULT_HORIZON, |_| (1.0, 0.0))
    }

    /// Arcsine law `dx / (pi sqrt(1 - x^2))` on `[-1, 1]`.
    pub fn chebyshev() -> Self {
        Self::from_fn("chebyshev", DEFAULT_HORIZON, |n| {
            if n == 1 {
                (std::f64::consts::FRAC_1_SQRT_2, 0.0)
            } else {
                (0.5, 0.0)
            }
        })
    }

    /// Explicit finite lists; `a[k]`, `b[k]` hold `a_{k+1}`, `b_{k+1}`.
    pub fn from_lists(id: impl Into<String>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Domain(format!(
                "coefficient lists differ in length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        if let Some((k, &v)) = a.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveCoefficient {
                index: k + 1,
                value: v,
            });
        }
        let horizon = a.len();
        Ok(Self::from_fn(id, horizon, move |n| (a[n - 1], b[n - 1])))
    }

    /// Recurrence coefficients of the discrete measure `sum w_k delta_{x_k}`
    /// (weights normalized to total mass 1), by Lanczos iteration on
    /// `diag(x)` with full reorthogonalization.
    pub fn from_discrete(id: impl Into<String>, points: &[(f64, f64)]) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for &(x, w) in points {
            if !(w > 0.0) || !x.is_finite() || !w.is_finite() {
                return Err(Error::Domain(format!("bad point mass {w} at {x}")));
            }
            match pts.iter_mut().find(|(y, _)| *y == x) {
                Some(slot) => slot.1 += w,
                None => pts.push((x, w)),
            }
        }
        if pts.is_empty() {
            return Err(Error::Domain("empty measure".into()));
        }
        let total: f64 = pts.iter().map(|p| p.1).sum();
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let n = xs.len();

        let mut basis: Vec<Vec<f64>> = vec![pts.iter().map(|p| (p.1 / total).sqrt()).collect()];
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for k in 0..n {
            let v = &basis[k];
            let bk: f64 = v.iter().zip(&xs).map(|(vi, xi)| vi * vi * xi).sum();
            b.push(bk);
            if k + 1 == n {
                a.push(0.0);
                break;
            }
            let mut r: Vec<f64> = v.iter().zip(&xs).map(|(vi, xi)| xi * vi).collect();
            for _ in 0..2 {
                for u in &basis {
                    let c: f64 = u.iter().zip(&r).map(|(ui, ri)| ui * ri).sum();
                    r.iter_mut().zip(u).for_each(|(ri, ui)| *ri -= c * ui);
                }
            }
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            a.push(norm);
            basis.push(r.iter().map(|x| x / norm).collect());
        }
        Ok(Self {
            id: id.into(),
            horizon: n,
            coeff: Arc::new(move |k| (a[k - 1], b[k - 1])),
            support: Some(n),
        })
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        if self.support.is_none() {
            self.horizon = horizon;
        }
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of support points for finitely supported measures.
    pub fn support(&self) -> Option<usize> {
        self.support
    }

    /// `(a_n, b_n)` for `1 <= n <= horizon`. At the terminal index of a
    /// finitely supported measure `a_n = 0` is returned.
    pub fn coefficients(&self, n: usize) -> Result<(f64, f64)> {
        if n == 0 || n > self.horizon {
            return Err(Error::HorizonExceeded {
                requested: n,
                horizon: self.horizon,
            });
        }
        let (a, b) = (self.coeff)(n);
        if self.support == Some(n) {
            return Ok((0.0, b));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::NonPositiveCoefficient { index: n, value: a });
        }
        Ok((a, b))
    }

    /// First `n` coefficient pairs as `(a, b)` vectors.
    pub fn take(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for k in 1..=n {
            let (ak, bk) = self.coefficients(k)?;
            a.push(ak);
            b.push(bk);
        }
        Ok((a, b))
    }
}
