use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{expm_tracefree, j, Mat2C};
use crate::quadrature::gl10;
use crate::weyl::TransferFamily;

/// Coefficients `(A(x), B(x))` at a global position `x`.
pub type CoefFn = dyn Fn(f64) -> (Mat2C, Mat2C) + Send + Sync;

pub const DEFAULT_CONTINUUM_HORIZON: f64 = 1e3;
pub const DEFAULT_INTEGRATOR_TOL: f64 = 1e-10;

/// Step-count doublings tried before a smooth segment is given up on.
const MAX_REFINEMENTS: u32 = 14;

#[derive(Clone)]
pub enum SegmentKind {
    Constant { a: Mat2C, b: Mat2C },
    Smooth { id: String, coef: Arc<CoefFn> },
}

impl fmt::Debug for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { a, b } => write!(f, "Constant {{ a: {a:?}, b: {b:?} }}"),
            Self::Smooth { id, .. } => write!(f, "Smooth({id})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub length: f64,
    pub kind: SegmentKind,
}

impl Segment {
    pub fn constant(length: f64, a: Mat2C, b: Mat2C) -> Self {
        Self {
            length,
            kind: SegmentKind::Constant { a, b },
        }
    }

    pub fn smooth<F>(length: f64, id: impl Into<String>, coef: F) -> Self
    where
        F: Fn(f64) -> (Mat2C, Mat2C) + Send + Sync + 'static,
    {
        Self {
            length,
            kind: SegmentKind::Smooth {
                id: id.into(),
                coef: Arc::new(coef),
            },
        }
    }
}

/// The system `j dT/dx = (-z A(x) + B(x)) T`, `T(0) = I`, on `[0, horizon]`
/// with `A >= 0` and `A`, `B` real symmetric, described by consecutive
/// segments.
#[derive(Debug, Clone)]
pub struct HamiltonianSystem {
    id: String,
    segments: Vec<Segment>,
    starts: Vec<f64>,
    horizon: f64,
    tol: f64,
}

/// Transfer matrix with its determinant drift `|det T - 1|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub t: Mat2C,
    pub det_drift: f64,
}

fn check_coefficients(a: &Mat2C, b: &Mat2C, x: f64) -> Result<()> {
    for (name, m) in [("A", a), ("B", b)] {
        let asym = (m.e12 - m.e21).norm();
        let imag = m.entries().iter().map(|e| e.im.abs()).fold(0.0, f64::max);
        if asym > 1e-12 * m.max_abs().max(1.0) || imag > 1e-12 * m.max_abs().max(1.0) {
            return Err(Error::Domain(format!("{name}({x}) is not real symmetric")));
        }
        if !m.is_finite() {
            return Err(Error::Domain(format!("{name}({x}) is not finite")));
        }
    }
    let low = a.hermitian_eigenvalues()[0];
    if low < -1e-12 * a.max_abs().max(1.0) {
        return Err(Error::Domain(format!(
            "A({x}) is not positive semidefinite ({low:e})"
        )));
    }
    Ok(())
}

impl HamiltonianSystem {
    /// Validates coefficients on constant segments and at sampled points of
    /// smooth ones.
    pub fn new(id: impl Into<String>, segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Domain("system has no segments".into()));
        }
        let mut starts = Vec::with_capacity(segments.len());
        let mut x = 0.0;
        for seg in &segments {
            if !(seg.length > 0.0) || !seg.length.is_finite() {
                return Err(Error::Domain(format!("segment length {} at x = {x}", seg.length)));
            }
            match &seg.kind {
                SegmentKind::Constant { a, b } => check_coefficients(a, b, x)?,
                SegmentKind::Smooth { coef, .. } => {
                    for k in 0..=4 {
                        let s = x + seg.length * k as f64 / 4.0;
                        let (a, b) = coef(s);
                        check_coefficients(&a, &b, s)?;
                    }
                }
            }
            starts.push(x);
            x += seg.length;
        }
        Ok(Self {
            id: id.into(),
            segments,
            starts,
            horizon: x,
            tol: DEFAULT_INTEGRATOR_TOL,
        })
    }

    /// A single constant segment `(A, B)` on `[0, horizon]`.
    pub fn constant(id: impl Into<String>, a: Mat2C, b: Mat2C, horizon: f64) -> Result<Self> {
        Self::new(id, vec![Segment::constant(horizon, a, b)])
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// `(A(x), B(x))`; at a segment boundary the later segment wins.
    pub fn coefficients(&self, x: f64) -> (Mat2C, Mat2C) {
        let k = self.segment_index(x);
        match &self.segments[k].kind {
            SegmentKind::Constant { a, b } => (*a, *b),
            SegmentKind::Smooth { coef, .. } => coef(x),
        }
    }

    fn segment_index(&self, x: f64) -> usize {
        match self.starts.partition_point(|s| *s <= x) {
            0 => 0,
            k => k - 1,
        }
    }

    fn check_length(&self, l: f64) -> Result<()> {
        if !(l >= 0.0) || l > self.horizon * (1.0 + 1e-14) {
            return Err(Error::LengthBeyondHorizon {
                requested: l,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Visits `(segment, x0, x1)` pieces covering `[0, l]`.
    fn pieces(&self, l: f64) -> impl Iterator<Item = (&Segment, f64, f64)> {
        self.segments
            .iter()
            .zip(&self.starts)
            .map(|(s, &x0)| (s, x0, x0 + s.length))
            .take_while(move |(_, x0, _)| *x0 < l)
            .map(move |(s, x0, x1)| (s, x0, x1.min(l)))
    }

    /// `int_0^L tr A(x) dx`; its divergence is the limit-point condition.
    pub fn trace_integral(&self, l: f64) -> Result<f64> {
        self.check_length(l)?;
        let (nodes, weights) = gl10();
        let mut acc = 0.0;
        for (seg, x0, x1) in self.pieces(l) {
            match &seg.kind {
                SegmentKind::Constant { a, .. } => acc += (x1 - x0) * a.trace().re,
                SegmentKind::Smooth { coef, .. } => {
                    let panels = ((x1 - x0).ceil() as usize).max(1) * 4;
                    let h = (x1 - x0) / panels as f64;
                    for p in 0..panels {
                        let mid = x0 + (p as f64 + 0.5) * h;
                        for (t, w) in nodes.iter().zip(weights) {
                            acc += 0.5 * h * w * coef(mid + 0.5 * h * t).0.trace().re;
                        }
                    }
                }
            }
        }
        Ok(acc)
    }
}

/// `G(x, z) = j (z A - B)`, so that `dT/dx = G T`.
pub(crate) fn generator(a: &Mat2C, b: &Mat2C, z: C64) -> Mat2C {
    j() * (a.scale(z) - *b)
}

/// Classical RK4 from `x0` to `x1` in `steps` equal steps for a state of
/// `N` matrices with right-hand side `f(x, state)`.
fn rk4<const N: usize, F>(f: &F, x0: f64, x1: f64, steps: usize, init: [Mat2C; N]) -> [Mat2C; N]
where
    F: Fn(f64, &[Mat2C; N]) -> [Mat2C; N],
{
    let h = (x1 - x0) / steps as f64;
    let mut y = init;
    let axpy = |y: &[Mat2C; N], k: &[Mat2C; N], s: f64| -> [Mat2C; N] {
        std::array::from_fn(|i| y[i] + k[i].scale_re(s))
    };
    for step in 0..steps {
        let x = x0 + step as f64 * h;
        let k1 = f(x, &y);
        let k2 = f(x + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = f(x + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = f(x + h, &axpy(&y, &k3, h));
        y = std::array::from_fn(|i| {
            y[i] + (k1[i] + k2[i].scale_re(2.0) + k3[i].scale_re(2.0) + k4[i]).scale_re(h / 6.0)
        });
    }
    y
}

/// RK4 with step doubling until the Richardson estimate
/// `|y_{2N} - y_N| / 15` is below `tol * (x1 - x0)` relative to the state
/// size; returns the extrapolated value.
fn rk4_adaptive<const N: usize, F>(
    f: &F,
    x0: f64,
    x1: f64,
    init: [Mat2C; N],
    rate: f64,
    tol: f64,
) -> Result<[Mat2C; N]>
where
    F: Fn(f64, &[Mat2C; N]) -> [Mat2C; N],
{
    let len = x1 - x0;
    let mut steps = ((len * rate.max(1.0) * 4.0).ceil() as usize).max(4);
    let mut coarse = rk4(f, x0, x1, steps, init);
    for _ in 0..MAX_REFINEMENTS {
        steps *= 2;
        let fine = rk4(f, x0, x1, steps, init);
        let size = fine.iter().map(|m| m.max_abs()).fold(1.0, f64::max);
        let err = fine
            .iter()
            .zip(&coarse)
            .map(|(a, b)| a.dist(b))
            .fold(0.0, f64::max)
            / 15.0;
        if err <= tol * len.max(1e-300) * size {
            return Ok(std::array::from_fn(|i| {
                fine[i] + (fine[i] - coarse[i]).scale_re(1.0 / 15.0)
            }));
        }
        coarse = fine;
    }
    Err(Error::Integration(format!(
        "step refinement exhausted on [{x0}, {x1}]"
    )))
}

/// Rough frequency of the solution on a smooth segment, used to size the
/// initial step.
fn smooth_rate(coef: &CoefFn, x0: f64, x1: f64, z: C64) -> f64 {
    (0..=4)
        .map(|k| {
            let (a, b) = coef(x0 + (x1 - x0) * k as f64 / 4.0);
            generator(&a, &b, z).max_abs()
        })
        .fold(0.0, f64::max)
}

/// `T(L, z)`: constant segments stepped by the exact exponential, smooth
/// segments by RK4 with Richardson refinement.
pub fn integrate_transfer(sys: &HamiltonianSystem, l: f64, z: C64) -> Result<TransferResult> {
    sys.check_length(l)?;
    let mut t = Mat2C::identity();
    for (seg, x0, x1) in sys.pieces(l) {
        t = advance_segment(seg, x0, x1, z, t, sys.tol)?;
    }
    Ok(TransferResult {
        t,
        det_drift: (t.det() - 1.0).norm(),
    })
}

pub(crate) fn advance_segment(seg: &Segment, x0: f64, x1: f64, z: C64, t: Mat2C, tol: f64) -> Result<Mat2C> {
    match &seg.kind {
        SegmentKind::Constant { a, b } => Ok(expm_tracefree(&generator(a, b, z).scale_re(x1 - x0)) * t),
        SegmentKind::Smooth { coef, .. } => {
            let f = |x: f64, y: &[Mat2C; 1]| {
                let (a, b) = coef(x);
                [generator(&a, &b, z) * y[0]]
            };
            let rate = smooth_rate(coef.as_ref(), x0, x1, z);
            Ok(rk4_adaptive(&f, x0, x1, [t], rate, tol)?[0])
        }
    }
}

/// `K_L(z, w) = int_0^L T(x, w)* A(x) T(x, z) dx`.
///
/// Constant segments use panels of the 10-point Gauss rule short enough
/// that the exact exponential solution varies by at most one radian per
/// panel; smooth segments integrate `(T_z, T_w, K)` jointly with RK4.
pub fn cansys_kernel(sys: &HamiltonianSystem, l: f64, z: C64, w: C64) -> Result<Mat2C> {
    sys.check_length(l)?;
    let (nodes, weights) = gl10();
    let mut tz = Mat2C::identity();
    let mut tw = Mat2C::identity();
    let mut acc = Mat2C::zero();
    for (seg, x0, x1) in sys.pieces(l) {
        match &seg.kind {
            SegmentKind::Constant { a, b } => {
                let gz = generator(a, b, z);
                let gw = generator(a, b, w);
                let omega = (-gz.det()).sqrt().norm() + (-gw.det()).sqrt().norm();
                let len = x1 - x0;
                let panels = (len * omega).ceil().max(1.0) as usize;
                let h = len / panels as f64;
                let offsets: Vec<(Mat2C, Mat2C, f64)> = nodes
                    .iter()
                    .zip(weights)
                    .map(|(t, wt)| {
                        let s = 0.5 * h * (1.0 + t);
                        (
                            expm_tracefree(&gz.scale_re(s)),
                            expm_tracefree(&gw.scale_re(s)),
                            0.5 * h * wt,
                        )
                    })
                    .collect();
                let (ez, ew) = (expm_tracefree(&gz.scale_re(h)), expm_tracefree(&gw.scale_re(h)));
                for _ in 0..panels {
                    for (oz, ow, wt) in &offsets {
                        let vz = *oz * tz;
                        let vw = *ow * tw;
                        acc += (vw.adjoint() * *a * vz).scale_re(*wt);
                    }
                    tz = ez * tz;
                    tw = ew * tw;
                }
            }
            SegmentKind::Smooth { coef, .. } => {
                let f = |x: f64, y: &[Mat2C; 3]| {
                    let (a, b) = coef(x);
                    [
                        generator(&a, &b, z) * y[0],
                        generator(&a, &b, w) * y[1],
                        y[1].adjoint() * a * y[0],
                    ]
                };
                let rate = smooth_rate(coef.as_ref(), x0, x1, z).max(smooth_rate(coef.as_ref(), x0, x1, w));
                let out = rk4_adaptive(&f, x0, x1, [tz, tw, acc], rate, sys.tol)?;
                tz = out[0];
                tw = out[1];
                acc = out[2];
            }
        }
    }
    Ok(acc)
}

/// `(T(L,w)* j T(L,z) - j) / (conj(w) - z)`, the closed form of
/// [`cansys_kernel`] off the diagonal.
pub fn jform_kernel(sys: &HamiltonianSystem, l: f64, z: C64, w: C64) -> Result<Mat2C> {
    let delta = w.conj() - z;
    if delta.norm() < crate::oprl::DIAGONAL_THRESHOLD {
        return Err(Error::DiagonalJForm);
    }
    let tz = integrate_transfer(sys, l, z)?.t;
    let tw = integrate_transfer(sys, l, w)?.t;
    Ok((tw.adjoint() * j() * tz - j()).scale(delta.inv()))
}

impl TransferFamily for HamiltonianSystem {
    fn transfer_at(&self, length: f64, z: C64) -> Result<Mat2C> {
        Ok(integrate_transfer(self, length, z)?.t)
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn base_step(&self) -> f64 {
        self.horizon.min(1.0)
    }
}
