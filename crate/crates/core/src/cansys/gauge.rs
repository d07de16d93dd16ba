use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::system::{
    advance_segment, generator, integrate_transfer, HamiltonianSystem, Segment, SegmentKind,
};
use crate::error::{Error, Result};
use crate::mat2::{expm_tracefree, upper_triangular, Mat2C, SpherePoint};
use crate::oprl::{JacobiParams, Recurrence};
use crate::quadrature::gl10;
use crate::weyl::TransferFamily;

fn map_segments(
    sys: &HamiltonianSystem,
    id: String,
    scale_len: f64,
    f: impl Fn(&Segment) -> SegmentKind,
) -> Result<HamiltonianSystem> {
    let segs = sys
        .segments()
        .iter()
        .map(|s| Segment {
            length: s.length * scale_len,
            kind: f(s),
        })
        .collect();
    Ok(HamiltonianSystem::new(id, segs)?.with_tolerance(sys.tolerance()))
}

/// `B -> B - xi A`: the system whose spectral parameter `z` corresponds to
/// `xi + z` in the original.
pub fn spectral_shift(sys: &HamiltonianSystem, xi: f64) -> Result<HamiltonianSystem> {
    map_segments(sys, format!("{}@{xi}", sys.id()), 1.0, |s| match &s.kind {
        SegmentKind::Constant { a, b } => SegmentKind::Constant {
            a: *a,
            b: *b - a.scale_re(xi),
        },
        SegmentKind::Smooth { id, coef } => {
            let coef = coef.clone();
            SegmentKind::Smooth {
                id: format!("{id}@{xi}"),
                coef: Arc::new(move |x| {
                    let (a, b) = coef(x);
                    (a, b - a.scale_re(xi))
                }),
            }
        }
    })
}

/// `A_r(t) = A(r t)`, `B_r(t) = r B(r t)` on `[0, horizon / r]`; its kernel
/// satisfies `K_r(t; z, w) = K(r t; z/r, w/r) / r`.
pub fn rescaled(sys: &HamiltonianSystem, r: f64) -> Result<HamiltonianSystem> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::Domain(format!("rescaling factor {r} must be >= 1")));
    }
    map_segments(sys, format!("{}/r{r}", sys.id()), 1.0 / r, |s| match &s.kind {
        SegmentKind::Constant { a, b } => SegmentKind::Constant {
            a: *a,
            b: b.scale_re(r),
        },
        SegmentKind::Smooth { id, coef } => {
            let coef = coef.clone();
            SegmentKind::Smooth {
                id: format!("{id}/r{r}"),
                coef: Arc::new(move |t| {
                    let (a, b) = coef(r * t);
                    (a, b.scale_re(r))
                }),
            }
        }
    })
}

/// Conjugation by `U = [[1, a], [0, 1]]`: `A -> U^T A U`, `B -> U^T B U`.
/// Transfer matrices become `U^{-1} T U`, the m-function `m - a`, and the
/// kernel `U^T K U`, whose (1,1) entry is unchanged.
pub fn triangular_shift(sys: &HamiltonianSystem, a_shift: f64) -> Result<HamiltonianSystem> {
    let u = upper_triangular(a_shift);
    let conj = move |m: &Mat2C| u.transpose() * *m * u;
    map_segments(sys, format!("{}+u{a_shift}", sys.id()), 1.0, |s| match &s.kind {
        SegmentKind::Constant { a, b } => SegmentKind::Constant {
            a: conj(a),
            b: conj(b),
        },
        SegmentKind::Smooth { id, coef } => {
            let coef = coef.clone();
            SegmentKind::Smooth {
                id: format!("{id}+u{a_shift}"),
                coef: Arc::new(move |x| {
                    let (a, b) = coef(x);
                    (conj(&a), conj(&b))
                }),
            }
        }
    })
}

/// `U^T K U` for `U = [[1, a], [0, 1]]`.
pub fn shift_kernel(k: &Mat2C, a: f64) -> Mat2C {
    let u = upper_triangular(a);
    u.transpose() * *k * u
}

/// The m-value seen after [`triangular_shift`]: `U^{-1} m = m - a`.
pub fn shift_m(m: &SpherePoint, a: f64) -> SpherePoint {
    crate::mat2::mobius_apply(&upper_triangular(-a), m).expect("unimodular")
}

/// Cubic Hermite interpolant of `T(x, 0)` on a smooth segment.
#[derive(Clone)]
struct HermiteTable {
    x0: f64,
    h: f64,
    values: Vec<Mat2C>,
    slopes: Vec<Mat2C>,
}

impl HermiteTable {
    fn eval(&self, x: f64) -> Mat2C {
        let n = self.values.len() - 1;
        let k = (((x - self.x0) / self.h).floor().max(0.0) as usize).min(n - 1);
        let s = (x - self.x0 - k as f64 * self.h) / self.h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        self.values[k].scale_re(h00)
            + self.slopes[k].scale_re(h10 * self.h)
            + self.values[k + 1].scale_re(h01)
            + self.slopes[k + 1].scale_re(h11 * self.h)
    }
}

/// The Potapov-de Branges gauge at `xi`: with `T_xi` the solution of the
/// shifted system, `M(x, z) = T_xi(x, 0)^{-1} T_xi(x, z)` solves the
/// canonical system with `H(x) = T_xi(x, 0)^T A(x) T_xi(x, 0)`, `B = 0`.
#[derive(Clone)]
pub struct PdbGauge {
    shifted: HamiltonianSystem,
    xi: f64,
}

impl PdbGauge {
    pub fn new(sys: &HamiltonianSystem, xi: f64) -> Result<Self> {
        Ok(Self {
            shifted: spectral_shift(sys, xi)?,
            xi,
        })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn shifted(&self) -> &HamiltonianSystem {
        &self.shifted
    }

    /// `T_xi(x, 0)`, real and unimodular.
    pub fn base(&self, x: f64) -> Result<Mat2C> {
        Ok(integrate_transfer(&self.shifted, x, C64::new(0.0, 0.0))?.t)
    }

    pub fn solution(&self, x: f64, z: C64) -> Result<Mat2C> {
        let base = self.base(x)?;
        Ok(base.inverse()? * integrate_transfer(&self.shifted, x, z)?.t)
    }

    pub fn hamiltonian(&self, x: f64) -> Result<Mat2C> {
        let base = self.base(x)?;
        let (a, _) = self.shifted.coefficients(x);
        Ok(base.transpose() * a * base)
    }

    /// The gauged Hamiltonian as a system of its own (`B = 0`). Constant
    /// segments keep a closed form; smooth segments use a cubic Hermite
    /// table of `T_xi(x, 0)`.
    pub fn system(&self) -> Result<HamiltonianSystem> {
        let zero = C64::new(0.0, 0.0);
        let tol = self.shifted.tolerance();
        let mut base = Mat2C::identity();
        let mut x0 = 0.0;
        let mut segs = Vec::new();
        for seg in self.shifted.segments() {
            let x1 = x0 + seg.length;
            let kind = match &seg.kind {
                SegmentKind::Constant { a, b } if b.max_abs() == 0.0 => SegmentKind::Constant {
                    a: base.transpose() * *a * base,
                    b: Mat2C::zero(),
                },
                SegmentKind::Constant { a, b } => {
                    let (a, g, start) = (*a, generator(a, b, zero), base);
                    SegmentKind::Smooth {
                        id: format!("pdb-constant@{x0}"),
                        coef: Arc::new(move |x| {
                            let t = expm_tracefree(&g.scale_re(x - x0)) * start;
                            (t.transpose() * a * t, Mat2C::zero())
                        }),
                    }
                }
                SegmentKind::Smooth { id, coef } => {
                    let rate = (0..=8)
                        .map(|k| {
                            let (a, b) = coef(x0 + seg.length * k as f64 / 8.0);
                            generator(&a, &b, zero).max_abs()
                        })
                        .fold(1.0, f64::max);
                    let nodes = ((seg.length * rate * 100.0).ceil() as usize).max(16);
                    let h = seg.length / nodes as f64;
                    let mut values = vec![base];
                    let mut t = base;
                    for k in 0..nodes {
                        let a0 = x0 + k as f64 * h;
                        t = advance_segment(seg, a0, a0 + h, zero, t, tol)?;
                        values.push(t);
                    }
                    let slopes = values
                        .iter()
                        .enumerate()
                        .map(|(k, v)| {
                            let (a, b) = coef(x0 + k as f64 * h);
                            generator(&a, &b, zero) * *v
                        })
                        .collect();
                    let table = HermiteTable {
                        x0,
                        h,
                        values,
                        slopes,
                    };
                    let coef = coef.clone();
                    SegmentKind::Smooth {
                        id: format!("pdb-{id}"),
                        coef: Arc::new(move |x| {
                            let t = table.eval(x);
                            (t.transpose() * coef(x).0 * t, Mat2C::zero())
                        }),
                    }
                }
            };
            base = advance_segment(seg, x0, x1, zero, base, tol)?;
            segs.push(Segment {
                length: seg.length,
                kind,
            });
            x0 = x1;
        }
        Ok(HamiltonianSystem::new(format!("pdb:{}", self.shifted.id()), segs)?.with_tolerance(tol))
    }
}

impl TransferFamily for PdbGauge {
    fn transfer_at(&self, length: f64, z: C64) -> Result<Mat2C> {
        self.solution(length, z)
    }

    fn horizon(&self) -> f64 {
        self.shifted.horizon()
    }

    fn base_step(&self) -> f64 {
        self.shifted.base_step()
    }
}

/// Panel table of `a(x) = int_0^x tr H` on one smooth segment.
#[derive(Clone)]
struct TraceTable {
    xs: Vec<f64>,
    cum: Vec<f64>,
    coef: Arc<super::system::CoefFn>,
}

impl TraceTable {
    fn trace(&self, x: f64) -> f64 {
        (self.coef)(x).0.trace().re
    }

    fn integral(&self, x0: f64, x1: f64) -> f64 {
        let (nodes, weights) = gl10();
        let half = 0.5 * (x1 - x0);
        nodes
            .iter()
            .zip(weights)
            .map(|(t, w)| half * w * self.trace(x0 + half * (1.0 + t)))
            .sum()
    }

    /// `x` with `a(x) = t`, by safeguarded Newton inside the bracketing panel.
    fn inverse(&self, t: f64) -> f64 {
        let k = match self.cum.partition_point(|c| *c <= t) {
            0 => 0,
            k => (k - 1).min(self.xs.len() - 2),
        };
        let (mut lo, mut hi) = (self.xs[k], self.xs[k + 1]);
        let base = self.cum[k];
        let mut x = lo + (hi - lo) * ((t - base) / (self.cum[k + 1] - base)).clamp(0.0, 1.0);
        for _ in 0..60 {
            let f = base + self.integral(self.xs[k], x) - t;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.trace(x);
            let mut next = if d > 0.0 { x - f / d } else { 0.5 * (lo + hi) };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Reparametrization by `a(x) = int_0^x tr H~`, turning a `B = 0` system
/// into a trace-normalized one with the same m-function:
/// `H~(x) = H(a(x)) a'(x)` and `M~(x, z) = M(a(x), z)`.
#[derive(Clone)]
pub struct TraceReparam {
    /// Segment endpoints in the original variable and their images.
    x_marks: Vec<f64>,
    a_marks: Vec<f64>,
    tables: Vec<Option<TraceTable>>,
    system: HamiltonianSystem,
}

impl TraceReparam {
    pub fn new(sys: &HamiltonianSystem) -> Result<Self> {
        let mut x_marks = vec![0.0];
        let mut a_marks = vec![0.0];
        let mut tables = Vec::new();
        let mut segs = Vec::new();
        let (mut x0, mut a0) = (0.0, 0.0);
        for seg in sys.segments() {
            let x1 = x0 + seg.length;
            match &seg.kind {
                SegmentKind::Constant { a, b } => {
                    if b.max_abs() != 0.0 {
                        return Err(Error::Domain("trace reparametrization needs B = 0".into()));
                    }
                    let tr = a.trace().re;
                    if !(tr > 0.0) {
                        return Err(Error::SingularReparam(x0));
                    }
                    segs.push(Segment::constant(
                        seg.length * tr,
                        a.scale_re(1.0 / tr),
                        Mat2C::zero(),
                    ));
                    tables.push(None);
                }
                SegmentKind::Smooth { id, coef } => {
                    let panels = ((seg.length * 16.0).ceil() as usize).max(8);
                    let h = seg.length / panels as f64;
                    let mut table = TraceTable {
                        xs: (0..=panels).map(|k| x0 + k as f64 * h).collect(),
                        cum: vec![a0],
                        coef: coef.clone(),
                    };
                    for k in 0..panels {
                        if table.coef.as_ref()(table.xs[k]).1.max_abs() != 0.0 {
                            return Err(Error::Domain("trace reparametrization needs B = 0".into()));
                        }
                        let next = table.cum[k] + table.integral(table.xs[k], table.xs[k + 1]);
                        table.cum.push(next);
                    }
                    let grown = table.cum[panels] - a0;
                    if !(grown > 1e-14 * seg.length) {
                        return Err(Error::SingularReparam(x0));
                    }
                    let tt = table.clone();
                    segs.push(Segment::smooth(grown, format!("trace-{id}"), move |t| {
                        let x = tt.inverse(t);
                        let a = (tt.coef)(x).0;
                        (a.scale_re(1.0 / a.trace().re), Mat2C::zero())
                    }));
                    tables.push(Some(table));
                }
            }
            a0 += segs.last().unwrap().length;
            x0 = x1;
            x_marks.push(x1);
            a_marks.push(a0);
        }
        let system =
            HamiltonianSystem::new(format!("trace:{}", sys.id()), segs)?.with_tolerance(sys.tolerance());
        Ok(Self {
            x_marks,
            a_marks,
            tables,
            system,
        })
    }

    fn locate(marks: &[f64], v: f64) -> usize {
        match marks.partition_point(|m| *m <= v) {
            0 => 0,
            k => (k - 1).min(marks.len() - 2),
        }
    }

    /// `a(x)`.
    pub fn map(&self, x: f64) -> f64 {
        let k = Self::locate(&self.x_marks, x);
        let (x0, x1) = (self.x_marks[k], self.x_marks[k + 1]);
        let (a0, a1) = (self.a_marks[k], self.a_marks[k + 1]);
        match &self.tables[k] {
            None => a0 + (a1 - a0) * (x - x0) / (x1 - x0),
            Some(t) => {
                let p = Self::locate(&t.xs, x);
                t.cum[p] + t.integral(t.xs[p], x)
            }
        }
    }

    /// `a^{-1}(t)`.
    pub fn inverse(&self, t: f64) -> f64 {
        let k = Self::locate(&self.a_marks, t);
        let (x0, x1) = (self.x_marks[k], self.x_marks[k + 1]);
        let (a0, a1) = (self.a_marks[k], self.a_marks[k + 1]);
        match &self.tables[k] {
            None => x0 + (x1 - x0) * (t - a0) / (a1 - a0),
            Some(table) => table.inverse(t),
        }
    }

    /// The trace-normalized system on `[0, a(horizon)]`.
    pub fn system(&self) -> &HamiltonianSystem {
        &self.system
    }
}

/// Piecewise constant canonical system of a Jacobi recursion at `xi`:
/// unit segments `A_n = e_n(xi)^T e_n(xi)`, `e_n = (p_n, q_n)`, `B = 0`.
/// Its solution is `T(n, xi)^{-1} T(n, xi + z)` at integers and its kernel
/// is the interpolated matrix CD kernel at `(xi + z, xi + w)`. For a
/// finitely supported measure the last segment carries the tail vector up
/// to the requested length.
pub fn jacobi_embedding(params: &JacobiParams, xi: f64, length: usize) -> Result<HamiltonianSystem> {
    if length == 0 {
        return Err(Error::Domain("embedding needs at least one segment".into()));
    }
    let mut r = Recurrence::new(C64::new(xi, 0.0));
    let mut segs = Vec::with_capacity(length);
    let mut k = 0;
    while k < length {
        let [p, q] = r.row();
        let a = Mat2C::real(p.re * p.re, p.re * q.re, p.re * q.re, q.re * q.re);
        if params.support() == Some(k) {
            segs.push(Segment::constant((length - k) as f64, a, Mat2C::zero()));
            break;
        }
        segs.push(Segment::constant(1.0, a, Mat2C::zero()));
        k += 1;
        if k < length {
            let (an, bn) = params.coefficients(k)?;
            r.advance(an, bn)?;
        }
    }
    HamiltonianSystem::new(format!("{}@{xi}", params.id()), segs)
}
