//! Rescaled-kernel limits: sinc and ring-kernel targets, the equivalent
//! conditions on kernel diagonal, solution and kernel, clock spacing of
//! zeros and subordinacy ratios.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cansys::{cansys_kernel, integrate_transfer, sinc, HamiltonianSystem, RingObjects};
use crate::error::{Error, Result};
use crate::mat2::{chordal_distance, j, Mat2C, SpherePoint};
use crate::oprl::{
    cd_kernel, scalar_kernel, zeros_around, JacobiParams, KernelMode, KernelTable, KernelValues,
};
use crate::weyl::{boundary_limit, dyadic_schedule, BoundaryData, ModelKind, ModelM};

/// Below this `K_L(xi, xi)` (or `tau`) the rescaling is refused.
pub const SCALE_THRESHOLD: f64 = 1e-10;
/// Supplied and estimated `eta` further apart than this are flagged.
pub const ETA_MISMATCH: f64 = 0.05;
/// Errors at or below this count as decayed regardless of the ratio.
pub const DECAY_FLOOR: f64 = 1e-12;

/// Points `z` of a grid; kernels are sampled at all ordered pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub points: Vec<C64>,
}

impl Default for Grid {
    /// `-2, -1.5, ..., 2` and the corners `+-2 +- i`.
    fn default() -> Self {
        let mut points: Vec<C64> = (0..=8).map(|k| C64::new(-2.0 + 0.5 * k as f64, 0.0)).collect();
        for (re, im) in [(-2.0, -1.0), (-2.0, 1.0), (2.0, -1.0), (2.0, 1.0)] {
            points.push(C64::new(re, im));
        }
        Self { points }
    }
}

/// Grid description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type", deny_unknown_fields)]
pub enum GridSpec {
    Default,
    /// Equispaced real points from `from` to `to`, optionally with the
    /// four corners `from/to +- i`.
    Real {
        from: f64,
        to: f64,
        step: f64,
        #[serde(default)]
        corners: bool,
    },
    /// Explicit `[re, im]` points.
    Points {
        points: Vec<[f64; 2]>,
    },
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::Default
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        let points = match self {
            Self::Default => return Ok(Grid::default()),
            Self::Real {
                from,
                to,
                step,
                corners,
            } => {
                if !(step > &0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
                    return Err(Error::Domain(format!("bad real grid {from}..{to} step {step}")));
                }
                let count = ((to - from) / step + 1e-9).floor() as usize;
                let mut pts: Vec<C64> = (0..=count)
                    .map(|k| C64::new(from + step * k as f64, 0.0))
                    .collect();
                if *corners {
                    for re in [*from, *to] {
                        pts.push(C64::new(re, -1.0));
                        pts.push(C64::new(re, 1.0));
                    }
                }
                pts
            }
            Self::Points { points } => points.iter().map(|p| C64::new(p[0], p[1])).collect(),
        };
        if points.is_empty() || points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::Domain("grid must contain finite points".into()));
        }
        Ok(Grid { points })
    }
}

impl Grid {
    pub fn pairs(&self) -> Vec<(C64, C64)> {
        self.points
            .iter()
            .flat_map(|z| self.points.iter().map(move |w| (*z, *w)))
            .collect()
    }
}

/// A source of matrix CD kernels `K_L(z, w)` and solutions
/// `M_L(xi + z, xi) = T(L, xi)^{-1} T(L, xi + z)`.
pub trait KernelProvider: Send + Sync {
    fn id(&self) -> &str;

    fn matrix(&self, l: f64, z: C64, w: C64) -> Result<Mat2C>;

    /// The (1,1) entry of the matrix kernel.
    fn scalar(&self, l: f64, z: C64, w: C64) -> Result<C64> {
        Ok(self.matrix(l, z, w)?.e11)
    }

    /// `I + z j K_L(xi + z, xi)`, which equals `T(L, xi)^{-1} T(L, xi + z)`
    /// by the j-form identity.
    fn solution(&self, l: f64, xi: f64, z: C64) -> Result<Mat2C> {
        let x = C64::new(xi, 0.0);
        Ok(Mat2C::identity() + (j() * self.matrix(l, x + z, x)?).scale(z))
    }
}

impl KernelProvider for JacobiParams {
    fn id(&self) -> &str {
        JacobiParams::id(self)
    }

    fn matrix(&self, l: f64, z: C64, w: C64) -> Result<Mat2C> {
        cd_kernel(self, l, z, w, KernelMode::Sum)
    }

    fn scalar(&self, l: f64, z: C64, w: C64) -> Result<C64> {
        scalar_kernel(self, l, z, w)
    }
}

impl KernelProvider for HamiltonianSystem {
    fn id(&self) -> &str {
        HamiltonianSystem::id(self)
    }

    fn matrix(&self, l: f64, z: C64, w: C64) -> Result<Mat2C> {
        cansys_kernel(self, l, z, w)
    }

    fn solution(&self, l: f64, xi: f64, z: C64) -> Result<Mat2C> {
        let x = C64::new(xi, 0.0);
        let base = integrate_transfer(self, l, x)?.t;
        Ok(base.inverse()? * integrate_transfer(self, l, x + z)?.t)
    }
}

/// `sin(pi d)/(pi d)` with `d = conj(w) - z`, equal to 1 on the diagonal.
pub fn sinc_kernel(z: C64, w: C64) -> C64 {
    sinc((w.conj() - z) * PI)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rescaled {
    pub table: KernelTable,
    pub sup_error: f64,
}

fn diagonal(provider: &dyn KernelProvider, l: f64, xi: f64) -> Result<f64> {
    let x = C64::new(xi, 0.0);
    let k = provider.scalar(l, x, x)?.re;
    if !(k > SCALE_THRESHOLD) {
        return Err(Error::ScaleNotDeveloped(k));
    }
    Ok(k)
}

/// `K_L(xi + z/s, xi + w/s) / K_L(xi, xi)` with `s = f K_L(xi, xi)` over all
/// grid pairs, and its sup distance to the sinc kernel.
pub fn rescaled_scalar(
    provider: &dyn KernelProvider,
    xi: f64,
    f: f64,
    l: f64,
    grid: &Grid,
) -> Result<Rescaled> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::Domain(format!("density {f} must be positive")));
    }
    let k0 = diagonal(provider, l, xi)?;
    let s = f * k0;
    let x = C64::new(xi, 0.0);
    let pairs = grid.pairs();
    let values = pairs
        .par_iter()
        .map(|(z, w)| Ok(provider.scalar(l, x + z / s, x + w / s)? / k0))
        .collect::<Result<Vec<C64>>>()?;
    let sup_error = pairs
        .iter()
        .zip(&values)
        .map(|((z, w), v)| (v - sinc_kernel(*z, *w)).norm())
        .fold(0.0, f64::max);
    Ok(Rescaled {
        table: KernelTable::new(provider.id(), xi, s, l, pairs, KernelValues::Scalar(values))?,
        sup_error,
    })
}

/// `tau_xi(L) = tr K_L(xi, xi)`.
pub fn tau(provider: &dyn KernelProvider, xi: f64, l: f64) -> Result<f64> {
    let x = C64::new(xi, 0.0);
    let t = provider.matrix(l, x, x)?.trace().re;
    if !(t > SCALE_THRESHOLD) {
        return Err(Error::ScaleNotDeveloped(t));
    }
    Ok(t)
}

/// `K_L(xi + z/tau, xi + w/tau) / tau` over all grid pairs, and its
/// entrywise sup distance to the ring kernel of `eta`.
pub fn rescaled_matrix(
    provider: &dyn KernelProvider,
    xi: f64,
    l: f64,
    grid: &Grid,
    eta: SpherePoint,
) -> Result<Rescaled> {
    let t = tau(provider, xi, l)?;
    let ring = RingObjects::new(eta);
    let x = C64::new(xi, 0.0);
    let pairs = grid.pairs();
    let values = pairs
        .par_iter()
        .map(|(z, w)| Ok(provider.matrix(l, x + z / t, x + w / t)?.scale_re(1.0 / t)))
        .collect::<Result<Vec<Mat2C>>>()?;
    let sup_error = pairs
        .iter()
        .zip(&values)
        .map(|((z, w), v)| v.dist(&ring.kernel(*z, *w)))
        .fold(0.0, f64::max);
    Ok(Rescaled {
        table: KernelTable::new(provider.id(), xi, t, l, pairs, KernelValues::Matrix(values))?,
        sup_error,
    })
}

/// `m(xi + i0)`: the model's explicit value where available, otherwise a
/// converged normal boundary limit.
pub fn boundary_value(model: &ModelM, xi: f64) -> Result<BoundaryData> {
    if let Some(d) = model.boundary_data(xi) {
        return Ok(d);
    }
    // Transfer-matrix models pay for every sample with a long integration.
    let (count, tol) = match model.kind() {
        ModelKind::Transfer { .. } => (12, 1e-3),
        _ => (30, 1e-6),
    };
    let lim = boundary_limit(model, xi, &dyadic_schedule(count), tol)?;
    match (lim.eta, lim.f_mu) {
        (Some(eta), Some(f_mu)) => Ok(BoundaryData { eta, f_mu }),
        _ => Err(Error::Domain(format!(
            "boundary value of {} at {xi} did not converge (oscillation {})",
            model.id(),
            lim.oscillation
        ))),
    }
}

/// Whether a supplied `eta` is chordally further than [`ETA_MISMATCH`]
/// from the estimated one.
pub fn eta_mismatch(supplied: &SpherePoint, estimated: &SpherePoint) -> bool {
    chordal_distance(supplied, estimated) > ETA_MISMATCH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Target {
    Sinc { f: f64 },
    Ring { eta: SpherePoint },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityReport {
    pub model: String,
    pub xi: f64,
    pub indices: Vec<f64>,
    /// Rescaling factor per index (`f K_L(xi, xi)` or `tau`).
    pub scales: Vec<f64>,
    pub sup_errors: Vec<f64>,
    pub target: Target,
    pub grid: Grid,
    /// Error at the last index below the first, and below the threshold
    /// when one is given.
    pub converged: bool,
    pub threshold: Option<f64>,
    /// `error(last) / error(first)`.
    pub decay_ratio: f64,
}

impl UniversalityReport {
    fn assemble(
        model: &str,
        xi: f64,
        target: Target,
        grid: &Grid,
        runs: &[(f64, Rescaled)],
        threshold: Option<f64>,
    ) -> Self {
        let sup_errors: Vec<f64> = runs.iter().map(|r| r.1.sup_error).collect();
        let (first, last) = (sup_errors[0], sup_errors[sup_errors.len() - 1]);
        let decay_ratio = if first > 0.0 { last / first } else { 0.0 };
        let trend = runs.len() == 1 || last < first || last <= DECAY_FLOOR;
        Self {
            model: model.to_string(),
            xi,
            indices: runs.iter().map(|r| r.0).collect(),
            scales: runs.iter().map(|r| r.1.table.scale).collect(),
            sup_errors,
            target,
            grid: grid.clone(),
            converged: trend && threshold.map_or(true, |t| last < t),
            threshold,
            decay_ratio,
        }
    }
}

fn check_indices(indices: &[f64]) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::Domain("index list is empty".into()));
    }
    if indices.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(Error::Domain("indices must be positive".into()));
    }
    Ok(())
}

/// [`rescaled_scalar`] over an index list.
pub fn scalar_experiment(
    provider: &dyn KernelProvider,
    xi: f64,
    f: f64,
    indices: &[f64],
    grid: &Grid,
    threshold: Option<f64>,
) -> Result<(UniversalityReport, Vec<KernelTable>)> {
    check_indices(indices)?;
    let runs = indices
        .iter()
        .map(|&l| Ok((l, rescaled_scalar(provider, xi, f, l, grid)?)))
        .collect::<Result<Vec<_>>>()?;
    let report = UniversalityReport::assemble(provider.id(), xi, Target::Sinc { f }, grid, &runs, threshold);
    Ok((report, runs.into_iter().map(|r| r.1.table).collect()))
}

/// [`rescaled_matrix`] over an index list.
pub fn matrix_experiment(
    provider: &dyn KernelProvider,
    xi: f64,
    eta: SpherePoint,
    indices: &[f64],
    grid: &Grid,
    threshold: Option<f64>,
) -> Result<(UniversalityReport, Vec<KernelTable>)> {
    check_indices(indices)?;
    let runs = indices
        .iter()
        .map(|&l| Ok((l, rescaled_matrix(provider, xi, l, grid, eta)?)))
        .collect::<Result<Vec<_>>>()?;
    let report =
        UniversalityReport::assemble(provider.id(), xi, Target::Ring { eta }, grid, &runs, threshold);
    Ok((report, runs.into_iter().map(|r| r.1.table).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceEntry {
    pub index: f64,
    pub tau: f64,
    /// `|K_L(xi, xi)/tau - H_eta|`.
    pub hamiltonian: f64,
    /// `sup_z |M_L(xi + z/tau, xi) - M_eta(z)|`.
    pub solution: f64,
    /// `sup_{z,w} |K_L(xi + z/tau, xi + w/tau)/tau - K_eta(z, w)|`.
    pub kernel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub model: String,
    pub xi: f64,
    pub eta: SpherePoint,
    /// `eta` real or infinite: the limit Hamiltonian is singular.
    pub singular_eta: bool,
    pub entries: Vec<EquivalenceEntry>,
    /// Each distance at the last index is below a third of the first.
    pub decay_together: bool,
}

impl EquivalenceReport {
    pub fn max_distance(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.hamiltonian.max(e.solution).max(e.kernel))
            .fold(0.0, f64::max)
    }
}

fn decayed(first: f64, last: f64) -> bool {
    last < first / 3.0 || last <= DECAY_FLOOR
}

/// The three equivalent conditions (diagonal, solution, kernel) measured
/// against the ring objects of `eta` at each index.
pub fn equivalence_report(
    provider: &dyn KernelProvider,
    xi: f64,
    eta: SpherePoint,
    indices: &[f64],
    grid: &Grid,
) -> Result<EquivalenceReport> {
    check_indices(indices)?;
    let ring = RingObjects::new(eta);
    let x = C64::new(xi, 0.0);
    let entries = indices
        .iter()
        .map(|&l| {
            let t = tau(provider, xi, l)?;
            let hamiltonian = provider
                .matrix(l, x, x)?
                .scale_re(1.0 / t)
                .dist(&ring.hamiltonian);
            let solution = grid
                .points
                .par_iter()
                .map(|z| Ok(provider.solution(l, xi, z / t)?.dist(&ring.solution(*z))))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let kernel = rescaled_matrix(provider, xi, l, grid, eta)?.sup_error;
            Ok(EquivalenceEntry {
                index: l,
                tau: t,
                hamiltonian,
                solution,
                kernel,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (first, last) = (&entries[0], &entries[entries.len() - 1]);
    let decay_together = entries.len() > 1
        && decayed(first.hamiltonian, last.hamiltonian)
        && decayed(first.solution, last.solution)
        && decayed(first.kernel, last.kernel);
    Ok(EquivalenceReport {
        model: provider.id().to_string(),
        xi,
        eta,
        singular_eta: ring.h == 0.0,
        entries,
        decay_together,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockSpacing {
    pub xi: f64,
    pub n: usize,
    /// `K_n(xi, xi)`.
    pub diagonal: f64,
    /// `(j, xi_j)` for `j` in `-j_range..=j_range + 1`.
    pub zeros: Vec<(i64, f64)>,
    /// `f K_n(xi, xi) (xi_{j+1} - xi_j)` for `j` in `-j_range..=j_range`.
    pub gaps: Vec<(i64, f64)>,
}

impl ClockSpacing {
    pub fn max_deviation(&self) -> f64 {
        self.gaps.iter().map(|g| (g.1 - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Zeros of `p_n` around `xi` (labeled so that `xi_{-1} < xi <= xi_0`) and
/// their gaps in units of `1/(f K_n(xi, xi))`.
pub fn clock_spacing(
    params: &JacobiParams,
    xi: f64,
    n: usize,
    j_range: usize,
    f: f64,
) -> Result<ClockSpacing> {
    if !(f > 0.0) {
        return Err(Error::Domain(format!("density {f} must be positive")));
    }
    let near = zeros_around(params, n, xi, j_range, j_range + 2)?;
    if near.truncated {
        return Err(Error::InsufficientZeros(format!(
            "p_{n} has fewer than {} zeros on one side of {xi}",
            j_range + 2
        )));
    }
    let x = C64::new(xi, 0.0);
    let diagonal = scalar_kernel(params, n as f64, x, x)?.re;
    let r = j_range as i64;
    let zeros: Vec<(i64, f64)> = (-r..=r + 1).map(|j| (j, near.get(j).expect("present"))).collect();
    let gaps = zeros
        .windows(2)
        .map(|p| (p[0].0, f * diagonal * (p[1].1 - p[0].1)))
        .collect();
    Ok(ClockSpacing {
        xi,
        n,
        diagonal,
        zeros,
        gaps,
    })
}

/// `sum_{j<n} p_j(xi)^2 / sum_{j<n} (p_j(xi)^2 + q_j(xi)^2)`. Both the
/// solutions and the partial sums are renormalized together, so growing
/// solutions do not overflow.
pub fn subordinacy_ratio(params: &JacobiParams, xi: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("subordinacy ratio needs n >= 1".into()));
    }
    let (mut p_prev, mut p, mut q_prev, mut q, mut a) = (0.0, 1.0, -1.0, 0.0, 1.0);
    let (mut sp, mut sq) = (0.0, 0.0);
    let stop = params.support().map_or(n, |s| n.min(s));
    for k in 0..stop {
        sp += p * p;
        sq += q * q;
        if k + 1 == stop {
            break;
        }
        let (an, bn) = params.coefficients(k + 1)?;
        let pn = ((xi - bn) * p - a * p_prev) / an;
        let qn = ((xi - bn) * q - a * q_prev) / an;
        (p_prev, p, q_prev, q, a) = (p, pn, q, qn, an);
        let size = p.abs().max(q.abs());
        if size > 1e100 {
            let s = 1.0 / size;
            p *= s;
            p_prev *= s;
            q *= s;
            q_prev *= s;
            sp *= s * s;
            sq *= s * s;
        }
    }
    Ok(sp / (sp + sq))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub n: usize,
    pub diagonal: f64,
    pub ratio: f64,
}

/// `K_n(xi, xi)` and `K_n(xi, xi)/n`, recorded without any assertion.
pub fn scale_experiment(params: &JacobiParams, xi: f64, ns: &[usize]) -> Result<Vec<ScaleRow>> {
    let x = C64::new(xi, 0.0);
    ns.iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::Domain("n must be positive".into()));
            }
            let diagonal = scalar_kernel(params, n as f64, x, x)?.re;
            Ok(ScaleRow {
                n,
                diagonal,
                ratio: diagonal / n as f64,
            })
        })
        .collect()
}
