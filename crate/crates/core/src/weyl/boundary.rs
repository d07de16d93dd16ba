use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::models::ModelM;
use crate::error::{Error, Result};
use crate::mat2::{chordal_distance, SpherePoint};

/// Differences below this count as converged regardless of their ratio.
const DIFF_FLOOR: f64 = 1e-13;
/// Largest allowed ratio between successive differences.
const DECAY_RATIO: f64 = 0.9;
/// Number of trailing schedule points checked for geometric decay.
const DECAY_WINDOW: usize = 5;
/// Chordal tolerance for flagging a real or infinite boundary value.
const EDGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    /// `eta` in the open upper half-plane.
    Interior,
    /// Boundary value real; `f_mu = 0`.
    Real,
    /// Boundary value infinite.
    Infinite,
}

/// Outcome of approaching `xi` along one ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLimit {
    pub xi: f64,
    /// Angle of the ray, `pi/2` for the normal approach.
    pub angle: f64,
    pub converged: bool,
    /// Limit value; only set when converged.
    pub eta: Option<SpherePoint>,
    pub kind: Option<BoundaryKind>,
    /// `Im eta / pi`; `0` for real and infinite for infinite limits.
    pub f_mu: Option<f64>,
    /// Chordal distances between successive samples.
    pub differences: Vec<f64>,
    /// Largest chordal distance between two samples in the final half of
    /// the schedule.
    pub oscillation: f64,
    /// Last sample, converged or not.
    pub last: SpherePoint,
}

/// `y_k = 2^{-k}`, `k = 1..=count`.
pub fn dyadic_schedule(count: usize) -> Vec<f64> {
    (1..=count).map(|k| 0.5f64.powi(k as i32)).collect()
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.len() < 4 {
        return Err(Error::Domain("schedule needs at least 4 points".into()));
    }
    if schedule.iter().any(|y| !(*y > 0.0)) || schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Domain(
            "schedule must be positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Evaluates `m(xi + i y)` along the schedule and decides whether the values
/// settle in the chordal metric.
pub fn boundary_limit(model: &ModelM, xi: f64, schedule: &[f64], tol: f64) -> Result<BoundaryLimit> {
    ray_limit(model, xi, schedule, tol, std::f64::consts::FRAC_PI_2)
}

/// Same as [`boundary_limit`] along `xi + y e^{i angle}`, `0 < angle < pi`.
pub fn ray_limit(model: &ModelM, xi: f64, schedule: &[f64], tol: f64, angle: f64) -> Result<BoundaryLimit> {
    check_schedule(schedule)?;
    if !(angle > 0.0 && angle < std::f64::consts::PI) {
        return Err(Error::Domain(format!("ray angle {angle} not in (0, pi)")));
    }
    let dir = C64::from_polar(1.0, angle);
    let values = schedule
        .iter()
        .map(|&y| Ok(SpherePoint::finite(model.eval(C64::new(xi, 0.0) + dir * y)?)))
        .collect::<Result<Vec<_>>>()?;
    let differences: Vec<f64> = values
        .windows(2)
        .map(|w| chordal_distance(&w[0], &w[1]))
        .collect();

    let tail = &differences[differences.len().saturating_sub(DECAY_WINDOW - 1)..];
    let decaying = tail
        .windows(2)
        .all(|w| w[1] < DIFF_FLOOR || w[1] <= DECAY_RATIO * w[0]);
    let converged = decaying && *differences.last().unwrap() < tol;

    let half = &values[values.len() / 2..];
    let mut oscillation: f64 = 0.0;
    for (i, p) in half.iter().enumerate() {
        for q in &half[i + 1..] {
            oscillation = oscillation.max(chordal_distance(p, q));
        }
    }

    let last = *values.last().unwrap();
    let (eta, kind, f_mu) = if converged {
        let kind = classify(&last);
        let f = match kind {
            BoundaryKind::Interior => last.to_complex().unwrap().im / std::f64::consts::PI,
            BoundaryKind::Real => 0.0,
            BoundaryKind::Infinite => f64::INFINITY,
        };
        (Some(last), Some(kind), Some(f))
    } else {
        (None, None, None)
    };
    Ok(BoundaryLimit {
        xi,
        angle,
        converged,
        eta,
        kind,
        f_mu,
        differences,
        oscillation,
        last,
    })
}

fn classify(p: &SpherePoint) -> BoundaryKind {
    if chordal_distance(p, &SpherePoint::infinity()) < EDGE_TOL {
        return BoundaryKind::Infinite;
    }
    let w = p.to_complex().unwrap();
    // Chordal distance between w and its mirror image.
    if 4.0 * w.im / (1.0 + w.norm_sqr()) < EDGE_TOL {
        BoundaryKind::Real
    } else {
        BoundaryKind::Interior
    }
}

/// Normal and two oblique approaches to `xi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorProbe {
    pub normal: BoundaryLimit,
    pub right: BoundaryLimit,
    pub left: BoundaryLimit,
    /// All three converged to limits within `tol` of each other.
    pub agree: bool,
}

/// Approaches `xi` along the normal and along the rays of angle `alpha`
/// and `pi - alpha`.
pub fn sector_probe(model: &ModelM, xi: f64, schedule: &[f64], tol: f64, alpha: f64) -> Result<SectorProbe> {
    let normal = boundary_limit(model, xi, schedule, tol)?;
    let right = ray_limit(model, xi, schedule, tol, alpha)?;
    let left = ray_limit(model, xi, schedule, tol, std::f64::consts::PI - alpha)?;
    let agree = match (normal.eta, right.eta, left.eta) {
        (Some(a), Some(b), Some(c)) => chordal_distance(&a, &b).max(chordal_distance(&a, &c)) < 10.0 * tol,
        _ => false,
    };
    Ok(SectorProbe {
        normal,
        right,
        left,
        agree,
    })
}

/// `mu({xi}) = lim eps Im m(xi + i eps)`, from `eps = 2^{-k}`, `k <= 30`,
/// with two levels of Richardson extrapolation.
pub fn point_mass_mass(model: &ModelM, xi: f64) -> Result<f64> {
    const LEVELS: i32 = 30;
    let samples = (LEVELS - 2..=LEVELS)
        .map(|k| {
            let eps = 0.5f64.powi(k);
            Ok(eps * model.eval(C64::new(xi, eps))?.im)
        })
        .collect::<Result<Vec<f64>>>()?;
    // Successive halvings of eps: remove the linear, then the quadratic term.
    let r1 = [2.0 * samples[1] - samples[0], 2.0 * samples[2] - samples[1]];
    Ok((4.0 * r1[1] - r1[0]) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_interior_limit() {
        let r = boundary_limit(&ModelM::free_jacobi(), 0.0, &dyadic_schedule(40), 1e-8).unwrap();
        assert!(r.converged);
        assert_eq!(r.kind, Some(BoundaryKind::Interior));
        let eta = r.eta.unwrap().to_complex().unwrap();
        assert!((eta - C64::new(0.0, 1.0)).norm() < 1e-10);
        assert!((r.f_mu.unwrap() - 1.0 / PI).abs() < 1e-10);
    }

    #[test]
    fn free_outside_spectrum_is_real() {
        let r = boundary_limit(&ModelM::free_jacobi(), 3.0, &dyadic_schedule(40), 1e-8).unwrap();
        assert!(r.converged);
        assert_eq!(r.kind, Some(BoundaryKind::Real));
        assert_eq!(r.f_mu, Some(0.0));
        let eta = r.eta.unwrap().to_complex().unwrap();
        assert!((eta.re - (-3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn point_mass_is_infinite() {
        let m = ModelM::discrete("d", vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let r = boundary_limit(&m, 0.0, &dyadic_schedule(40), 1e-8).unwrap();
        assert!(r.converged);
        assert_eq!(r.kind, Some(BoundaryKind::Infinite));
    }

    #[test]
    fn log_periodic_does_not_converge() {
        let r = boundary_limit(&ModelM::log_periodic(), 0.0, &dyadic_schedule(40), 1e-8).unwrap();
        assert!(!r.converged);
        assert!(r.eta.is_none() && r.f_mu.is_none());
        assert!(r.oscillation > 0.1, "{}", r.oscillation);
    }

    #[test]
    fn schedule_validation() {
        let m = ModelM::free_jacobi();
        assert!(boundary_limit(&m, 0.0, &[0.5, 0.25, 0.125], 1e-8).is_err());
        assert!(boundary_limit(&m, 0.0, &[0.5, 0.25, 0.3, 0.1], 1e-8).is_err());
    }

    #[test]
    fn sector_limits_agree_in_bulk() {
        let p = sector_probe(&ModelM::free_jacobi(), 0.5, &dyadic_schedule(40), 1e-8, PI / 4.0).unwrap();
        assert!(p.agree);
        let p = sector_probe(&ModelM::log_periodic(), 0.0, &dyadic_schedule(40), 1e-8, PI / 4.0).unwrap();
        assert!(!p.agree);
    }

    #[test]
    fn point_masses() {
        assert!(point_mass_mass(&ModelM::free_jacobi(), 0.0).unwrap().abs() < 1e-6);
        let d = ModelM::discrete("d", vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert!((point_mass_mass(&d, 0.0).unwrap() - 0.5).abs() < 1e-6);
        let mix = ModelM::mixture(
            "mix",
            vec![
                (0.5, ModelM::discrete("p", vec![(2.5, 1.0)]).unwrap()),
                (0.5, ModelM::free_jacobi()),
            ],
        )
        .unwrap();
        assert!((point_mass_mass(&mix, 2.5).unwrap() - 0.5).abs() < 1e-6);
        assert!(point_mass_mass(&mix, 0.0).unwrap().abs() < 1e-6);
    }
}
