use std::sync::Arc;

use cdkernel::cansys::{
    schrodinger_free_model, HamiltonianSystem, Potential, RingObjects, SchrodingerSystem, Segment,
    DEFAULT_CONTINUUM_HORIZON,
};
use cdkernel::oprl::JacobiParams;
use cdkernel::opuc::{CaratheodoryModel, OpucFamily, VerblunskyParams, DEFAULT_OPUC_HORIZON};
use cdkernel::weyl::ModelM;
use cdkernel::{Mat2C, SpherePoint, C64};

use crate::config::Params;
use crate::error::CliError;

/// Certification tolerance for m-functions of transfer-matrix models.
const TRANSFER_M_TOL: f64 = 1e-8;

pub enum Model {
    /// Jacobi parameters with their m-function.
    Jacobi { params: JacobiParams, m: ModelM },
    /// An m-function without a known recurrence.
    MOnly(ModelM),
    Canonical {
        system: HamiltonianSystem,
        /// Closed-form or precomputed m; otherwise nested Weyl disks of `system`.
        m: Option<ModelM>,
    },
    Opuc {
        alphas: VerblunskyParams,
        caratheodory: CaratheodoryModel,
    },
}

impl Model {
    pub fn id(&self) -> String {
        match self {
            Self::Jacobi { params, .. } => params.id().to_string(),
            Self::MOnly(m) => m.id().to_string(),
            Self::Canonical { system, .. } => system.id().to_string(),
            Self::Opuc { alphas, .. } => alphas.id().to_string(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Jacobi { .. } => "jacobi",
            Self::MOnly(_) => "m-function",
            Self::Canonical { .. } => "canonical",
            Self::Opuc { .. } => "opuc",
        }
    }

    /// The Weyl m-function; for OPUC models `m(z) = i F(e^{iz})`.
    pub fn m_function(&self) -> Result<ModelM, CliError> {
        Ok(match self {
            Self::Jacobi { m, .. } | Self::MOnly(m) => m.clone(),
            Self::Canonical { m: Some(m), .. } => m.clone(),
            Self::Canonical { system, m: None } => {
                ModelM::from_transfer(system.id(), Arc::new(system.clone()), TRANSFER_M_TOL)?
            }
            Self::Opuc { alphas, .. } => ModelM::from_transfer(
                alphas.id(),
                Arc::new(OpucFamily::new(alphas.clone())),
                TRANSFER_M_TOL,
            )?,
        })
    }
}

pub const REGISTRY: &[(&str, &str)] = &[
    ("free-jacobi", "a_n = 1, b_n = 0; semicircle law on [-2, 2]"),
    ("chebyshev", "arcsine law on [-1, 1]"),
    (
        "discrete:<x>@<w>,...",
        "finitely many point masses, e.g. discrete:0@0.5,1@0.5",
    ),
    ("log-periodic", "m(z) = i exp(c sin log(-iz)); m-function only"),
    ("schrodinger-free", "-u'' on the half-line, beta = 0"),
    ("schrodinger-cos", "-u'' + cos(x) u, beta from params.beta"),
    ("rotating", "smooth periodic canonical system with rotating A"),
    (
        "ring:<eta>",
        "constant canonical system with limit point eta (complex or inf)",
    ),
    (
        "hamiltonian",
        "piecewise-constant canonical system from params.segments",
    ),
    ("opuc-free", "alpha_n = 0; normalized arc length"),
    ("opuc-constant:<alpha>", "alpha_n = alpha for all n"),
    ("opuc-list:<a0>,<a1>,...", "listed alphas, then zeros"),
];

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `a`, `bi`, `a+bi` or `a-bi` (spaces ignored; `j` accepted for `i`).
pub fn parse_complex(text: &str) -> Result<C64, CliError> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || bad(format!("cannot parse complex number '{text}'"));
    let num = |t: &str| -> Result<f64, CliError> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| err()),
        }
    };
    if s.is_empty() {
        return Err(err());
    }
    let z = match s.strip_suffix('i').or_else(|| s.strip_suffix('j')) {
        None => C64::new(s.parse().map_err(|_| err())?, 0.0),
        Some(body) => {
            // Split at the last sign that is not a leading or exponent sign.
            let bytes = body.as_bytes();
            let split = (1..bytes.len())
                .rev()
                .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
            match split {
                Some(k) => C64::new(body[..k].parse().map_err(|_| err())?, num(&body[k..])?),
                None => C64::new(0.0, num(body)?),
            }
        }
    };
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(err())
    }
}

fn parse_discrete(list: &str) -> Result<Vec<(f64, f64)>, CliError> {
    list.split(',')
        .map(|item| {
            let (x, w) = item
                .split_once('@')
                .ok_or_else(|| bad(format!("discrete point '{item}' must be <x>@<weight>")))?;
            let x: f64 = x.trim().parse().map_err(|_| bad(format!("bad location '{x}'")))?;
            let w: f64 = w.trim().parse().map_err(|_| bad(format!("bad weight '{w}'")))?;
            if !x.is_finite() || !(w > 0.0) || !w.is_finite() {
                return Err(bad(format!(
                    "discrete point '{item}' needs finite x and weight > 0"
                )));
            }
            Ok((x, w))
        })
        .collect()
}

fn real_symmetric(m: &[[f64; 2]; 2], what: &str) -> Result<Mat2C, CliError> {
    if m.iter().flatten().any(|x| !x.is_finite()) || m[0][1] != m[1][0] {
        return Err(bad(format!("{what} must be finite and symmetric")));
    }
    Ok(Mat2C::real(m[0][0], m[0][1], m[1][0], m[1][1]))
}

fn rotating(horizon: f64) -> Result<HamiltonianSystem, CliError> {
    let count = horizon.ceil().max(1.0) as usize;
    let segments = (0..count)
        .map(|k| {
            let len = (horizon - k as f64).min(1.0);
            Segment::smooth(len, "rotating", move |x: f64| {
                let (s, c) = x.sin_cos();
                let a = Mat2C::real(c * c + 0.1, c * s, c * s, s * s + 0.1);
                (a, Mat2C::real(c, 0.0, 0.0, 0.0))
            })
        })
        .collect();
    Ok(HamiltonianSystem::new("rotating", segments)?)
}

/// Resolves a model id; `params` supplies horizons and segment lists.
pub fn resolve(id: &str, params: &Params) -> Result<Model, CliError> {
    let horizon = params.horizon;
    if let Some(h) = horizon {
        if !(h > 0.0) || !h.is_finite() {
            return Err(bad(format!("horizon must be positive, got {h}")));
        }
    }
    let continuum = horizon.unwrap_or(DEFAULT_CONTINUUM_HORIZON);
    let jacobi = |params: JacobiParams, m: ModelM| {
        let params = match horizon {
            Some(h) => params.with_horizon(h as usize),
            None => params,
        };
        Model::Jacobi { params, m }
    };
    let opuc = |alphas: VerblunskyParams, caratheodory| {
        let alphas = alphas.with_horizon(horizon.map_or(DEFAULT_OPUC_HORIZON, |h| h as usize));
        Model::Opuc { alphas, caratheodory }
    };
    let (head, arg) = match id.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (id, None),
    };
    let beta = params.beta.unwrap_or(0.0);
    let model = match (head, arg) {
        ("free-jacobi", None) => jacobi(JacobiParams::free(), ModelM::free_jacobi()),
        ("chebyshev", None) => jacobi(JacobiParams::chebyshev(), ModelM::chebyshev()),
        ("discrete", Some(list)) => {
            let points = parse_discrete(list)?;
            let p = JacobiParams::from_discrete(id, &points).map_err(|e| bad(e.to_string()))?;
            let m = ModelM::discrete(id, points).map_err(|e| bad(e.to_string()))?;
            jacobi(p, m)
        }
        ("log-periodic", None) => Model::MOnly(ModelM::log_periodic()),
        ("schrodinger-free", None) => {
            let s = SchrodingerSystem::new(&Potential::Constant(0.0), beta, continuum)?;
            let m = (beta == 0.0).then(schrodinger_free_model);
            Model::Canonical {
                system: s.system().clone(),
                m,
            }
        }
        ("schrodinger-cos", None) => {
            let s = SchrodingerSystem::new(&Potential::smooth("cos", f64::cos), beta, continuum)?;
            Model::Canonical {
                system: s.system().clone(),
                m: None,
            }
        }
        ("rotating", None) => Model::Canonical {
            system: rotating(continuum)?,
            m: None,
        },
        ("ring", Some(eta)) => {
            let eta = match eta.trim() {
                "inf" | "infinity" => SpherePoint::infinity(),
                e => SpherePoint::finite(parse_complex(e)?),
            };
            if !eta.in_closed_upper(1e-12) {
                return Err(bad(format!(
                    "ring eta must lie in the closed upper half-plane: {id}"
                )));
            }
            Model::Canonical {
                system: RingObjects::new(eta).system(continuum)?,
                m: None,
            }
        }
        ("hamiltonian", None) => {
            let specs = params
                .segments
                .as_ref()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| bad("model hamiltonian needs params.segments"))?;
            let segments = specs
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let a = real_symmetric(&s.a, &format!("segment {k} a"))?;
                    let b = real_symmetric(&s.b, &format!("segment {k} b"))?;
                    Ok(Segment::constant(s.length, a, b))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let system = HamiltonianSystem::new("hamiltonian", segments).map_err(|e| bad(e.to_string()))?;
            Model::Canonical { system, m: None }
        }
        ("opuc-free", None) => opuc(VerblunskyParams::free(), CaratheodoryModel::Lebesgue),
        ("opuc-constant", Some(a)) => {
            let alphas = VerblunskyParams::constant(parse_complex(a)?).map_err(|e| bad(e.to_string()))?;
            let f = CaratheodoryModel::Verblunsky {
                alphas: alphas.clone(),
                tol: TRANSFER_M_TOL,
            };
            opuc(alphas, f)
        }
        ("opuc-list", Some(list)) => {
            let values = list
                .split(',')
                .map(parse_complex)
                .collect::<Result<Vec<_>, _>>()?;
            let alphas = VerblunskyParams::from_list(id, values).map_err(|e| bad(e.to_string()))?;
            let f = CaratheodoryModel::Verblunsky {
                alphas: alphas.clone(),
                tol: TRANSFER_M_TOL,
            };
            opuc(alphas, f)
        }
        _ => return Err(bad(format!("unknown model '{id}' (see --list-models)"))),
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        let cases = [
            ("0.5", C64::new(0.5, 0.0)),
            ("i", C64::new(0.0, 1.0)),
            ("-i", C64::new(0.0, -1.0)),
            ("0.3i", C64::new(0.0, 0.3)),
            ("0.3-0.2i", C64::new(0.3, -0.2)),
            ("-1e-3+2e-1i", C64::new(-1e-3, 0.2)),
            ("1 + i", C64::new(1.0, 1.0)),
        ];
        for (s, z) in cases {
            assert_eq!(parse_complex(s).unwrap(), z, "{s}");
        }
        for s in ["", "abc", "1+", "i1", "nan"] {
            assert!(parse_complex(s).is_err(), "{s}");
        }
    }

    #[test]
    fn registry_resolves() {
        let p = Params::default();
        for id in [
            "free-jacobi",
            "chebyshev",
            "discrete:0@0.5,1@0.5",
            "log-periodic",
            "schrodinger-free",
            "schrodinger-cos",
            "rotating",
            "ring:i",
            "ring:inf",
            "opuc-free",
            "opuc-constant:0.3+0.1i",
            "opuc-list:0.5,-0.2i",
        ] {
            let m = resolve(id, &p).unwrap_or_else(|e| panic!("{id}: {e}"));
            assert!(!m.id().is_empty());
        }
        for id in [
            "nope",
            "discrete:",
            "discrete:1@-1",
            "ring:-i",
            "opuc-constant:1.5",
            "hamiltonian",
        ] {
            assert!(matches!(resolve(id, &p), Err(CliError::Config(_))), "{id}");
        }
    }
}
