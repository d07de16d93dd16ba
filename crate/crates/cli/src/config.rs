use cdkernel::oprl::KernelMode;
use cdkernel::universality::GridSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Kernel,
    UniversalityScalar,
    UniversalityMatrix,
    Equivalence,
    Clock,
    Subordinacy,
    Opuc,
    CansysCheck,
    Mfun,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Kernel => "kernel",
            Self::UniversalityScalar => "universality-scalar",
            Self::UniversalityMatrix => "universality-matrix",
            Self::Equivalence => "equivalence",
            Self::Clock => "clock",
            Self::Subordinacy => "subordinacy",
            Self::Opuc => "opuc",
            Self::CansysCheck => "cansys-check",
            Self::Mfun => "mfun",
        }
    }

    fn needs_indices(self) -> bool {
        !matches!(self, Self::Mfun)
    }
}

/// A single point or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XiSpec {
    One(f64),
    Many(Vec<f64>),
}

impl Default for XiSpec {
    fn default() -> Self {
        Self::One(0.0)
    }
}

impl XiSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::One(x) => vec![*x],
            Self::Many(v) => v.clone(),
        }
    }
}

/// `[re, im]` or the string `"infinity"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Finite([f64; 2]),
    Named(String),
}

/// A constant segment `A`, `B` (real symmetric, row-major) of given length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub length: f64,
    pub a: [[f64; 2]; 2],
    #[serde(default)]
    pub b: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Density `f_mu(xi)` for the scalar rescaling; estimated if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    /// Limit point for ring-kernel targets; estimated if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<EtaSpec>,
    /// OPUC boundary density `g_mu(xi)`; estimated if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// Boundary angle for Schrodinger models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_range: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<KernelMode>,
    /// Expected subordinacy ratio.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    /// Number of dyadic heights `2^-1 .. 2^-count` for boundary limits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_count: Option<usize>,
    /// Convergence tolerance for boundary limits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_tol: Option<f64>,
}

/// Asserted thresholds; only the ones present are checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Sup error at the last index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_error: Option<f64>,
    /// Bound on `error(last) / error(first)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_ratio: Option<f64>,
    /// Bound on every equivalence distance at every index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_distance: Option<f64>,
    /// Equivalence distances must decay together.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_together: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_deviation: Option<f64>,
    /// Bound on `|ratio - expected|` for subordinacy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// Relative agreement of sum and j-form kernels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub det_drift: Option<f64>,
    /// Required convergence outcome of boundary limits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_prefix")]
    pub table_prefix: String,
}

fn default_report() -> String {
    "report.json".into()
}

fn default_prefix() -> String {
    "table".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            report: default_report(),
            table_prefix: default_prefix(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    pub kind: Kind,
    pub model: String,
    #[serde(default)]
    pub xi: XiSpec,
    #[serde(default)]
    pub indices: Vec<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: Outputs,
}

fn plain_name(s: &str) -> bool {
    !s.is_empty()
        && !s.contains(['/', '\\'])
        && s != "."
        && s != ".."
        && s.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.schema != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                self.schema
            ));
        }
        let xis = self.xi.values();
        if xis.is_empty() || xis.iter().any(|x| !x.is_finite()) {
            return bad("xi must be a finite number or a non-empty list of them".into());
        }
        if self.kind.needs_indices() && self.indices.is_empty() {
            return bad(format!("kind {} needs a non-empty index list", self.kind.name()));
        }
        if self.indices.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return bad("indices must be positive and finite".into());
        }
        let integer_kinds = [Kind::Clock, Kind::Subordinacy, Kind::Opuc];
        if integer_kinds.contains(&self.kind) && self.indices.iter().any(|l| l.fract() != 0.0) {
            return bad(format!("kind {} needs integer indices", self.kind.name()));
        }
        if let Some(f) = self.params.f {
            if !(f > 0.0) {
                return bad(format!("f must be positive, got {f}"));
            }
        }
        if let Some(g) = self.params.g {
            if !(g > 0.0) {
                return bad(format!("g must be positive, got {g}"));
            }
        }
        if !plain_name(&self.outputs.report) || !plain_name(&self.outputs.table_prefix) {
            return bad("output names must be plain file names".into());
        }
        self.grid
            .build()
            .map_err(|e| CliError::Config(format!("grid: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = Config::parse(
            r#"{"schema": 1, "kind": "universality-scalar", "model": "free-jacobi", "indices": [500, 4000]}"#,
        )
        .unwrap();
        assert_eq!(c.xi.values(), vec![0.0]);
        assert_eq!(c.grid, GridSpec::Default);
        assert_eq!(c.outputs.report, "report.json");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        for text in [
            r#"{"schema": 1, "kind": "kernel", "model": "free-jacobi", "indices": [5], "extra": 1}"#,
            r#"{"schema": 2, "kind": "kernel", "model": "free-jacobi", "indices": [5]}"#,
            r#"{"schema": 1, "kind": "kernel", "model": "free-jacobi", "indices": []}"#,
            r#"{"schema": 1, "kind": "clock", "model": "free-jacobi", "indices": [5.5]}"#,
            r#"{"schema": 1, "kind": "kernel", "model": "free-jacobi", "indices": [5], "params": {"typo": 1}}"#,
            r#"{"schema": 1, "kind": "kernel", "model": "free-jacobi", "indices": [5], "outputs": {"report": "../x"}}"#,
            r#"{"schema": 1, "kind": "nope", "model": "free-jacobi", "indices": [5]}"#,
        ] {
            assert!(matches!(Config::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn xi_list_and_eta() {
        let c = Config::parse(
            r#"{"schema": 1, "kind": "universality-matrix", "model": "free-jacobi", "xi": [0, 0.5],
                "indices": [10], "params": {"eta": [0, 1]}}"#,
        )
        .unwrap();
        assert_eq!(c.xi.values(), vec![0.0, 0.5]);
        assert_eq!(c.params.eta, Some(EtaSpec::Finite([0.0, 1.0])));
        let c = Config::parse(
            r#"{"schema": 1, "kind": "equivalence", "model": "free-jacobi", "indices": [10], "params": {"eta": "infinity"}}"#,
        )
        .unwrap();
        assert_eq!(c.params.eta, Some(EtaSpec::Named("infinity".into())));
    }

    #[test]
    fn mfun_needs_no_indices() {
        assert!(Config::parse(r#"{"schema": 1, "kind": "mfun", "model": "log-periodic"}"#).is_ok());
    }
}
