use cdkernel::cansys::{cansys_kernel, integrate_transfer, jform_kernel};
use cdkernel::oprl::{cd_kernel, fmt_num, KernelMode, KernelTable, KernelValues};
use cdkernel::opuc::{embed_jform_kernel, embed_kernel, opuc_universality};
use cdkernel::universality::{
    boundary_value, clock_spacing, equivalence_report, eta_mismatch, matrix_experiment, scalar_experiment,
    subordinacy_ratio, Grid, KernelProvider, DECAY_FLOOR,
};
use cdkernel::weyl::{boundary_limit, dyadic_schedule, ModelKind, ModelM};
use cdkernel::{Mat2C, SpherePoint, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Config, EtaSpec, Kind};
use crate::error::CliError;
use crate::models::{resolve, Model};

/// Below this `|conj(w) - z|` a pair counts as diagonal and the j-form
/// kernel is not compared.
const OFF_DIAGONAL: f64 = 1e-8;

/// Relative slack for the sign of the smallest eigenvalue of `K(z, z)`.
const PSD_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Below,
    AtLeast,
    Equals,
}

/// One asserted threshold and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::Below,
            bound,
            passed: value < bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtLeast,
            bound,
            passed: value >= bound,
        }
    }

    pub fn flag(name: impl Into<String>, value: bool, expected: bool) -> Self {
        let num = |b: bool| if b { 1.0 } else { 0.0 };
        Self {
            name: name.into(),
            value: num(value),
            relation: Relation::Equals,
            bound: num(expected),
            passed: value == expected,
        }
    }

    pub fn describe(&self) -> String {
        let rel = match self.relation {
            Relation::Below => "<",
            Relation::AtLeast => ">=",
            Relation::Equals => "==",
        };
        let verdict = if self.passed { "ok" } else { "FAILED" };
        format!(
            "{}: {} {rel} {} {verdict}",
            self.name,
            fmt_num(self.value),
            fmt_num(self.bound)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub kind: Kind,
    pub model: String,
    pub config: Config,
    pub results: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// A report and its kernel tables, named by file.
pub struct Outcome {
    pub report: Report,
    pub tables: Vec<(String, KernelTable)>,
}

impl Outcome {
    pub fn failures(&self) -> Vec<&Check> {
        self.report.checks.iter().filter(|c| !c.passed).collect()
    }
}

struct Ctx<'a> {
    config: &'a Config,
    model: Model,
    grid: Grid,
    xis: Vec<f64>,
    checks: Vec<Check>,
    tables: Vec<(String, KernelTable)>,
}

impl Ctx<'_> {
    fn table_name(&self, xi_index: usize, index: f64) -> String {
        format!(
            "{}_{}_xi{xi_index}_L{}.csv",
            self.config.outputs.table_prefix,
            self.config.kind.name(),
            fmt_num(index)
        )
    }

    fn push_table(&mut self, xi_index: usize, table: KernelTable) {
        let name = self.table_name(xi_index, table.index);
        self.tables.push((name, table));
    }

    fn kind_error(&self) -> CliError {
        CliError::Config(format!(
            "kind {} is not available for {} model {}",
            self.config.kind.name(),
            self.model.family(),
            self.model.id()
        ))
    }

    fn provider(&self) -> Result<&dyn KernelProvider, CliError> {
        match &self.model {
            Model::Jacobi { params, .. } => Ok(params),
            Model::Canonical { system, .. } => Ok(system),
            _ => Err(self.kind_error()),
        }
    }

    /// `f_mu(xi)`: supplied or estimated from the boundary value of `m`.
    fn density(&self, xi: f64) -> Result<(f64, &'static str), CliError> {
        if let Some(f) = self.config.params.f {
            return Ok((f, "supplied"));
        }
        let m = self.model.m_function()?;
        Ok((boundary_value(&m, xi)?.f_mu, "estimated"))
    }

    /// Limit point `eta`: supplied (with a mismatch flag against the
    /// estimate when one is available) or estimated.
    fn limit_point(&self, xi: f64) -> Result<(SpherePoint, Value), CliError> {
        let estimate =
            || -> Result<SpherePoint, CliError> { Ok(boundary_value(&self.model.m_function()?, xi)?.eta) };
        match &self.config.params.eta {
            None => {
                let eta = estimate()?;
                Ok((eta, json!({"source": "estimated"})))
            }
            Some(spec) => {
                let eta = match spec {
                    EtaSpec::Finite([re, im]) => SpherePoint::finite(C64::new(*re, *im)),
                    EtaSpec::Named(s) if s == "infinity" => SpherePoint::infinity(),
                    EtaSpec::Named(s) => {
                        return Err(CliError::Config(format!(
                            "eta must be [re, im] or \"infinity\", got \"{s}\""
                        )))
                    }
                };
                if !eta.in_closed_upper(1e-12) {
                    return Err(CliError::Config(
                        "eta must lie in the closed upper half-plane".into(),
                    ));
                }
                let info = match estimate() {
                    Ok(est) => json!({
                        "source": "supplied",
                        "estimated": est,
                        "mismatch": eta_mismatch(&eta, &est),
                    }),
                    Err(e) => json!({"source": "supplied", "estimate_error": e.to_string()}),
                };
                Ok((eta, info))
            }
        }
    }

    fn integer_indices(&self) -> Vec<usize> {
        self.config.indices.iter().map(|&l| l as usize).collect()
    }

    fn universality_checks(&mut self, label: &str, sup_errors: &[f64]) {
        let tol = &self.config.tolerances;
        let last = sup_errors[sup_errors.len() - 1];
        if let Some(t) = tol.sup_error {
            self.checks
                .push(Check::below(format!("{label}.sup_error"), last, t));
        }
        if let Some(t) = tol.decay_ratio {
            let ratio = if last <= DECAY_FLOOR {
                0.0
            } else {
                last / sup_errors[0]
            };
            self.checks
                .push(Check::below(format!("{label}.decay_ratio"), ratio, t));
        }
    }
}

fn pair_key(xi: f64) -> String {
    format!("xi={}", fmt_num(xi))
}

fn kernel_kind(ctx: &mut Ctx) -> Result<Value, CliError> {
    let mode = ctx.config.params.mode.unwrap_or(KernelMode::Sum);
    let other = match mode {
        KernelMode::Sum => KernelMode::JForm,
        KernelMode::JForm => KernelMode::Sum,
    };
    let pairs = ctx.grid.pairs();
    let mut results = Vec::new();
    let mut worst = 0.0f64;
    for (i, &xi) in ctx.xis.clone().iter().enumerate() {
        let x = C64::new(xi, 0.0);
        for &l in &ctx.config.indices {
            let eval = |m: KernelMode, z: C64, w: C64| -> Result<Mat2C, CliError> {
                Ok(match &ctx.model {
                    Model::Jacobi { params, .. } => cd_kernel(params, l, z, w, m)?,
                    Model::Canonical { system, .. } => match m {
                        KernelMode::Sum => cansys_kernel(system, l, z, w)?,
                        KernelMode::JForm => jform_kernel(system, l, z, w)?,
                    },
                    Model::Opuc { alphas, .. } => {
                        if l.fract() != 0.0 {
                            return Err(cdkernel::Error::NonIntegerIndex(l).into());
                        }
                        match m {
                            KernelMode::Sum => embed_kernel(alphas, l as usize, z, w)?,
                            KernelMode::JForm => embed_jform_kernel(alphas, l as usize, z, w)?,
                        }
                    }
                    Model::MOnly(_) => return Err(ctx.kind_error()),
                })
            };
            let values = pairs
                .par_iter()
                .map(|(z, w)| eval(mode, x + z, x + w))
                .collect::<Result<Vec<_>, _>>()?;
            let mut entry = json!({"xi": xi, "index": l, "mode": mode});
            if ctx.config.tolerances.relative.is_some() {
                let rel = pairs
                    .par_iter()
                    .zip(&values)
                    .filter(|((z, w), _)| (w.conj() - z).norm() > OFF_DIAGONAL)
                    .map(|((z, w), k)| {
                        let k2 = eval(other, x + z, x + w)?;
                        Ok(k.dist(&k2) / k.max_abs().max(f64::MIN_POSITIVE))
                    })
                    .collect::<Result<Vec<f64>, CliError>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                worst = worst.max(rel);
                entry["relative_difference"] = json!(rel);
            }
            results.push(entry);
            let table = KernelTable::new(
                ctx.model.id(),
                xi,
                1.0,
                l,
                pairs.clone(),
                KernelValues::Matrix(values),
            )?;
            ctx.push_table(i, table);
        }
    }
    if let Some(t) = ctx.config.tolerances.relative {
        ctx.checks.push(Check::below("relative_difference", worst, t));
    }
    Ok(json!(results))
}

fn universality_scalar(ctx: &mut Ctx) -> Result<Value, CliError> {
    let mut results = Vec::new();
    for (i, &xi) in ctx.xis.clone().iter().enumerate() {
        let (f, source) = ctx.density(xi)?;
        let (report, tables) = scalar_experiment(
            ctx.provider()?,
            xi,
            f,
            &ctx.config.indices,
            &ctx.grid,
            ctx.config.tolerances.sup_error,
        )?;
        ctx.universality_checks(&pair_key(xi), &report.sup_errors);
        for t in tables {
            ctx.push_table(i, t);
        }
        results.push(json!({"f_source": source, "report": report}));
    }
    Ok(json!(results))
}

fn universality_matrix(ctx: &mut Ctx) -> Result<Value, CliError> {
    let mut results = Vec::new();
    for (i, &xi) in ctx.xis.clone().iter().enumerate() {
        let (eta, eta_info) = ctx.limit_point(xi)?;
        let (report, tables) = matrix_experiment(
            ctx.provider()?,
            xi,
            eta,
            &ctx.config.indices,
            &ctx.grid,
            ctx.config.tolerances.sup_error,
        )?;
        ctx.universality_checks(&pair_key(xi), &report.sup_errors);
        for t in tables {
            ctx.push_table(i, t);
        }
        results.push(json!({"eta": eta_info, "report": report}));
    }
    Ok(json!(results))
}

fn equivalence(ctx: &mut Ctx) -> Result<Value, CliError> {
    let mut results = Vec::new();
    for &xi in &ctx.xis.clone() {
        let (eta, eta_info) = ctx.limit_point(xi)?;
        let report = equivalence_report(ctx.provider()?, xi, eta, &ctx.config.indices, &ctx.grid)?;
        let key = pair_key(xi);
        if let Some(t) = ctx.config.tolerances.max_distance {
            ctx.checks.push(Check::below(
                format!("{key}.max_distance"),
                report.max_distance(),
                t,
            ));
        }
        if let Some(expected) = ctx.config.tolerances.decay_together {
            ctx.checks.push(Check::flag(
                format!("{key}.decay_together"),
                report.decay_together,
                expected,
            ));
        }
        results.push(json!({"eta": eta_info, "report": report}));
    }
    Ok(json!(results))
}

fn jacobi_params(ctx: &Ctx) -> Result<cdkernel::oprl::JacobiParams, CliError> {
    match &ctx.model {
        Model::Jacobi { params, .. } => Ok(params.clone()),
        _ => Err(ctx.kind_error()),
    }
}

fn clock(ctx: &mut Ctx) -> Result<Value, CliError> {
    let params = jacobi_params(ctx)?;
    let j_range = ctx.config.params.j_range.unwrap_or(5);
    let mut results = Vec::new();
    for &xi in &ctx.xis.clone() {
        let (f, source) = ctx.density(xi)?;
        for n in ctx.integer_indices() {
            let spacing = clock_spacing(&params, xi, n, j_range, f)?;
            if let Some(t) = ctx.config.tolerances.gap_deviation {
                let name = format!("{}.n={n}.gap_deviation", pair_key(xi));
                ctx.checks.push(Check::below(name, spacing.max_deviation(), t));
            }
            results.push(json!({
                "f": f,
                "f_source": source,
                "max_deviation": spacing.max_deviation(),
                "spacing": spacing,
            }));
        }
    }
    Ok(json!(results))
}

fn subordinacy(ctx: &mut Ctx) -> Result<Value, CliError> {
    let params = jacobi_params(ctx)?;
    let expected = ctx.config.params.expected;
    let mut results = Vec::new();
    for &xi in &ctx.xis.clone() {
        let ratios = ctx
            .integer_indices()
            .par_iter()
            .map(|&n| Ok((n, subordinacy_ratio(&params, xi, n)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        for &(n, ratio) in &ratios {
            if let (Some(t), Some(e)) = (ctx.config.tolerances.ratio, expected) {
                let name = format!("{}.n={n}.ratio_error", pair_key(xi));
                ctx.checks.push(Check::below(name, (ratio - e).abs(), t));
            }
            results.push(json!({"xi": xi, "n": n, "ratio": ratio}));
        }
    }
    Ok(json!({"expected": expected, "rows": results}))
}

fn opuc(ctx: &mut Ctx) -> Result<Value, CliError> {
    let Model::Opuc { alphas, caratheodory } = &ctx.model else {
        return Err(ctx.kind_error());
    };
    let (alphas, caratheodory) = (alphas.clone(), caratheodory.clone());
    let mut results = Vec::new();
    for (i, &xi) in ctx.xis.clone().iter().enumerate() {
        // Re F = Im m on the boundary, so g = pi f_mu of m(z) = i F(e^{iz}).
        let (g, source) = match (ctx.config.params.g, caratheodory.boundary_density(xi)) {
            (Some(g), _) => (g, "supplied"),
            (None, Some(g)) => (g, "closed-form"),
            (None, None) => {
                let m = ctx.model.m_function()?;
                (std::f64::consts::PI * boundary_value(&m, xi)?.f_mu, "estimated")
            }
        };
        let runs = ctx
            .integer_indices()
            .into_iter()
            .map(|n| Ok(opuc_universality(&alphas, xi, g, n, &ctx.grid)?))
            .collect::<Result<Vec<_>, CliError>>()?;
        let sup_errors: Vec<f64> = runs.iter().map(|r| r.sup_error).collect();
        ctx.universality_checks(&pair_key(xi), &sup_errors);
        results.push(json!({
            "xi": xi,
            "g": g,
            "g_source": source,
            "indices": ctx.config.indices,
            "scales": runs.iter().map(|r| r.table.scale).collect::<Vec<_>>(),
            "sup_errors": sup_errors,
        }));
        for r in runs {
            ctx.push_table(i, r.table);
        }
    }
    Ok(json!(results))
}

fn cansys_check(ctx: &mut Ctx) -> Result<Value, CliError> {
    let Model::Canonical { system, .. } = &ctx.model else {
        return Err(ctx.kind_error());
    };
    let system = system.clone();
    let pairs = ctx.grid.pairs();
    let mut results = Vec::new();
    let (mut worst_drift, mut worst_rel, mut worst_psd) = (0.0f64, 0.0f64, f64::INFINITY);
    for (i, &xi) in ctx.xis.clone().iter().enumerate() {
        let x = C64::new(xi, 0.0);
        for &l in &ctx.config.indices {
            let drift = ctx
                .grid
                .points
                .par_iter()
                .map(|z| Ok(integrate_transfer(&system, l, x + z)?.det_drift))
                .collect::<Result<Vec<f64>, CliError>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let values = pairs
                .par_iter()
                .map(|(z, w)| Ok(cansys_kernel(&system, l, x + z, x + w)?))
                .collect::<Result<Vec<Mat2C>, CliError>>()?;
            let rel = pairs
                .par_iter()
                .zip(&values)
                .filter(|((z, w), _)| (w.conj() - z).norm() > OFF_DIAGONAL)
                .map(|((z, w), k)| {
                    let kj = jform_kernel(&system, l, x + z, x + w)?;
                    Ok(k.dist(&kj) / k.max_abs().max(f64::MIN_POSITIVE))
                })
                .collect::<Result<Vec<f64>, CliError>>()?
                .into_iter()
                .fold(0.0, f64::max);
            // Smallest eigenvalue of K(z, z) relative to its trace.
            let psd = pairs
                .iter()
                .zip(&values)
                .filter(|((z, w), _)| z == w)
                .map(|(_, k)| {
                    let ev = k.hermitian_part().hermitian_eigenvalues();
                    ev[0].min(ev[1]) / k.trace().re.abs().max(1.0)
                })
                .fold(f64::INFINITY, f64::min);
            worst_drift = worst_drift.max(drift);
            worst_rel = worst_rel.max(rel);
            worst_psd = worst_psd.min(psd);
            results.push(json!({
                "xi": xi,
                "length": l,
                "det_drift": drift,
                "relative_difference": rel,
                "diagonal_min_eigenvalue": psd,
            }));
            let table = KernelTable::new(
                system.id(),
                xi,
                1.0,
                l,
                pairs.clone(),
                KernelValues::Matrix(values),
            )?;
            ctx.push_table(i, table);
        }
    }
    ctx.checks
        .push(Check::at_least("diagonal_min_eigenvalue", worst_psd, -PSD_SLACK));
    if let Some(t) = ctx.config.tolerances.det_drift {
        ctx.checks.push(Check::below("det_drift", worst_drift, t));
    }
    if let Some(t) = ctx.config.tolerances.relative {
        ctx.checks.push(Check::below("relative_difference", worst_rel, t));
    }
    Ok(json!(results))
}

fn mfun(ctx: &mut Ctx) -> Result<Value, CliError> {
    let m: ModelM = ctx.model.m_function()?;
    // Transfer-matrix models pay for every sample with a long integration.
    let (count, tol) = match m.kind() {
        ModelKind::Transfer { .. } => (12, 1e-3),
        _ => (30, 1e-6),
    };
    let count = ctx.config.params.schedule_count.unwrap_or(count);
    let tol = ctx.config.params.boundary_tol.unwrap_or(tol);
    let schedule = dyadic_schedule(count);
    let mut results = Vec::new();
    for &xi in &ctx.xis.clone() {
        let limit = boundary_limit(&m, xi, &schedule, tol)?;
        if let Some(expected) = ctx.config.tolerances.converged {
            ctx.checks.push(Check::flag(
                format!("{}.converged", pair_key(xi)),
                limit.converged,
                expected,
            ));
        }
        let known = m.boundary_data(xi).map(|d| json!({"eta": d.eta, "f_mu": d.f_mu}));
        results.push(json!({"xi": xi, "schedule_count": count, "tol": tol, "limit": limit, "known": known}));
    }
    Ok(json!(results))
}

/// Runs an experiment in memory; all parallel work uses the current rayon pool.
pub fn execute(config: &Config) -> Result<Outcome, CliError> {
    config.validate()?;
    if config.tolerances.ratio.is_some() && config.params.expected.is_none() {
        return Err(CliError::Config("tolerances.ratio needs params.expected".into()));
    }
    let model = resolve(&config.model, &config.params)?;
    let grid = config
        .grid
        .build()
        .map_err(|e| CliError::Config(format!("grid: {e}")))?;
    let mut ctx = Ctx {
        config,
        model,
        grid,
        xis: config.xi.values(),
        checks: Vec::new(),
        tables: Vec::new(),
    };
    let results = match config.kind {
        Kind::Kernel => kernel_kind(&mut ctx)?,
        Kind::UniversalityScalar => universality_scalar(&mut ctx)?,
        Kind::UniversalityMatrix => universality_matrix(&mut ctx)?,
        Kind::Equivalence => equivalence(&mut ctx)?,
        Kind::Clock => clock(&mut ctx)?,
        Kind::Subordinacy => subordinacy(&mut ctx)?,
        Kind::Opuc => opuc(&mut ctx)?,
        Kind::CansysCheck => cansys_check(&mut ctx)?,
        Kind::Mfun => mfun(&mut ctx)?,
    };
    let passed = ctx.checks.iter().all(|c| c.passed);
    Ok(Outcome {
        report: Report {
            schema: config.schema,
            kind: config.kind,
            model: ctx.model.id(),
            config: config.clone(),
            results,
            checks: ctx.checks,
            passed,
        },
        tables: ctx.tables,
    })
}
