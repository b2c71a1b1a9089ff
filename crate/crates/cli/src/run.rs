//! Suite execution and the run report.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use soliton_core::classify::{
    barrier_ratio_check, classify, constant_scal_from, kernel_parallelism_check, phi, second_eigenvalue_check,
    spectral_diagnostics, Audit, BarrierCheck, ClassificationResult, ConstantScalReport, KernelParallelismReport,
    PHI_CEILING,
};
use soliton_core::error::GeometryError;
use soliton_core::models::{
    build_model, f_volume_estimate, warped_from_recipe, ModelClass, SolitonInstance, SolitonKind, VolumeEstimate,
};
use soliton_core::verify::{
    soliton_residual_report, verify_elliptic_equations_unchecked, verify_pointwise_identities_unchecked,
    verify_sharp_trace_consistency_unchecked, EllipticEquation, ResidualReport, SampleGrid, Tolerances, DEFAULT_MARGIN,
    SOLITON_TOLERANCE,
};

use crate::manifest::{Manifest, ModelEntry, ModelSource, Suite, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Verify,
    Classify,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Classify => "classify",
        }
    }

    /// Suites run by this command for a manifest.
    pub fn suites(&self, manifest: &Manifest) -> Vec<Suite> {
        match self {
            Command::Classify => vec![Suite::Classify],
            Command::Verify if manifest.suites.is_empty() => vec![Suite::Identities, Suite::Elliptic],
            Command::Verify => manifest.suites.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectraSummary {
    pub ricci_eigenvalues: Vec<Vec<f64>>,
    pub curvop_eigenvalues: Vec<Vec<f64>>,
    pub scal: Vec<f64>,
    /// `max |Σρ − scal|`.
    pub trace_defect: f64,
    pub min_cauchy_schwarz_gap: f64,
    pub max_weyl_norm: f64,
    pub weyl_radial_ratio: Option<f64>,
    pub sharp_trace: Option<ResidualReport>,
    /// `max φ` over the grid, when `n ≥ 3` and `scal > 0` everywhere.
    pub max_phi: Option<f64>,
    pub barrier: Option<BarrierCheck>,
    pub second_eigenvalue: Option<Audit>,
    pub kernel_parallelism: Option<KernelParallelismReport>,
    pub constant_scal: ConstantScalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SuiteBody {
    Residuals { reports: Vec<ResidualReport> },
    Spectra { spectra: Box<SpectraSummary> },
    Classify { classification: ClassificationResult, expected_class: Option<ModelClass> },
    Volume { estimate: VolumeEstimate, resolution: usize },
    Nothing {},
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub status: Status,
    pub gate: ResidualReport,
    #[serde(flatten)]
    pub body: SuiteBody,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridEcho {
    pub seed: u64,
    pub count: usize,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub index: usize,
    pub label: String,
    pub dimension: usize,
    pub lambda: f64,
    pub kind: SolitonKind,
    pub coordinates: Vec<String>,
    pub grid: GridEcho,
    pub suites: Vec<SuiteReport>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: &'static str,
    pub command: Command,
    pub manifest: Manifest,
    pub models: Vec<ModelReport>,
    /// `models[i]/suite: reason`, in manifest order.
    pub failures: Vec<String>,
    pub exit_status: Status,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.exit_status == Status::Pass
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report types serialize");
        s.push('\n');
        s
    }
}

/// A model the builders rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildError {
    pub index: usize,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "models[{}] (line {}): {}", self.index, self.line, self.message)
    }
}

impl std::error::Error for BuildError {}

pub fn build_entry(entry: &ModelEntry) -> Result<SolitonInstance, GeometryError> {
    let inst = match &entry.source {
        ModelSource::Builder { builder, params } => build_model(builder, params)?,
        ModelSource::Warped { recipe } => warped_from_recipe(recipe)?,
    };
    let mut inst = match entry.perturb {
        Some(eps) => inst.perturbed(eps),
        None => inst,
    };
    if let Some(c) = entry.expect {
        inst.expected_class = Some(c);
    }
    Ok(inst)
}

fn model_bounds(manifest: &Manifest, entry: &ModelEntry, inst: &SolitonInstance) -> Vec<(f64, f64)> {
    let n = inst.dimension();
    entry
        .bounds
        .clone()
        .or_else(|| manifest.grid.bounds.clone().filter(|b| b.len() == n))
        .unwrap_or_else(|| inst.sample_bounds.clone())
}

/// Builds every model, then runs the suites in manifest order.
pub fn run(manifest: &Manifest, command: Command) -> Result<RunReport, BuildError> {
    let suites = command.suites(manifest);
    let tolerances = Tolerances {
        algebraic: manifest.tolerances.algebraic,
        elliptic: manifest.tolerances.elliptic,
    };
    let mut prepared = Vec::with_capacity(manifest.models.len());
    for (index, entry) in manifest.models.iter().enumerate() {
        let fail = |message: String| BuildError {
            index,
            line: entry.line,
            message,
        };
        let inst = build_entry(entry).map_err(|e| fail(e.to_string()))?;
        let bounds = model_bounds(manifest, entry, &inst);
        if bounds.len() != inst.dimension() {
            return Err(fail(format!("{} bounds for a {}-dimensional model", bounds.len(), inst.dimension())));
        }
        let grid = SampleGrid::sample(&inst.metric.chart, &bounds, manifest.grid.count, manifest.grid.seed, DEFAULT_MARGIN)
            .map_err(|e| fail(e.to_string()))?;
        prepared.push((inst, bounds, grid));
    }

    let mut models = Vec::with_capacity(prepared.len());
    let mut failures = Vec::new();
    for (index, (inst, bounds, grid)) in prepared.into_iter().enumerate() {
        let gate = soliton_residual_report(&inst.metric, &grid, SOLITON_TOLERANCE).map_err(|e| BuildError {
            index,
            line: manifest.models[index].line,
            message: e.to_string(),
        })?;
        let mut reports = Vec::with_capacity(suites.len());
        for suite in &suites {
            let r = run_suite(*suite, &inst, &grid, &gate, &tolerances, manifest.grid.volume_resolution);
            for f in &r.failures {
                failures.push(format!("models[{index}] {}/{}: {f}", inst.label, suite.as_str()));
            }
            reports.push(r);
        }
        let status = if reports.iter().any(|r| r.status == Status::Fail) { Status::Fail } else { Status::Pass };
        models.push(ModelReport {
            index,
            label: inst.label.clone(),
            dimension: inst.dimension(),
            lambda: inst.lambda(),
            kind: inst.kind,
            coordinates: inst.metric.chart.coordinate_names.clone(),
            grid: GridEcho {
                seed: grid.seed,
                count: grid.len(),
                bounds,
            },
            suites: reports,
            status,
        });
    }
    let exit_status = if failures.is_empty() { Status::Pass } else { Status::Fail };
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        command,
        manifest: manifest.clone(),
        models,
        failures,
        exit_status,
    })
}

fn gate_failure(gate: &ResidualReport) -> String {
    format!(
        "soliton-residual-failed (max {:e} > {:e})",
        gate.max_residual, gate.tolerance
    )
}

fn finish(suite: Suite, gate: &ResidualReport, body: SuiteBody, failures: Vec<String>, notes: Vec<String>) -> SuiteReport {
    SuiteReport {
        suite,
        status: if failures.is_empty() { Status::Pass } else { Status::Fail },
        gate: gate.clone(),
        body,
        failures,
        notes,
    }
}

pub fn run_suite(
    suite: Suite,
    inst: &SolitonInstance,
    grid: &SampleGrid,
    gate: &ResidualReport,
    tolerances: &Tolerances,
    volume_resolution: Option<usize>,
) -> SuiteReport {
    if !gate.passed() {
        return finish(suite, gate, SuiteBody::Nothing {}, vec![gate_failure(gate)], Vec::new());
    }
    let outcome = match suite {
        Suite::Identities => residual_suite(verify_pointwise_identities_unchecked(&inst.metric, grid, tolerances), Vec::new()),
        Suite::Elliptic => {
            let mut notes = Vec::new();
            let which: Vec<EllipticEquation> = EllipticEquation::ALL
                .into_iter()
                .filter(|e| {
                    let ok = *e != EllipticEquation::WeylRicci || inst.dimension() >= 3;
                    if !ok {
                        notes.push(format!("{} not applicable for n = {}", e.name(), inst.dimension()));
                    }
                    ok
                })
                .collect();
            residual_suite(verify_elliptic_equations_unchecked(&inst.metric, grid, &which, tolerances), notes)
        }
        Suite::Spectra => spectra_suite(inst, grid, tolerances),
        Suite::Classify => classify_suite(inst, grid),
        Suite::Volume => volume_suite(inst, volume_resolution),
    };
    match outcome {
        Ok((body, failures, notes)) if matches!(body, SuiteBody::Nothing {}) && failures.is_empty() => SuiteReport {
            status: Status::Skipped,
            ..finish(suite, gate, body, failures, notes)
        },
        Ok((body, failures, notes)) => finish(suite, gate, body, failures, notes),
        Err(e) => finish(suite, gate, SuiteBody::Nothing {}, vec![e.to_string()], Vec::new()),
    }
}

type Outcome = Result<(SuiteBody, Vec<String>, Vec<String>), GeometryError>;

fn residual_suite(reports: Result<Vec<ResidualReport>, GeometryError>, notes: Vec<String>) -> Outcome {
    let reports = reports?;
    let failures = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{} (max {:e} > {:e})", r.identity_id, r.max_residual, r.tolerance))
        .collect();
    Ok((SuiteBody::Residuals { reports }, failures, notes))
}

fn spectra_suite(inst: &SolitonInstance, grid: &SampleGrid, tolerances: &Tolerances) -> Outcome {
    let n = inst.dimension();
    let diag = spectral_diagnostics(inst, grid)?;
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let scale = 1.0 + diag.curvature_scale();

    let trace_defect = diag
        .ricci_eigenvalues
        .iter()
        .zip(&diag.scal)
        .map(|(rho, s)| (rho.iter().sum::<f64>() - s).abs())
        .fold(0.0f64, f64::max);
    if trace_defect > 1e-9 * scale {
        failures.push(format!("ricci-trace (max {trace_defect:e})"));
    }
    let sharp_trace = if n >= 3 {
        let r = verify_sharp_trace_consistency_unchecked(&inst.metric, grid, tolerances.algebraic, 1.0)?;
        if !r.passed() {
            failures.push(format!("sharp-trace-consistency (max {:e} > {:e})", r.max_residual, r.tolerance));
        }
        Some(r)
    } else {
        notes.push("sharp trace needs n ≥ 3".into());
        None
    };

    let max_phi = if n >= 3 && diag.scal.iter().all(|s| *s > 0.0) {
        let values = diag.ricci_eigenvalues.iter().map(|r| phi(r)).collect::<Result<Vec<f64>, _>>()?;
        let m = values.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        if m > PHI_CEILING {
            failures.push(format!("phi-nonpositivity (max φ {m:e} > {PHI_CEILING:e})"));
        }
        Some(m)
    } else {
        notes.push("φ needs n ≥ 3 and scal > 0".into());
        None
    };
    let barrier = if max_phi.is_some() {
        let b = barrier_ratio_check(&inst.metric, grid, tolerances.elliptic)?;
        if !b.passed {
            failures.push(format!("barrier-inequality (max excess {:e})", b.max_excess));
        }
        Some(b)
    } else {
        None
    };

    let second_eigenvalue = if inst.kind == SolitonKind::Shrinking && n >= 3 {
        let r = second_eigenvalue_check(inst, grid)?;
        if let Audit::Failed { worst_lambda1, .. } = r.audit {
            failures.push(format!("second-eigenvalue audit (λ₁ = {worst_lambda1:e} with λ₂ ≥ 0)"));
        }
        Some(r.audit)
    } else {
        None
    };

    let kernel_parallelism = match kernel_parallelism_check(inst, grid) {
        Ok(k) => {
            if !k.passed {
                failures.push(format!("kernel-parallelism (max ‖∇P‖ {:e})", k.max_norm));
            }
            Some(k)
        }
        Err(GeometryError::HypothesisViolated(why)) => {
            notes.push(format!("kernel parallelism not run: {why}"));
            None
        }
        Err(e) => return Err(e),
    };

    let constant_scal = constant_scal_from(&diag);
    if constant_scal.within_bounds == Some(false) {
        failures.push(format!("constant-scal bounds (scal = {})", constant_scal.scal_mean));
    }
    if let Some(r) = constant_scal.ricci_identity_residual {
        if r > 1e-8 * scale * scale {
            failures.push(format!("constant-scal |Ric|² = λ scal (residual {r:e})"));
        }
    }
    let min_gap = diag.cauchy_schwarz_gap.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    let max_weyl = diag.weyl_norm.iter().fold(0.0f64, |a, b| a.max(*b));
    let summary = SpectraSummary {
        ricci_eigenvalues: diag.ricci_eigenvalues,
        curvop_eigenvalues: diag.curvop_eigenvalues,
        scal: diag.scal,
        trace_defect,
        min_cauchy_schwarz_gap: min_gap,
        max_weyl_norm: max_weyl,
        weyl_radial_ratio: diag.weyl_radial_ratio,
        sharp_trace,
        max_phi,
        barrier,
        second_eigenvalue,
        kernel_parallelism,
        constant_scal,
    };
    Ok((SuiteBody::Spectra { spectra: Box::new(summary) }, failures, notes))
}

fn classify_suite(inst: &SolitonInstance, grid: &SampleGrid) -> Outcome {
    let result = classify(inst, grid)?;
    let mut failures = Vec::new();
    if let Some(want) = inst.expected_class {
        if result.label != want {
            failures.push(format!("classified as {:?}, expected {:?}", result.label.label(), want.label()));
        }
    }
    Ok((
        SuiteBody::Classify {
            classification: result,
            expected_class: inst.expected_class,
        },
        failures,
        Vec::new(),
    ))
}

/// Midpoint cells per axis, shrinking with dimension.
pub fn default_volume_resolution(n: usize) -> usize {
    match n {
        0..=2 => 400,
        3 => 120,
        4 => 32,
        _ => 12,
    }
}

fn volume_suite(inst: &SolitonInstance, resolution: Option<usize>) -> Outcome {
    if inst.kind != SolitonKind::Shrinking {
        return Ok((SuiteBody::Nothing {}, Vec::new(), vec!["f-volume is only estimated on shrinkers".into()]));
    }
    let Some(axes) = &inst.volume_box else {
        return Ok((SuiteBody::Nothing {}, Vec::new(), vec!["model has no quadrature box".into()]));
    };
    let resolution = resolution.unwrap_or_else(|| default_volume_resolution(inst.dimension()));
    let estimate = f_volume_estimate(inst, axes, resolution)?;
    let mut failures = Vec::new();
    if let VolumeEstimate::Divergent { value, doubled_value } = estimate {
        failures.push(format!("f-volume not converged ({value} vs {doubled_value} on the doubled box)"));
    }
    Ok((SuiteBody::Volume { estimate, resolution }, failures, Vec::new()))
}

/// Rows of `soliton models`.
pub fn model_table() -> String {
    let mut rows: Vec<[String; 3]> = vec![["builder".into(), "expected_class".into(), "note".into()]];
    for e in soliton_core::models::catalog() {
        let params: Vec<String> = e
            .parameters
            .iter()
            .map(|p| format!("{}={}", p.name, p.default))
            .collect();
        rows.push([format!("{}({})", e.name, params.join(", ")), e.expected_class.to_string(), e.note.to_string()]);
    }
    let width = |k: usize| rows.iter().map(|r| r[k].chars().count()).max().unwrap_or(0);
    let (w0, w1) = (width(0), width(1));
    let mut out = String::new();
    for r in &rows {
        let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w - s.chars().count()));
        out.push_str(format!("{}  {}  {}", pad(&r[0], w0), pad(&r[1], w1), r[2]).trim_end());
        out.push('\n');
    }
    out
}

/// Per-suite status counts, for the terminal summary.
pub fn summary_lines(report: &RunReport) -> Vec<String> {
    let mut lines = Vec::new();
    for m in &report.models {
        let mut counts: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for s in &m.suites {
            let key = match s.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Skipped => "skipped",
            };
            counts.entry(key).or_default().push(s.suite.as_str());
        }
        let parts: Vec<String> = counts.iter().map(|(k, v)| format!("{k}: {}", v.join(" "))).collect();
        lines.push(format!("[{}] {}  {}", m.index, m.label, parts.join("; ")));
    }
    lines
}
