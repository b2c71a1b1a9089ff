//! Spectral diagnostics and the model-label decision.
//!
//! Thresholds are relative to the curvature scale
//! `ref = max(|scal|, n|λ|)` of the grid (absolute when that is zero), so
//! labels are unchanged under `g → c·g, λ → λ/c`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bivector::{frame_riemann, sorted_eigen, AlgebraicCurvature, BivectorBasis, CurvatureOperator};
use crate::chart::{Expansion, MetricFamily};
use crate::error::{GeometryError, Result};
use crate::models::{ModelClass, SolitonInstance, SolitonKind};
use crate::stencil::{first_derivative, second_derivative, STENCIL_STEP};
use crate::tensor::{Slot, TensorField};
use crate::verify::{frame_weyl, k_tensor, per_point, soliton_residual_report, SampleGrid, SOLITON_TOLERANCE};

/// An eigenvalue is zero when `|ρ| ≤ ZERO_RELATIVE · ref`.
pub const ZERO_RELATIVE: f64 = 1e-7;
/// Eigenvalues are equal when their spread is at most `EQUAL_RELATIVE · ref`.
pub const EQUAL_RELATIVE: f64 = 1e-6;
/// Hard ceiling for `φ`.
pub const PHI_CEILING: f64 = 1e-12;
/// `‖∇P‖` below this counts as parallel.
pub const KERNEL_PARALLEL_TOLERANCE: f64 = 1e-5;
/// Eigenvalue gaps needed before the barrier inequality is evaluated.
pub const SIMPLE_EIGENVALUE_MARGIN: f64 = 1e-4;

/// Per-point spectra and related scalars.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDiagnostics {
    pub dimension: usize,
    pub lambda: f64,
    pub points: Vec<Vec<f64>>,
    /// Ascending per point.
    pub ricci_eigenvalues: Vec<Vec<f64>>,
    /// Ascending per point.
    pub curvop_eigenvalues: Vec<Vec<f64>>,
    pub scal: Vec<f64>,
    /// `|Ric|² − scal²/(n−1)`.
    pub cauchy_schwarz_gap: Vec<f64>,
    /// Frame norm of `W`; zero when `n ≤ 3`.
    pub weyl_norm: Vec<f64>,
    pub potential: Vec<f64>,
    pub grad_f_norm: Vec<f64>,
    /// `‖W(∇f,·,·,∇f)‖/|∇f|²` at the grid point with the largest `|∇f|`.
    pub weyl_radial_ratio: Option<f64>,
}

impl SpectralDiagnostics {
    /// `max(|scal|, n|λ|)` over the grid.
    pub fn curvature_scale(&self) -> f64 {
        let s = self.scal.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        s.max(self.dimension as f64 * self.lambda.abs())
    }

    fn threshold(&self, relative: f64) -> f64 {
        let r = self.curvature_scale();
        if r > 0.0 {
            relative * r
        } else {
            relative
        }
    }

    pub fn zero_threshold(&self) -> f64 {
        self.threshold(ZERO_RELATIVE)
    }

    pub fn equal_threshold(&self) -> f64 {
        self.threshold(EQUAL_RELATIVE)
    }
}

struct PointSpectra {
    rho: Vec<f64>,
    curvop: Vec<f64>,
    scal: f64,
    gap: f64,
    weyl: f64,
    potential: f64,
    grad_norm: f64,
    weyl_radial: Option<f64>,
}

fn frame_ricci(e: &Expansion) -> DMatrix<f64> {
    let f = e.to_frame(&e.ricci.values(&e.point));
    let n = e.dimension();
    DMatrix::from_fn(n, n, |i, j| f.get(&[i, j]))
}

fn frame_gradient(e: &Expansion) -> Vec<f64> {
    let grad: Vec<f64> = e.potential_gradient().iter().map(|j| j.value()).collect();
    (e.coframe() * DVector::from_vec(grad)).iter().copied().collect()
}

fn point_spectra(m: &MetricFamily, x: &[f64]) -> Result<PointSpectra> {
    let e = Expansion::new(m, x, 2)?;
    let n = e.dimension();
    let ric = frame_ricci(&e);
    let (rho, _) = sorted_eigen(&ric);
    let op = CurvatureOperator::from_expansion(&e, &BivectorBasis::new(n))?;
    let scal = e.scal.value();
    let gap = if n > 1 { ric.norm_squared() - scal * scal / (n as f64 - 1.0) } else { 0.0 };
    let w = frame_weyl(&e)?;
    let fr = frame_gradient(&e);
    let grad_sq: f64 = fr.iter().map(|v| v * v).sum();
    let weyl_radial = match &w {
        Some(w) if grad_sq > 1e-18 => {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let mut v = 0.0;
                    for c in 0..n {
                        for d in 0..n {
                            v += fr[c] * fr[d] * w.get(c, a, b, d);
                        }
                    }
                    acc += v * v;
                }
            }
            Some(acc.sqrt() / grad_sq)
        }
        _ => None,
    };
    Ok(PointSpectra {
        rho,
        curvop: op.spectrum,
        scal,
        gap,
        weyl: w.map(|w| w.frobenius()).unwrap_or(0.0),
        potential: e.potential.value(),
        grad_norm: grad_sq.sqrt(),
        weyl_radial,
    })
}

pub fn spectral_diagnostics_of(m: &MetricFamily, grid: &SampleGrid) -> Result<SpectralDiagnostics> {
    let rows = per_point(grid, |x| point_spectra(m, x))?;
    let far = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.weyl_radial.is_some())
        .max_by(|a, b| a.1.grad_norm.total_cmp(&b.1.grad_norm))
        .and_then(|(_, r)| r.weyl_radial);
    Ok(SpectralDiagnostics {
        dimension: m.dimension(),
        lambda: m.lambda,
        points: grid.points.clone(),
        ricci_eigenvalues: rows.iter().map(|r| r.rho.clone()).collect(),
        curvop_eigenvalues: rows.iter().map(|r| r.curvop.clone()).collect(),
        scal: rows.iter().map(|r| r.scal).collect(),
        cauchy_schwarz_gap: rows.iter().map(|r| r.gap).collect(),
        weyl_norm: rows.iter().map(|r| r.weyl).collect(),
        potential: rows.iter().map(|r| r.potential).collect(),
        grad_f_norm: rows.iter().map(|r| r.grad_norm).collect(),
        weyl_radial_ratio: far,
    })
}

pub fn spectral_diagnostics(inst: &SolitonInstance, grid: &SampleGrid) -> Result<SpectralDiagnostics> {
    spectral_diagnostics_of(&inst.metric, grid)
}

/// `φ` for sorted Ricci eigenvalues `ρ₁ ≤ … ≤ ρ_n`.
pub fn phi(rho: &[f64]) -> Result<f64> {
    let n = rho.len();
    if n < 3 {
        return Err(GeometryError::UnsupportedDimension {
            operation: "phi",
            dimension: n,
        });
    }
    let scal: f64 = rho.iter().sum();
    if !(scal > 0.0) {
        return Err(GeometryError::NotApplicable(format!("phi needs scal > 0, got {scal}")));
    }
    let nf = n as f64;
    let r1 = rho[0];
    let rest = &rho[1..];
    let sum: f64 = rest.iter().sum();
    let sum_sq: f64 = rest.iter().map(|r| r * r).sum();
    let first = r1 * r1 * (nf * r1 - scal) / ((nf - 1.0) * scal * scal);
    let second = ((nf - 2.0) * r1 - scal) * ((nf - 1.0) * sum_sq - sum * sum) / ((nf - 1.0) * (nf - 2.0) * scal * scal);
    Ok(first + second)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiValue {
    pub phi: f64,
    /// `h = f − log(scal²)`.
    pub h_weight: f64,
}

pub fn phi_diagnostic(diag: &SpectralDiagnostics) -> Result<Vec<PhiValue>> {
    diag.ricci_eigenvalues
        .iter()
        .zip(&diag.scal)
        .zip(&diag.potential)
        .map(|((rho, scal), f)| {
            Ok(PhiValue {
                phi: phi(rho)?,
                h_weight: f - (scal * scal).ln(),
            })
        })
        .collect()
}

/// Outcome of `Δ_h(ρ₁/scal) ≤ 2φ` at points where it is classical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierCheck {
    pub checked: usize,
    pub skipped: usize,
    /// Largest `Δ_h(ρ₁/scal) − 2φ` over checked points.
    pub max_excess: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Evaluates `Δ_h(ρ₁/scal) ≤ 2φ` by Richardson differences wherever `ρ₁`
/// is simple, `scal > 0` and `W ≈ 0`; other points are skipped.
pub fn barrier_ratio_check(m: &MetricFamily, grid: &SampleGrid, tolerance: f64) -> Result<BarrierCheck> {
    let n = m.dimension();
    if n < 3 {
        return Err(GeometryError::UnsupportedDimension {
            operation: "barrier ratio check",
            dimension: n,
        });
    }
    let ratio = |x: &[f64]| -> f64 {
        match Expansion::new(m, x, 2) {
            Ok(e) => {
                let (rho, _) = sorted_eigen(&frame_ricci(&e));
                rho[0] / e.scal.value()
            }
            Err(_) => f64::NAN,
        }
    };
    let rows = per_point(grid, |x| {
        let e = Expansion::new(m, x, 2)?;
        let (rho, _) = sorted_eigen(&frame_ricci(&e));
        let scal = e.scal.value();
        let reference = scal.abs().max(n as f64 * m.lambda.abs()).max(1e-300);
        let weyl = frame_weyl(&e)?.map(|w| w.frobenius()).unwrap_or(0.0);
        let simple = rho[1] - rho[0] > SIMPLE_EIGENVALUE_MARGIN * reference;
        if !simple || scal <= 0.0 || weyl > ZERO_RELATIVE * reference {
            return Ok(None);
        }
        // Δu − ∇h·∇u with h = f − log scal²
        let du: Vec<f64> = (0..n).map(|a| first_derivative(&|y: &[f64]| vec![ratio(y)], x, a, STENCIL_STEP)[0]).collect();
        let gamma = e.christoffel.values(x);
        let ginv = e.inverse_metric.values(x);
        let mut lap = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut hess = second_derivative(&ratio, x, i, j, STENCIL_STEP);
                for (k, duk) in du.iter().enumerate() {
                    hess -= gamma.get(&[k, i, j]) * duk;
                }
                lap += ginv.get(&[i, j]) * hess;
            }
        }
        let dh: Vec<f64> = (0..n)
            .map(|a| e.potential.partial(&[a]) - 2.0 * e.scal.partial(&[a]) / scal)
            .collect();
        let mut drift = 0.0;
        for (i, dhi) in dh.iter().enumerate() {
            for (j, duj) in du.iter().enumerate() {
                drift += ginv.get(&[i, j]) * dhi * duj;
            }
        }
        Ok(Some(lap - drift - 2.0 * phi(&rho)?))
    })?;
    let checked: Vec<f64> = rows.iter().flatten().copied().collect();
    let max_excess = checked.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    Ok(BarrierCheck {
        checked: checked.len(),
        skipped: rows.len() - checked.len(),
        max_excess: if checked.is_empty() { 0.0 } else { max_excess },
        tolerance,
        passed: checked.iter().all(|v| *v <= tolerance),
    })
}

fn k_form_direct(r: &AlgebraicCurvature, ric: &DMatrix<f64>, y: &[f64]) -> f64 {
    let k = k_tensor(r, ric);
    let v = DVector::from_column_slice(y);
    (v.transpose() * k * &v)[(0, 0)]
}

/// `Σ ρ_i R(Y,E_i,E_i,Y)` over a Ricci eigenbasis.
fn k_form_eigenbasis(r: &AlgebraicCurvature, ric: &DMatrix<f64>, y: &[f64]) -> f64 {
    let n = r.dimension;
    let (rho, vecs) = sorted_eigen(ric);
    let mut total = 0.0;
    for (i, rho_i) in rho.iter().enumerate() {
        let e = vecs.column(i);
        let mut sec = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        sec += y[a] * e[b] * e[c] * y[d] * r.get(a, b, c, d);
                    }
                }
            }
        }
        total += rho_i * sec;
    }
    total
}

/// `g(K(Y),Y)` for the g-unit direction along `direction` (coordinate
/// components), cross-checked against the Ricci-eigenbasis expression.
pub fn k_quadratic_form(m: &MetricFamily, x: &[f64], direction: &[f64]) -> Result<f64> {
    let e = Expansion::new(m, x, 2)?;
    let n = e.dimension();
    if direction.len() != n {
        return Err(GeometryError::ContractViolation(format!("direction needs {n} components")));
    }
    let frame_dir = e.coframe() * DVector::from_column_slice(direction);
    let len = frame_dir.norm();
    if !(len > 1e-14) {
        return Err(GeometryError::ContractViolation("zero direction".into()));
    }
    let y: Vec<f64> = frame_dir.iter().map(|v| v / len).collect();
    let r = frame_riemann(&e);
    let ric = frame_ricci(&e);
    let direct = k_form_direct(&r, &ric, &y);
    let eig = k_form_eigenbasis(&r, &ric, &y);
    if (direct - eig).abs() > 1e-9 * (1.0 + direct.abs()) {
        return Err(GeometryError::ContractViolation(format!(
            "K form disagrees between expressions: {direct} vs {eig}"
        )));
    }
    Ok(direct)
}

/// `λ₁`, `λ₂` and `½ Σ_{α,β≥2} C²_{1αβ} λ_α λ_β` at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondEigenvaluePoint {
    pub coords: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub restricted_sum: f64,
    /// `λ₁` is repeated; the sum is averaged over the cluster.
    pub degenerate_lambda1: bool,
}

/// The quadratic form `⟨𝓡^#φ₁, φ₁⟩` restricted to `α, β ≥ 2` in an
/// eigenbasis of the operator matrix.
pub fn second_eigenvalue_point(matrix: &DMatrix<f64>, basis: &BivectorBasis, coords: &[f64]) -> SecondEigenvaluePoint {
    let big_n = basis.len();
    let (values, vecs) = sorted_eigen(matrix);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let cluster: Vec<usize> = (0..big_n).filter(|&k| values[k] - values[0] <= 1e-8 * scale).collect();
    // C in the eigenbasis
    let c_eig = |a: usize, b: usize, c: usize| {
        let mut acc = 0.0;
        for p in 0..big_n {
            let vp = vecs[(p, a)];
            if vp == 0.0 {
                continue;
            }
            for q in 0..big_n {
                let vq = vecs[(q, b)];
                if vq == 0.0 {
                    continue;
                }
                for r in 0..big_n {
                    acc += vp * vq * vecs[(r, c)] * basis.structure_constant(p, q, r);
                }
            }
        }
        acc
    };
    let mut total = 0.0;
    for &one in &cluster {
        let mut s = 0.0;
        for a in (0..big_n).filter(|&a| a != one) {
            for b in (0..big_n).filter(|&b| b != one) {
                let c = c_eig(one, a, b);
                s += c * c * values[a] * values[b];
            }
        }
        total += 0.5 * s;
    }
    SecondEigenvaluePoint {
        coords: coords.to_vec(),
        lambda1: values.first().copied().unwrap_or(0.0),
        lambda2: values.get(1).copied().unwrap_or(f64::NAN),
        restricted_sum: total / cluster.len() as f64,
        degenerate_lambda1: cluster.len() > 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum Audit {
    /// `λ₂ ≥ 0` held at `points` points and `λ₁ ≥ −1e−9` there.
    Passed { points: usize },
    Failed { points: usize, worst_lambda1: f64 },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondEigenvalueReport {
    pub per_point: Vec<SecondEigenvaluePoint>,
    pub audit: Audit,
}

/// Audits "`λ₂ ≥ 0` ⇒ `λ₁ ≥ 0`" pointwise on a shrinking soliton.
pub fn second_eigenvalue_check(inst: &SolitonInstance, grid: &SampleGrid) -> Result<SecondEigenvalueReport> {
    if inst.kind != SolitonKind::Shrinking {
        return Err(GeometryError::NotApplicable("second-eigenvalue audit needs a shrinking soliton".into()));
    }
    let n = inst.dimension();
    let basis = BivectorBasis::new(n);
    if basis.len() < 2 {
        return Err(GeometryError::UnsupportedDimension {
            operation: "second eigenvalue",
            dimension: n,
        });
    }
    let per = per_point(grid, |x| {
        let e = Expansion::new(&inst.metric, x, 2)?;
        Ok(second_eigenvalue_point(&frame_riemann(&e).operator_matrix(&basis), &basis, x))
    })?;
    let gate = soliton_residual_report(&inst.metric, grid, SOLITON_TOLERANCE)?;
    let audit = if !gate.passed() {
        Audit::Skipped {
            reason: "not a soliton on this grid".into(),
        }
    } else {
        audit_points(&per)
    };
    Ok(SecondEigenvalueReport { per_point: per, audit })
}

pub fn audit_points(per: &[SecondEigenvaluePoint]) -> Audit {
    let relevant: Vec<&SecondEigenvaluePoint> = per.iter().filter(|p| p.lambda2 >= -1e-9).collect();
    if relevant.is_empty() {
        return Audit::Skipped {
            reason: "λ₂ < 0 at every point".into(),
        };
    }
    let worst = relevant.iter().map(|p| p.lambda1).fold(f64::INFINITY, f64::min);
    if worst >= -1e-9 {
        Audit::Passed { points: relevant.len() }
    } else {
        Audit::Failed {
            points: relevant.len(),
            worst_lambda1: worst,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelParallelismReport {
    pub kernel_dimension: usize,
    pub per_point: Vec<f64>,
    pub max_norm: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn kernel_projector(m: &MetricFamily, x: &[f64], zero: f64) -> Result<(DMatrix<f64>, usize, f64)> {
    let e = Expansion::new(m, x, 2)?;
    let ric = frame_ricci(&e);
    let (rho, vecs) = sorted_eigen(&ric);
    let n = rho.len();
    let kernel: Vec<usize> = (0..n).filter(|&i| rho[i].abs() <= zero).collect();
    let gap = (0..n).filter(|i| !kernel.contains(i)).map(|i| rho[i].abs()).fold(f64::INFINITY, f64::min);
    let mut p = DMatrix::zeros(n, n);
    for &k in &kernel {
        let v = vecs.column(k);
        p += v * v.transpose();
    }
    // coordinate endomorphism P^i_j = F P_frame F⁻¹
    Ok((e.frame() * p * e.coframe(), kernel.len(), gap))
}

/// `‖∇P‖` for the projector onto the Ricci kernel, by Richardson
/// differences of `P` plus the Christoffel correction.
pub fn kernel_parallelism_check(inst: &SolitonInstance, grid: &SampleGrid) -> Result<KernelParallelismReport> {
    let m = &inst.metric;
    let n = m.dimension();
    let diag = spectral_diagnostics_of(m, grid)?;
    let zero = diag.zero_threshold();
    let mut dims = Vec::with_capacity(grid.len());
    for x in &grid.points {
        let (_, k, gap) = kernel_projector(m, x, zero)?;
        if k > 0 && gap <= 1e-6 {
            return Err(GeometryError::HypothesisViolated(format!(
                "Ricci kernel not separated from the rest of the spectrum at {x:?}"
            )));
        }
        dims.push(k);
    }
    let k = dims[0];
    if k == 0 {
        return Err(GeometryError::HypothesisViolated("Ricci tensor has no kernel on the grid".into()));
    }
    if dims.iter().any(|d| *d != k) {
        return Err(GeometryError::HypothesisViolated("Ricci kernel does not have constant rank".into()));
    }
    let norms = per_point(grid, |x| {
        let e = Expansion::new(m, x, 2)?;
        let p_flat = |y: &[f64]| -> Vec<f64> {
            match kernel_projector(m, y, zero) {
                Ok((p, _, _)) => p.iter().copied().collect(),
                Err(_) => vec![f64::NAN; n * n],
            }
        };
        let (p, _, _) = kernel_projector(m, x, zero)?;
        let gamma = e.christoffel.values(x);
        let mut cov = TensorField::zeros(n, vec![Slot::Lower, Slot::Upper, Slot::Lower], x.to_vec());
        for a in 0..n {
            // nalgebra storage is column-major: flat index = j * n + i
            let dp = first_derivative(&p_flat, x, a, STENCIL_STEP);
            for i in 0..n {
                for j in 0..n {
                    let mut v = dp[j * n + i];
                    for k in 0..n {
                        v += gamma.get(&[i, a, k]) * p[(k, j)] - p[(i, k)] * gamma.get(&[k, a, j]);
                    }
                    cov.set(&[a, i, j], v);
                }
            }
        }
        Ok(e.frame_norm(&cov))
    })?;
    let max_norm = norms.iter().fold(0.0f64, |a, b| if b.is_nan() { f64::NAN } else { a.max(*b) });
    Ok(KernelParallelismReport {
        kernel_dimension: k,
        per_point: norms,
        max_norm,
        tolerance: KERNEL_PARALLEL_TOLERANCE,
        passed: max_norm < KERNEL_PARALLEL_TOLERANCE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalEndpoint {
    Flat,
    Einstein,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantScalReport {
    pub scal_mean: f64,
    pub scal_variance: f64,
    pub constant: bool,
    /// `scal` between `0` and `nλ` (with slack `1e−9`); `None` when scal
    /// is not constant.
    pub within_bounds: Option<bool>,
    /// `max | |Ric|² − λ scal |`; `None` when scal is not constant.
    pub ricci_identity_residual: Option<f64>,
    pub endpoint: Option<ScalEndpoint>,
}

pub fn constant_scal_diagnostics(inst: &SolitonInstance, grid: &SampleGrid) -> Result<ConstantScalReport> {
    let diag = spectral_diagnostics(inst, grid)?;
    Ok(constant_scal_from(&diag))
}

pub fn constant_scal_from(diag: &SpectralDiagnostics) -> ConstantScalReport {
    let count = diag.scal.len().max(1) as f64;
    let mean = diag.scal.iter().sum::<f64>() / count;
    let variance = diag.scal.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / count;
    let reference = diag.curvature_scale();
    let constant = variance < 1e-10 * (1.0 + reference * reference);
    if !constant {
        return ConstantScalReport {
            scal_mean: mean,
            scal_variance: variance,
            constant,
            within_bounds: None,
            ricci_identity_residual: None,
            endpoint: None,
        };
    }
    let n = diag.dimension as f64;
    let lambda = diag.lambda;
    let (lo, hi) = if lambda >= 0.0 { (0.0, n * lambda) } else { (n * lambda, 0.0) };
    let slack = 1e-9 * (1.0 + reference);
    let within = mean >= lo - slack && mean <= hi + slack;
    let residual = diag
        .ricci_eigenvalues
        .iter()
        .zip(&diag.scal)
        .map(|(rho, s)| (rho.iter().map(|r| r * r).sum::<f64>() - lambda * s).abs())
        .fold(0.0f64, f64::max);
    let zero = diag.zero_threshold();
    let endpoint = if mean.abs() <= zero {
        Some(ScalEndpoint::Flat)
    } else if lambda != 0.0 && (mean - n * lambda).abs() <= zero {
        Some(ScalEndpoint::Einstein)
    } else {
        None
    };
    ConstantScalReport {
        scal_mean: mean,
        scal_variance: variance,
        constant,
        within_bounds: Some(within),
        ricci_identity_residual: Some(residual),
        endpoint,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub diagnostic: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationResult {
    pub label: ModelClass,
    pub evidence: Vec<Evidence>,
    /// Number of grid points the diagnosis rests on.
    pub grid_points: usize,
    /// Report-only: `‖W(∇f,·,·,∇f)‖/|∇f|²` at the outermost grid point.
    pub weyl_radial_ratio: Option<f64>,
}

struct EvidenceLog(Vec<Evidence>);

impl EvidenceLog {
    /// Records `value ≤ threshold`.
    fn at_most(&mut self, name: &str, value: f64, threshold: f64) -> bool {
        let passed = value <= threshold;
        self.0.push(Evidence {
            diagnostic: name.into(),
            value,
            threshold,
            passed,
        });
        passed
    }
}

fn max_over<'a>(rows: impl Iterator<Item = &'a Vec<f64>>, f: impl Fn(&[f64]) -> f64) -> f64 {
    rows.map(|r| f(r)).fold(0.0f64, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

/// Distance of a spectrum from `{0 (once), c (n−1 times)}`, `c = scal/(n−1)`.
fn split_defect(rho: &[f64], scal: f64) -> f64 {
    let n = rho.len();
    let c = scal / (n as f64 - 1.0);
    let zero_idx = (0..n).min_by(|&a, &b| rho[a].abs().total_cmp(&rho[b].abs())).unwrap_or(0);
    let mut d = rho[zero_idx].abs();
    for (i, r) in rho.iter().enumerate() {
        if i != zero_idx {
            d = d.max((r - c).abs());
        }
    }
    d
}

/// Per-grid diagnosis following the case analysis of the classification
/// theorems; falls back to `inconclusive` with the evidence gathered.
pub fn classify(inst: &SolitonInstance, grid: &SampleGrid) -> Result<ClassificationResult> {
    classify_metric(&inst.metric, grid)
}

pub fn classify_metric(m: &MetricFamily, grid: &SampleGrid) -> Result<ClassificationResult> {
    let mut log = EvidenceLog(Vec::new());
    let gate = soliton_residual_report(m, grid, SOLITON_TOLERANCE)?;
    let diag = spectral_diagnostics_of(m, grid)?;
    let done = |label: ModelClass, log: EvidenceLog| ClassificationResult {
        label,
        evidence: log.0,
        grid_points: grid.len(),
        weyl_radial_ratio: diag.weyl_radial_ratio,
    };
    if !log.at_most("soliton-residual", gate.max_residual, SOLITON_TOLERANCE) {
        return Ok(done(ModelClass::Inconclusive, log));
    }
    let n = diag.dimension;
    let lambda = diag.lambda;
    let zero = diag.zero_threshold();
    let equal = diag.equal_threshold();
    let rho = diag.ricci_eigenvalues.iter();
    let max_abs_rho = max_over(rho.clone(), |r| r.iter().fold(0.0f64, |a, b| a.max(b.abs())));
    let weyl = diag.weyl_norm.iter().fold(0.0f64, |a, b| a.max(*b));
    let scal_spread = diag.scal.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b))
        - diag.scal.iter().fold(f64::INFINITY, |a, b| a.min(*b));

    let mut trial = EvidenceLog(Vec::new());
    let w_small = trial.at_most("weyl-norm", weyl, zero);
    let scal_const = trial.at_most("scal-spread", scal_spread, zero);

    // flat
    {
        let mut path = EvidenceLog(log.0.clone());
        if path.at_most("max|ρ|", max_abs_rho, zero) && path.at_most("weyl-norm", weyl, zero) {
            return Ok(done(ModelClass::Flat, path));
        }
    }
    // Einstein
    let rho_spread = max_over(rho.clone(), |r| r[r.len() - 1] - r[0]);
    {
        let mut path = EvidenceLog(log.0.clone());
        if path.at_most("ricci-eigenvalue-spread", rho_spread, equal) && path.at_most("scal-spread", scal_spread, zero) {
            if path.at_most("weyl-norm", weyl, zero) {
                if lambda > 0.0 {
                    return Ok(done(ModelClass::SphereEinstein, path));
                }
                if lambda < 0.0 {
                    return Ok(done(ModelClass::HyperbolicEinstein, path));
                }
            }
            let mut other = EvidenceLog(log.0.clone());
            other.at_most("ricci-eigenvalue-spread", rho_spread, equal);
            other.at_most("scal-spread", scal_spread, zero);
            return Ok(done(ModelClass::EinsteinOther, other));
        }
    }
    // one zero eigenvalue, the rest equal to scal/(n−1)
    if n >= 3 && (w_small || scal_const) {
        let defect = diag
            .ricci_eigenvalues
            .iter()
            .zip(&diag.scal)
            .map(|(r, s)| split_defect(r, *s))
            .fold(0.0f64, f64::max);
        let mut path = EvidenceLog(log.0.clone());
        if path.at_most("split-spectrum-defect", defect, equal) {
            if w_small {
                path.at_most("weyl-norm", weyl, zero);
            } else {
                path.at_most("scal-spread", scal_spread, zero);
            }
            let scal_min = diag.scal.iter().fold(f64::INFINITY, |a, b| a.min(*b));
            let scal_max = diag.scal.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
            if lambda > 0.0 && scal_min > zero {
                path.at_most("-scal", -scal_min, -zero);
                return Ok(done(ModelClass::SphereSplit, path));
            }
            if lambda < 0.0 && scal_max < -zero {
                path.at_most("scal", scal_max, -zero);
                return Ok(done(ModelClass::HyperbolicSplit, path));
            }
        }
    }
    // Einstein factor times a Gaussian: spectrum in {0, λ}
    if lambda != 0.0 && scal_const {
        let defect = max_over(diag.ricci_eigenvalues.iter(), |r| {
            r.iter().map(|v| v.abs().min((v - lambda).abs())).fold(0.0f64, f64::max)
        });
        let kernel_dims: Vec<usize> = diag
            .ricci_eigenvalues
            .iter()
            .map(|r| r.iter().filter(|v| v.abs() <= zero).count())
            .collect();
        let k = kernel_dims[0];
        let mut path = EvidenceLog(log.0.clone());
        path.at_most("scal-spread", scal_spread, zero);
        if path.at_most("rigid-spectrum-defect", defect, equal)
            && k >= 1
            && k < n
            && kernel_dims.iter().all(|d| *d == k)
        {
            path.0.push(Evidence {
                diagnostic: "euclidean-factor-rank".into(),
                value: k as f64,
                threshold: 1.0,
                passed: true,
            });
            return Ok(done(ModelClass::RigidProduct, path));
        }
    }
    log.0.extend(trial.0);
    log.at_most("ricci-eigenvalue-spread", rho_spread, equal);
    Ok(done(ModelClass::Inconclusive, log))
}
