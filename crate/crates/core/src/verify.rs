//! Grid-based verification of the soliton identities.
//!
//! Every check is evaluated per sample point from one jet expansion of
//! order 4 (enough for `Δ_f` of the curvature tensor), and residuals are
//! Frobenius norms in the g-orthonormal frame so reports do not depend on
//! the chart.
//!
//! The `*_unchecked` functions skip the soliton gate and exist for
//! negative controls; the public entry points refuse metrics that do not
//! satisfy `Ric + Hess f = λg` on the grid.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bivector::{frame_riemann, sharp_matrix, AlgebraicCurvature, BivectorBasis};
use crate::chart::{Chart, Expansion, MetricFamily};
use crate::error::{GeometryError, Result};
use crate::jet::Jet;
use crate::models::SolitonInstance;
use crate::stencil::STENCIL_STEP;
use crate::tensor::JetTensor;

/// Gate for `‖Ric + Hess f − λg‖`.
pub const SOLITON_TOLERANCE: f64 = 1e-8;
/// Points are kept at least two stencil steps inside the chart.
pub const DEFAULT_MARGIN: f64 = 2.0 * STENCIL_STEP;
const EXPANSION_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub algebraic: f64,
    pub elliptic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebraic: 1e-8,
            elliptic: 1e-5,
        }
    }
}

/// Seeded sample points inside a chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleGrid {
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
    pub margin: f64,
}

impl SampleGrid {
    /// Uniform rejection sampling in `bounds`, keeping points that are
    /// valid with `margin`.
    pub fn sample(chart: &Chart, bounds: &[(f64, f64)], count: usize, seed: u64, margin: f64) -> Result<SampleGrid> {
        if bounds.len() != chart.dimension {
            return Err(GeometryError::ContractViolation(format!(
                "{} bounds given for a {}-dimensional chart",
                bounds.len(),
                chart.dimension
            )));
        }
        if let Some(&(lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(GeometryError::ContractViolation(format!("bad sampling interval [{lo}, {hi}]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while points.len() < count {
            attempts += 1;
            if attempts > 1000 * count.max(1) {
                return Err(GeometryError::Domain {
                    point: bounds.iter().map(|b| 0.5 * (b.0 + b.1)).collect(),
                    reason: "sampling box has almost no valid points".into(),
                });
            }
            let x: Vec<f64> = bounds
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo })
                .collect();
            if chart.is_valid_with_margin(&x, margin) {
                points.push(x);
            }
        }
        Ok(SampleGrid { points, seed, margin })
    }

    pub fn from_points(chart: &Chart, points: Vec<Vec<f64>>, margin: f64) -> Result<SampleGrid> {
        if let Some(bad) = points.iter().find(|x| !chart.is_valid_with_margin(x, margin)) {
            return Err(GeometryError::Domain {
                point: bad.clone(),
                reason: format!("not valid with margin {margin}"),
            });
        }
        Ok(SampleGrid { points, seed: 0, margin })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityId {
    SolitonEquation,
    /// `∇scal = 2 div Ric = 2 Ric(∇f)`.
    ScalarGradient,
    /// `(∇_X Ric)(Y,Z) − (∇_Y Ric)(X,Z) = −R(X,Y,∇f,Z)`.
    RicciCodazzi,
    /// `∇_{∇f}Ric + λRic − Ric² = R(·,∇f,∇f,·) + ½ Hess scal`.
    RicciDrift,
    /// `div R = R(∇f,·,·,·)`.
    RiemannDivergence,
    /// `scal + |∇f|² − 2λf` is constant.
    AuxiliaryConstant,
    EllipticCurvOp,
    EllipticRicci,
    EllipticScalar,
    EllipticRadial,
    EllipticWeylRicci,
    SharpTraceConsistency,
    SurfaceSolitonOde,
}

impl IdentityId {
    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityId::SolitonEquation => "soliton-equation",
            IdentityId::ScalarGradient => "scalar-gradient",
            IdentityId::RicciCodazzi => "ricci-codazzi",
            IdentityId::RicciDrift => "ricci-drift",
            IdentityId::RiemannDivergence => "riemann-divergence",
            IdentityId::AuxiliaryConstant => "auxiliary-constant",
            IdentityId::EllipticCurvOp => "elliptic-curv-op",
            IdentityId::EllipticRicci => "elliptic-ricci",
            IdentityId::EllipticScalar => "elliptic-scalar",
            IdentityId::EllipticRadial => "elliptic-radial",
            IdentityId::EllipticWeylRicci => "elliptic-weyl-ricci",
            IdentityId::SharpTraceConsistency => "sharp-trace-consistency",
            IdentityId::SurfaceSolitonOde => "surface-soliton-ode",
        }
    }
}

impl std::fmt::Display for IdentityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResidual {
    pub coords: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub identity_id: IdentityId,
    pub per_point: Vec<PointResidual>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl ResidualReport {
    /// NaN residuals count as failures.
    pub fn new(identity_id: IdentityId, per_point: Vec<PointResidual>, tolerance: f64) -> ResidualReport {
        let max_residual = per_point.iter().fold(0.0f64, |m, p| {
            if p.residual.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(p.residual)
            }
        });
        let verdict = if max_residual < tolerance { Verdict::Pass } else { Verdict::Fail };
        ResidualReport {
            identity_id,
            per_point,
            max_residual,
            tolerance,
            verdict,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Evaluates `f` at every grid point in parallel, keeping grid order.
pub(crate) fn per_point<T: Send>(grid: &SampleGrid, f: impl Fn(&[f64]) -> Result<T> + Sync) -> Result<Vec<T>> {
    grid.points.par_iter().map(|x| f(x)).collect()
}

fn report(id: IdentityId, grid: &SampleGrid, residuals: Vec<f64>, tolerance: f64) -> ResidualReport {
    let per = grid
        .points
        .iter()
        .zip(residuals)
        .map(|(x, r)| PointResidual {
            coords: x.clone(),
            residual: r,
        })
        .collect();
    ResidualReport::new(id, per, tolerance)
}

/// `‖Ric + Hess f − λg‖` per point, without any gate.
pub fn soliton_residual_report(m: &MetricFamily, grid: &SampleGrid, tolerance: f64) -> Result<ResidualReport> {
    let residuals = per_point(grid, |x| {
        let e = Expansion::new(m, x, 2)?;
        Ok(e.frame_norm(&e.soliton_tensor()))
    })?;
    Ok(report(IdentityId::SolitonEquation, grid, residuals, tolerance))
}

fn require_soliton(m: &MetricFamily, grid: &SampleGrid) -> Result<()> {
    let gate = soliton_residual_report(m, grid, SOLITON_TOLERANCE)?;
    if gate.passed() {
        Ok(())
    } else {
        Err(GeometryError::SolitonResidualFailed {
            max_residual: gate.max_residual,
            tolerance: SOLITON_TOLERANCE,
        })
    }
}

/// Frame components of a (0,2) jet tensor at the base point as a matrix.
fn frame_matrix(e: &Expansion, t: &JetTensor) -> DMatrix<f64> {
    let f = e.to_frame(&t.values(&e.point));
    let n = e.dimension();
    DMatrix::from_fn(n, n, |i, j| f.get(&[i, j]))
}

fn frame_vector(e: &Expansion, components: &[f64]) -> Vec<f64> {
    // vector components: v_frame = coframe · v
    let v = nalgebra::DVector::from_column_slice(components);
    (e.coframe() * v).iter().copied().collect()
}

/// Ricci-contracted curvature `K(Y,Z) = Σ R(Y,E_i,Ric(E_i),Z)` in a frame.
pub fn k_tensor(r: &AlgebraicCurvature, ric: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.dimension;
    DMatrix::from_fn(n, n, |y, z| {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += ric[(i, j)] * r.get(y, i, j, z);
            }
        }
        acc
    })
}

/// Right-hand side `2λR − 2(R² + s·R^#)` of the curvature-operator
/// equation as an operator matrix; `sharp_sign = 1` is the correct form.
pub fn curvature_operator_rhs(r: &AlgebraicCurvature, lambda: f64, sharp_sign: f64) -> Result<DMatrix<f64>> {
    let basis = BivectorBasis::new(r.dimension);
    let m = r.operator_matrix(&basis);
    let sharp = sharp_matrix(&m, &basis)?;
    Ok(&m * (2.0 * lambda) - (&m * &m + sharp * sharp_sign) * 2.0)
}

/// Frobenius norm of `tr RHS_R − RHS_Ric` for an algebraic curvature
/// tensor in an orthonormal frame.
pub fn sharp_trace_residual(r: &AlgebraicCurvature, lambda: f64, sharp_sign: f64) -> Result<f64> {
    let n = r.dimension;
    let basis = BivectorBasis::new(n);
    let rhs_r = AlgebraicCurvature::from_operator_matrix(&curvature_operator_rhs(r, lambda, sharp_sign)?, &basis);
    let ric = r.ricci();
    let rhs_ric = &ric * (2.0 * lambda) - k_tensor(r, &ric) * 2.0;
    Ok((rhs_r.ricci() - rhs_ric).norm())
}

/// Pointwise identities without the soliton gate.
pub fn verify_pointwise_identities_unchecked(
    m: &MetricFamily,
    grid: &SampleGrid,
    tolerances: &Tolerances,
) -> Result<Vec<ResidualReport>> {
    let rows = per_point(grid, |x| pointwise_residuals(m, x))?;
    let tol = tolerances.algebraic;
    let column = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let aux_values = column(4);
    let mean = aux_values.iter().sum::<f64>() / aux_values.len().max(1) as f64;
    let aux = aux_values.iter().map(|a| (a - mean).abs()).collect();
    Ok(vec![
        report(IdentityId::ScalarGradient, grid, column(0), tol),
        report(IdentityId::RicciCodazzi, grid, column(1), tol),
        report(IdentityId::RicciDrift, grid, column(2), tol),
        report(IdentityId::RiemannDivergence, grid, column(3), tol),
        report(IdentityId::AuxiliaryConstant, grid, aux, tol),
    ])
}

/// Residuals of the four tensor identities, plus the auxiliary value.
fn pointwise_residuals(m: &MetricFamily, x: &[f64]) -> Result<[f64; 5]> {
    let e = Expansion::new(m, x, EXPANSION_ORDER)?;
    let n = e.dimension();
    let grad_f = e.potential_gradient();
    let grad_f_val: Vec<f64> = grad_f.iter().map(Jet::value).collect();
    let fr = frame_vector(&e, &grad_f_val);

    let r = frame_riemann(&e);
    let ric = frame_matrix(&e, &e.ricci);
    let d_ric = e.covariant_derivative(&e.ricci);
    let d_ric_f = e.to_frame(&d_ric.values(x));
    let d_scal: Vec<f64> = e.scal.gradient();
    let d_scal_f = frame_matrix_covector(&e, &d_scal);

    // Eq. scalar gradient: ∇scal = 2 div Ric and ∇scal = 2 Ric(∇f)
    let mut grad_div: f64 = 0.0;
    let mut grad_ric: f64 = 0.0;
    for b in 0..n {
        let div: f64 = (0..n).map(|a| d_ric_f.get(&[a, a, b])).sum();
        let ric_grad: f64 = (0..n).map(|c| ric[(b, c)] * fr[c]).sum();
        grad_div += (d_scal_f[b] - 2.0 * div).powi(2);
        grad_ric += (d_scal_f[b] - 2.0 * ric_grad).powi(2);
    }
    let grad_div = grad_div.sqrt().max(grad_ric.sqrt());

    // Codazzi-type identity
    let mut codazzi: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let lhs = d_ric_f.get(&[a, b, c]) - d_ric_f.get(&[b, a, c]);
                let rhs: f64 = -(0..n).map(|d| r.get(a, b, d, c) * fr[d]).sum::<f64>();
                codazzi += (lhs - rhs).powi(2);
            }
        }
    }

    // Drift identity
    let hess_scal = e.hessian(&e.scal);
    let hess_scal_f = frame_matrix(&e, &hess_scal);
    let mut drift_sq: f64 = 0.0;
    let ric2 = &ric * &ric;
    for a in 0..n {
        for b in 0..n {
            let drift: f64 = (0..n).map(|c| fr[c] * d_ric_f.get(&[c, a, b])).sum();
            let lhs = drift + e.lambda * ric[(a, b)] - ric2[(a, b)];
            let mut curv = 0.0;
            for c in 0..n {
                for d in 0..n {
                    curv += r.get(a, c, d, b) * fr[c] * fr[d];
                }
            }
            let rhs = curv + 0.5 * hess_scal_f[(a, b)];
            drift_sq += (lhs - rhs).powi(2);
        }
    }

    // Contracted second Bianchi
    let d_riem = e.to_frame(&e.covariant_derivative(&e.riemann).values(x));
    let mut div_r: f64 = 0.0;
    for p in 0..n {
        for q in 0..n {
            for s in 0..n {
                let div: f64 = (0..n).map(|a| d_riem.get(&[a, a, p, q, s])).sum();
                let rhs: f64 = (0..n).map(|a| fr[a] * r.get(a, p, q, s)).sum();
                div_r += (div - rhs).powi(2);
            }
        }
    }

    let grad_sq: f64 = grad_f_val.iter().zip(e.potential.gradient()).map(|(u, d)| u * d).sum();
    let aux = e.scal.value() + grad_sq - 2.0 * e.lambda * e.potential.value();
    Ok([grad_div, codazzi.sqrt(), drift_sq.sqrt(), div_r.sqrt(), aux])
}

fn frame_matrix_covector(e: &Expansion, covector: &[f64]) -> Vec<f64> {
    let f = e.frame();
    let n = e.dimension();
    (0..n).map(|a| (0..n).map(|i| f[(i, a)] * covector[i]).sum()).collect()
}

/// Eq. (1)–(4) and the auxiliary constant on a soliton.
pub fn verify_pointwise_identities(inst: &SolitonInstance, grid: &SampleGrid, tolerances: &Tolerances) -> Result<Vec<ResidualReport>> {
    require_soliton(&inst.metric, grid)?;
    verify_pointwise_identities_unchecked(&inst.metric, grid, tolerances)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EllipticEquation {
    CurvOp,
    Ricci,
    Scalar,
    Radial,
    WeylRicci,
}

impl EllipticEquation {
    pub const ALL: [EllipticEquation; 5] = [
        EllipticEquation::CurvOp,
        EllipticEquation::Ricci,
        EllipticEquation::Scalar,
        EllipticEquation::Radial,
        EllipticEquation::WeylRicci,
    ];

    pub fn id(&self) -> IdentityId {
        match self {
            EllipticEquation::CurvOp => IdentityId::EllipticCurvOp,
            EllipticEquation::Ricci => IdentityId::EllipticRicci,
            EllipticEquation::Scalar => IdentityId::EllipticScalar,
            EllipticEquation::Radial => IdentityId::EllipticRadial,
            EllipticEquation::WeylRicci => IdentityId::EllipticWeylRicci,
        }
    }

    pub fn parse(s: &str) -> Option<EllipticEquation> {
        EllipticEquation::ALL.into_iter().find(|e| e.name() == s)
    }

    pub fn name(&self) -> &'static str {
        match self {
            EllipticEquation::CurvOp => "curv_op",
            EllipticEquation::Ricci => "ricci",
            EllipticEquation::Scalar => "scalar",
            EllipticEquation::Radial => "radial",
            EllipticEquation::WeylRicci => "weyl_ricci",
        }
    }
}

/// Elliptic equations without the soliton gate. `weyl_ricci` in
/// dimension < 3 is an error; callers that want to skip it should not
/// request it.
pub fn verify_elliptic_equations_unchecked(
    m: &MetricFamily,
    grid: &SampleGrid,
    which: &[EllipticEquation],
    tolerances: &Tolerances,
) -> Result<Vec<ResidualReport>> {
    let n = m.dimension();
    if which.contains(&EllipticEquation::WeylRicci) && n < 3 {
        return Err(GeometryError::UnsupportedDimension {
            operation: "weyl_ricci equation",
            dimension: n,
        });
    }
    let rows = per_point(grid, |x| elliptic_residuals(m, x, which))?;
    Ok(which
        .iter()
        .enumerate()
        .map(|(k, eq)| report(eq.id(), grid, rows.iter().map(|r| r[k]).collect(), tolerances.elliptic))
        .collect())
}

fn elliptic_residuals(m: &MetricFamily, x: &[f64], which: &[EllipticEquation]) -> Result<Vec<f64>> {
    let e = Expansion::new(m, x, EXPANSION_ORDER)?;
    let n = e.dimension();
    let nf = n as f64;
    let lambda = e.lambda;
    let r = frame_riemann(&e);
    let ric = frame_matrix(&e, &e.ricci);
    let scal = e.scal.value();
    let ric_sq = ric.norm_squared();
    let mut out = Vec::with_capacity(which.len());
    for eq in which {
        let residual = match eq {
            EllipticEquation::CurvOp => {
                let basis = BivectorBasis::new(n);
                let lap = AlgebraicCurvature::from_tensor(&e.to_frame(&e.f_laplacian(&e.riemann).values(x)));
                let lhs = lap.operator_matrix(&basis);
                (lhs - curvature_operator_rhs(&r, lambda, 1.0)?).norm()
            }
            EllipticEquation::Ricci => {
                let lhs = frame_matrix(&e, &e.f_laplacian(&e.ricci));
                let rhs = &ric * (2.0 * lambda) - k_tensor(&r, &ric) * 2.0;
                (lhs - rhs).norm()
            }
            EllipticEquation::Scalar => {
                let lhs = e.f_laplacian(&JetTensor::scalar(e.scal.clone())).components[0].value();
                (lhs - (2.0 * lambda * scal - 2.0 * ric_sq)).abs()
            }
            EllipticEquation::Radial => radial_residual(&e, &r, &ric)?,
            EllipticEquation::WeylRicci => {
                let (w, _) = crate::bivector::weyl_algebraic(&r, &DMatrix::identity(n, n))?;
                let lhs = frame_matrix(&e, &e.f_laplacian(&e.ricci));
                let rhs = &ric * (2.0 * lambda) - &ric * (2.0 * nf * scal / ((nf - 1.0) * (nf - 2.0)))
                    + (&ric * &ric) * (4.0 / (nf - 2.0))
                    - DMatrix::identity(n, n) * (2.0 / (nf - 2.0) * (ric_sq - scal * scal / (nf - 1.0)))
                    - k_tensor(&w, &ric) * 2.0;
                (lhs - rhs).norm()
            }
        };
        out.push(residual);
    }
    Ok(out)
}

/// `Δ_f Ric(∇f,∇f) = 4λRic(∇f,∇f) − 2D_{∇f}|Ric|² + 2Σ Ric(∇_{E_i}∇f, ∇_{E_i}∇f)
/// + 2Σ R(∇f,E_i,Ric(E_i),∇f)`.
fn radial_residual(e: &Expansion, r: &AlgebraicCurvature, ric: &DMatrix<f64>) -> Result<f64> {
    let n = e.dimension();
    let grad = e.potential_gradient();
    let ric_ff = e.ricci.contract_first(&grad).contract_first(&grad);
    let lhs = e.f_laplacian(&ric_ff).components[0].value();

    // |Ric|² = g^{ac} g^{bd} Ric_ab Ric_cd as a jet
    let ric_up = e.ricci_operator();
    let mut norm_sq = ric_up.get(&[0, 0]) * ric_up.get(&[0, 0]);
    for flat in 1..n * n {
        let (a, b) = (flat / n, flat % n);
        norm_sq.add_product(ric_up.get(&[a, b]), ric_up.get(&[b, a]));
    }
    let d_norm: f64 = norm_sq
        .gradient()
        .iter()
        .zip(&grad)
        .map(|(d, g)| d * g.value())
        .sum();

    let grad_val: Vec<f64> = grad.iter().map(Jet::value).collect();
    let fr = frame_vector(e, &grad_val);
    let hess = frame_matrix(e, &e.hessian(&e.potential));
    let ric_ff_val: f64 = (0..n).map(|a| (0..n).map(|b| ric[(a, b)] * fr[a] * fr[b]).sum::<f64>()).sum();
    let hess_term = (&hess * ric * &hess).trace();
    let k = k_tensor(r, ric);
    let k_ff: f64 = (0..n).map(|a| (0..n).map(|b| k[(a, b)] * fr[a] * fr[b]).sum::<f64>()).sum();
    let rhs = 4.0 * e.lambda * ric_ff_val - 2.0 * d_norm + 2.0 * hess_term + 2.0 * k_ff;
    Ok((lhs - rhs).abs())
}

pub fn verify_elliptic_equations(
    inst: &SolitonInstance,
    grid: &SampleGrid,
    which: &[EllipticEquation],
    tolerances: &Tolerances,
) -> Result<Vec<ResidualReport>> {
    require_soliton(&inst.metric, grid)?;
    verify_elliptic_equations_unchecked(&inst.metric, grid, which, tolerances)
}

/// Trace of the curvature-operator equation against the Ricci equation,
/// with `sharp_sign = −1` giving a corrupted `R^#` for negative controls.
pub fn verify_sharp_trace_consistency_unchecked(
    m: &MetricFamily,
    grid: &SampleGrid,
    tolerance: f64,
    sharp_sign: f64,
) -> Result<ResidualReport> {
    let n = m.dimension();
    if n < 3 {
        return Err(GeometryError::UnsupportedDimension {
            operation: "sharp trace consistency",
            dimension: n,
        });
    }
    let residuals = per_point(grid, |x| {
        let e = Expansion::new(m, x, 2)?;
        sharp_trace_residual(&frame_riemann(&e), m.lambda, sharp_sign)
    })?;
    Ok(report(IdentityId::SharpTraceConsistency, grid, residuals, tolerance))
}

pub fn verify_sharp_trace_consistency(inst: &SolitonInstance, grid: &SampleGrid, tolerances: &Tolerances) -> Result<ResidualReport> {
    require_soliton(&inst.metric, grid)?;
    verify_sharp_trace_consistency_unchecked(&inst.metric, grid, tolerances.algebraic, 1.0)
}

/// The Weyl tensor in the orthonormal frame, `None` when `n < 3`.
pub fn frame_weyl(e: &Expansion) -> Result<Option<AlgebraicCurvature>> {
    let n = e.dimension();
    if n < 3 {
        return Ok(None);
    }
    let (w, _) = crate::bivector::weyl_algebraic(&frame_riemann(e), &DMatrix::identity(n, n))?;
    Ok(Some(w))
}
