//! Coordinate-chart tensor calculus.
//!
//! A [`MetricFamily`] is a chart together with metric components, a
//! potential `f` and a soliton constant `λ`, all written as closures over
//! [`Jet`]s. [`Expansion`] Taylor-expands the geometry about one point and
//! derives Christoffel symbols, curvature and covariant derivatives from
//! the expansion, so every quantity is exact up to rounding.
//!
//! Curvature conventions:
//!
//! * `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`
//! * `R(X,Y,Z,W) = g(R(X,Y)Z, W)`, so `sec(X,Y) = R(X,Y,Y,X)/|X∧Y|²`
//! * `Ric(Y,Z) = Σ R(E_i,Y,Z,E_i)`
//!
//! With these the unit sphere has `sec = +1` and `scal = n(n−1)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix};

use crate::error::{GeometryError, Result};
use crate::jet::Jet;
use crate::tensor::{unflatten, JetTensor, Slot, Symmetry, TensorField};

pub type PointPredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
/// Metric components as an `n × n` row-major list.
pub type MetricOracle = Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>;
pub type ScalarOracle = Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>;
/// A tensor field written in coordinates.
pub type FieldOracle<'a> = &'a dyn Fn(&[Jet]) -> JetTensor;

/// Coordinate chart: names plus the region where the coordinates are
/// non-singular.
#[derive(Clone)]
pub struct Chart {
    pub dimension: usize,
    pub coordinate_names: Vec<String>,
    validity: PointPredicate,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("dimension", &self.dimension)
            .field("coordinate_names", &self.coordinate_names)
            .finish()
    }
}

impl Chart {
    pub fn new(coordinate_names: Vec<String>, validity: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Chart {
        assert!(!coordinate_names.is_empty(), "a chart needs at least one coordinate");
        Chart {
            dimension: coordinate_names.len(),
            coordinate_names,
            validity: Arc::new(validity),
        }
    }

    /// A chart covering all of ℝⁿ.
    pub fn everywhere(coordinate_names: Vec<String>) -> Chart {
        Chart::new(coordinate_names, |_| true)
    }

    pub fn cartesian(dimension: usize) -> Chart {
        Chart::everywhere((1..=dimension).map(|i| format!("x{i}")).collect())
    }

    pub fn is_valid(&self, x: &[f64]) -> bool {
        x.len() == self.dimension && x.iter().all(|c| c.is_finite()) && (self.validity)(x)
    }

    /// Valid at `x` and at every `x ± margin·e_i`.
    pub fn is_valid_with_margin(&self, x: &[f64], margin: f64) -> bool {
        if !self.is_valid(x) {
            return false;
        }
        let mut y = x.to_vec();
        for i in 0..self.dimension {
            for s in [-1.0, 1.0] {
                y[i] = x[i] + s * margin;
                if !self.is_valid(&y) {
                    return false;
                }
            }
            y[i] = x[i];
        }
        true
    }

    pub fn validity(&self) -> PointPredicate {
        self.validity.clone()
    }

    pub(crate) fn require_valid(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(GeometryError::Domain {
                point: x.to_vec(),
                reason: format!("expected {} coordinates", self.dimension),
            });
        }
        if !self.is_valid(x) {
            return Err(GeometryError::Domain {
                point: x.to_vec(),
                reason: "validity predicate fails".into(),
            });
        }
        Ok(())
    }
}

/// A Riemannian metric in a chart, with potential `f` and constant `λ`.
#[derive(Clone)]
pub struct MetricFamily {
    pub chart: Chart,
    metric: MetricOracle,
    potential: ScalarOracle,
    pub lambda: f64,
    pub parameters: BTreeMap<String, f64>,
}

impl fmt::Debug for MetricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricFamily")
            .field("chart", &self.chart)
            .field("lambda", &self.lambda)
            .field("parameters", &self.parameters)
            .finish()
    }
}

/// Analytic derivatives of the metric and potential at a point.
///
/// Layout: `dg[((i * n + j) * n + a)] = ∂_a g_ij`, and further derivative
/// indices are appended in the same way.
#[derive(Debug, Clone)]
pub struct MetricDerivatives {
    pub dimension: usize,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    pub ddg: Vec<f64>,
    pub dddg: Vec<f64>,
    pub f: f64,
    pub df: Vec<f64>,
    pub ddf: Vec<f64>,
    pub dddf: Vec<f64>,
}

/// Worst disagreement between analytic derivatives and central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCheck {
    pub max_relative_error: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance
    }
}

fn partials_of(jets: &[Jet], n: usize, depth: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(jets.len() * n.pow(depth as u32));
    for jet in jets {
        for flat in 0..n.pow(depth as u32) {
            out.push(jet.partial(&unflatten(n, depth, flat)));
        }
    }
    out
}

impl MetricFamily {
    /// Metric with zero potential and `λ = 0`.
    pub fn new(chart: Chart, metric: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> MetricFamily {
        MetricFamily {
            chart,
            metric: Arc::new(metric),
            potential: Arc::new(|x: &[Jet]| x[0].zero_like()),
            lambda: 0.0,
            parameters: BTreeMap::new(),
        }
    }

    pub fn with_potential(mut self, potential: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static, lambda: f64) -> MetricFamily {
        self.potential = Arc::new(potential);
        self.lambda = lambda;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> MetricFamily {
        self.lambda = lambda;
        self
    }

    pub fn with_parameter(mut self, name: &str, value: f64) -> MetricFamily {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn dimension(&self) -> usize {
        self.chart.dimension
    }

    pub fn metric_oracle(&self) -> MetricOracle {
        self.metric.clone()
    }

    pub fn potential_oracle(&self) -> ScalarOracle {
        self.potential.clone()
    }

    pub fn metric_jets(&self, coords: &[Jet]) -> Vec<Jet> {
        let g = (self.metric)(coords);
        assert_eq!(g.len(), self.dimension() * self.dimension(), "metric oracle must return n*n components");
        g
    }

    pub fn potential_jet(&self, coords: &[Jet]) -> Jet {
        (self.potential)(coords)
    }

    pub fn metric_at(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dimension();
        let g = self.metric_jets(&Jet::seed(x, 0));
        DMatrix::from_fn(n, n, |i, j| g[i * n + j].value())
    }

    pub fn potential_at(&self, x: &[f64]) -> f64 {
        self.potential_jet(&Jet::seed(x, 0)).value()
    }

    /// `c·g` with `λ/c` and the same potential; solitons map to solitons.
    pub fn scaled(&self, c: f64) -> MetricFamily {
        let inner = self.metric.clone();
        let mut out = self.clone();
        out.metric = Arc::new(move |x: &[Jet]| inner(x).into_iter().map(|g| g * c).collect());
        out.lambda = self.lambda / c;
        out.parameters.insert("scale".into(), c * self.parameters.get("scale").copied().unwrap_or(1.0));
        out
    }

    /// Potential `f + ε·x₁³`, used as a negative control.
    pub fn perturbed_potential(&self, epsilon: f64) -> MetricFamily {
        let inner = self.potential.clone();
        let mut out = self.clone();
        out.potential = Arc::new(move |x: &[Jet]| inner(x) + x[0].powi(3) * epsilon);
        out.parameters.insert("perturbation".into(), epsilon);
        out
    }

    /// Same metric, constant `λ` replaced.
    pub fn with_wrong_lambda(&self, lambda: f64) -> MetricFamily {
        let mut out = self.clone();
        out.lambda = lambda;
        out
    }

    pub fn check_spd(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.metric_at(x);
        let asym = (&g - g.transpose()).abs().max();
        if asym > 1e-12 * (1.0 + g.abs().max()) {
            return Err(GeometryError::ContractViolation(format!("metric is not symmetric at {x:?}")));
        }
        Cholesky::new(g.clone()).ok_or_else(|| GeometryError::DegenerateMetric { point: x.to_vec() })?;
        Ok(g)
    }

    /// Analytic derivatives of `g` and `f` to third order.
    pub fn derivatives(&self, x: &[f64]) -> Result<MetricDerivatives> {
        self.chart.require_valid(x)?;
        let n = self.dimension();
        let seed = Jet::seed(x, 3);
        let g = self.metric_jets(&seed);
        let f = self.potential_jet(&seed);
        Ok(MetricDerivatives {
            dimension: n,
            g: g.iter().map(Jet::value).collect(),
            dg: partials_of(&g, n, 1),
            ddg: partials_of(&g, n, 2),
            dddg: partials_of(&g, n, 3),
            f: f.value(),
            df: partials_of(std::slice::from_ref(&f), n, 1),
            ddf: partials_of(std::slice::from_ref(&f), n, 2),
            dddf: partials_of(std::slice::from_ref(&f), n, 3),
        })
    }

    /// Compares each analytic derivative level against central differences
    /// of the level below, with step `step`.
    pub fn check_derivative_oracles(&self, x: &[f64], step: f64, tolerance: f64) -> Result<OracleCheck> {
        let n = self.dimension();
        let base = self.derivatives(x)?;
        let mut worst: f64 = 0.0;
        let mut shifted = x.to_vec();
        let mut plus = Vec::with_capacity(n);
        let mut minus = Vec::with_capacity(n);
        for a in 0..n {
            shifted[a] = x[a] + step;
            plus.push(self.derivatives(&shifted)?);
            shifted[a] = x[a] - step;
            minus.push(self.derivatives(&shifted)?);
            shifted[a] = x[a];
        }
        let mut compare = |analytic: &[f64], lower: &dyn Fn(&MetricDerivatives) -> &[f64]| {
            // analytic[(c * n + a)] = ∂_a lower[c]
            let count = lower(&base).len();
            for c in 0..count {
                for a in 0..n {
                    let fd = (lower(&plus[a])[c] - lower(&minus[a])[c]) / (2.0 * step);
                    let exact = analytic[c * n + a];
                    let err = (fd - exact).abs() / (1.0 + exact.abs().max(fd.abs()));
                    worst = worst.max(err);
                }
            }
        };
        compare(&base.dg, &|d| &d.g);
        compare(&base.ddg, &|d| &d.dg);
        compare(&base.dddg, &|d| &d.ddg);
        compare(&base.df, &|d| std::slice::from_ref(&d.f));
        compare(&base.ddf, &|d| &d.df);
        compare(&base.dddf, &|d| &d.ddf);
        Ok(OracleCheck {
            max_relative_error: worst,
            tolerance,
        })
    }

    /// Taylor expansion of the geometry about `x`; `order >= 2` is the
    /// order of the metric expansion, curvature comes out at `order − 2`.
    pub fn expand(&self, x: &[f64], order: usize) -> Result<Expansion> {
        Expansion::new(self, x, order)
    }
}

/// Inverse of a symmetric positive definite jet matrix by Gauss–Jordan
/// elimination (no pivoting needed).
fn invert_jet_matrix(n: usize, m: &[Jet]) -> Vec<Jet> {
    let mut a: Vec<Jet> = m.to_vec();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|k| m[0].constant_like(if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    for col in 0..n {
        let pivot = a[col * n + col].recip();
        for j in 0..n {
            a[col * n + j] = &a[col * n + j] * &pivot;
            inv[col * n + j] = &inv[col * n + j] * &pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col].clone();
            for j in 0..n {
                let da = &factor * &a[col * n + j];
                a[row * n + j] -= da;
                let di = &factor * &inv[col * n + j];
                inv[row * n + j] -= di;
            }
        }
    }
    inv
}

/// Taylor expansion of metric, connection and curvature about one point.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub point: Vec<f64>,
    pub order: usize,
    pub lambda: f64,
    /// `g_ij`, order `K`.
    pub metric: JetTensor,
    /// `g^ij`, order `K`.
    pub inverse_metric: JetTensor,
    /// `Γ^k_ij` laid out `[k, i, j]`, order `K − 1`.
    pub christoffel: JetTensor,
    /// `R_ijkl = R(∂_i, ∂_j, ∂_k, ∂_l)`, order `K − 2`.
    pub riemann: JetTensor,
    /// `Ric_ij`, order `K − 2`.
    pub ricci: JetTensor,
    /// Scalar curvature, order `K − 2`.
    pub scal: Jet,
    /// Potential `f`, order `K`.
    pub potential: Jet,
    frame: DMatrix<f64>,
    coframe: DMatrix<f64>,
}

impl Expansion {
    pub fn new(m: &MetricFamily, x: &[f64], order: usize) -> Result<Expansion> {
        assert!(order >= 2, "curvature needs a metric expansion of order >= 2");
        m.chart.require_valid(x)?;
        let n = m.dimension();
        let g_values = m.check_spd(x)?;
        let chol = Cholesky::new(g_values).ok_or_else(|| GeometryError::DegenerateMetric { point: x.to_vec() })?;
        let lt = chol.l().transpose();
        let frame = lt
            .clone()
            .try_inverse()
            .ok_or_else(|| GeometryError::DegenerateMetric { point: x.to_vec() })?;

        let seed = Jet::seed(x, order);
        let g = m.metric_jets(&seed);
        let ginv = invert_jet_matrix(n, &g);
        let metric = JetTensor::new(n, vec![Slot::Lower; 2], g);
        let inverse_metric = JetTensor::new(n, vec![Slot::Upper; 2], ginv);

        // Γ^k_ij = ½ g^kl (∂_i g_lj + ∂_j g_li − ∂_l g_ij)
        let dg: Vec<Vec<Jet>> = (0..n)
            .map(|a| metric.components.iter().map(|c| c.derivative(a)).collect())
            .collect();
        let dg_at = |a: usize, i: usize, j: usize| &dg[a][i * n + j];
        let lowered = JetTensor::from_fn(n, vec![Slot::Lower; 3], |idx| {
            let (l, i, j) = (idx[0], idx[1], idx[2]);
            (dg_at(i, l, j) + dg_at(j, l, i) - dg_at(l, i, j)) * 0.5
        });
        let christoffel = JetTensor::from_fn(n, vec![Slot::Upper, Slot::Lower, Slot::Lower], |idx| {
            let (k, i, j) = (idx[0], idx[1], idx[2]);
            let mut acc = inverse_metric.get(&[k, 0]) * lowered.get(&[0, i, j]);
            for l in 1..n {
                acc.add_product(inverse_metric.get(&[k, l]), lowered.get(&[l, i, j]));
            }
            acc
        });

        // R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
        let riemann_up = JetTensor::from_fn(n, vec![Slot::Upper, Slot::Lower, Slot::Lower, Slot::Lower], |idx| {
            let (l, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            let mut acc = christoffel.get(&[l, j, k]).derivative(i) - christoffel.get(&[l, i, k]).derivative(j);
            for mm in 0..n {
                acc.add_product(christoffel.get(&[l, i, mm]), christoffel.get(&[mm, j, k]));
                acc -= christoffel.get(&[l, j, mm]) * christoffel.get(&[mm, i, k]);
            }
            acc
        });
        let riemann = JetTensor::from_fn(n, vec![Slot::Lower; 4], |idx| {
            let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            let mut acc = metric.get(&[l, 0]) * riemann_up.get(&[0, i, j, k]);
            for mm in 1..n {
                acc.add_product(metric.get(&[l, mm]), riemann_up.get(&[mm, i, j, k]));
            }
            acc
        });
        let ricci = JetTensor::from_fn(n, vec![Slot::Lower; 2], |idx| {
            let mut acc = riemann_up.get(&[0, 0, idx[0], idx[1]]).clone();
            for i in 1..n {
                acc += riemann_up.get(&[i, i, idx[0], idx[1]]);
            }
            acc
        });
        let mut scal = inverse_metric.get(&[0, 0]) * ricci.get(&[0, 0]);
        for flat in 1..n * n {
            let (j, k) = (flat / n, flat % n);
            scal.add_product(inverse_metric.get(&[j, k]), ricci.get(&[j, k]));
        }
        let potential = m.potential_jet(&seed);

        Ok(Expansion {
            point: x.to_vec(),
            order,
            lambda: m.lambda,
            metric,
            inverse_metric,
            christoffel,
            riemann,
            ricci,
            scal,
            potential,
            frame,
            coframe: lt,
        })
    }

    pub fn dimension(&self) -> usize {
        self.metric.dimension
    }

    /// Columns are a g-orthonormal frame (Gram–Schmidt of the coordinate
    /// basis), in coordinate components.
    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn coframe(&self) -> &DMatrix<f64> {
        &self.coframe
    }

    pub fn covariant_derivative(&self, t: &JetTensor) -> JetTensor {
        t.covariant_derivative(&self.christoffel)
    }

    /// `∇^i f`, order `K − 1`.
    pub fn potential_gradient(&self) -> Vec<Jet> {
        self.raise_vector(&self.scalar_gradient(&self.potential))
    }

    pub fn scalar_gradient(&self, u: &Jet) -> Vec<Jet> {
        (0..self.dimension()).map(|a| u.derivative(a)).collect()
    }

    pub fn raise_vector(&self, covector: &[Jet]) -> Vec<Jet> {
        let n = self.dimension();
        (0..n)
            .map(|i| {
                let mut acc = self.inverse_metric.get(&[i, 0]) * &covector[0];
                for (j, c) in covector.iter().enumerate().skip(1) {
                    acc.add_product(self.inverse_metric.get(&[i, j]), c);
                }
                acc
            })
            .collect()
    }

    /// `∇_a ∇_b u`.
    pub fn hessian(&self, u: &Jet) -> JetTensor {
        let du = self.covariant_derivative(&JetTensor::scalar(u.clone()));
        self.covariant_derivative(&du)
    }

    /// `Ric^i_j`.
    pub fn ricci_operator(&self) -> JetTensor {
        let n = self.dimension();
        JetTensor::from_fn(n, vec![Slot::Upper, Slot::Lower], |idx| {
            let mut acc = self.inverse_metric.get(&[idx[0], 0]) * self.ricci.get(&[0, idx[1]]);
            for k in 1..n {
                acc.add_product(self.inverse_metric.get(&[idx[0], k]), self.ricci.get(&[k, idx[1]]));
            }
            acc
        })
    }

    /// `Δ_f T = tr ∇²T − ∇_{∇f} T`; the order drops by two.
    pub fn f_laplacian(&self, t: &JetTensor) -> JetTensor {
        let dt = self.covariant_derivative(t);
        let ddt = self.covariant_derivative(&dt);
        let rough = ddt.trace_first_pair(&self.inverse_metric);
        let drift = dt.contract_first(&self.potential_gradient());
        rough.sub(&drift)
    }

    /// `Ric + Hess f − λ g` at the base point.
    pub fn soliton_tensor(&self) -> TensorField {
        let hess = self.hessian(&self.potential).values(&self.point);
        let ric = self.ricci.values(&self.point);
        let g = self.metric.values(&self.point);
        let components = ric
            .components
            .iter()
            .zip(&hess.components)
            .zip(&g.components)
            .map(|((r, h), g)| r + h - self.lambda * g)
            .collect();
        TensorField { components, ..ric }
    }

    /// Components in the orthonormal frame.
    pub fn to_frame(&self, t: &TensorField) -> TensorField {
        to_frame(t, &self.frame, &self.coframe)
    }

    /// Frobenius norm in the orthonormal frame.
    pub fn frame_norm(&self, t: &TensorField) -> f64 {
        self.to_frame(t).components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Re-expresses coordinate components in a frame: lower slots contract
/// with `frame` (columns = frame vectors), upper slots with `coframe`.
pub fn to_frame(t: &TensorField, frame: &DMatrix<f64>, coframe: &DMatrix<f64>) -> TensorField {
    let n = t.dimension;
    let rank = t.rank();
    let mut comps = t.components.clone();
    for (s, slot) in t.slots.iter().enumerate() {
        let stride = n.pow((rank - 1 - s) as u32);
        let mut next = vec![0.0; comps.len()];
        for (flat, out) in next.iter_mut().enumerate() {
            let a = (flat / stride) % n;
            let base = flat - a * stride;
            let mut acc = 0.0;
            for i in 0..n {
                let w = match slot {
                    Slot::Lower => frame[(i, a)],
                    Slot::Upper => coframe[(a, i)],
                };
                acc += w * comps[base + i * stride];
            }
            *out = acc;
        }
        comps = next;
    }
    TensorField {
        components: comps,
        symmetry: t.symmetry,
        ..t.clone()
    }
}

/// Riemann, Ricci (both index positions) and scalar curvature at a point.
#[derive(Debug, Clone)]
pub struct CurvatureSuite {
    pub riemann: TensorField,
    pub ricci: TensorField,
    pub ricci_op: TensorField,
    pub scal: f64,
}

/// Gradient (index raised) and Hessian of a scalar.
#[derive(Debug, Clone)]
pub struct GradHess {
    pub grad: TensorField,
    pub hess: TensorField,
}

/// `Γ^k_ij` at `x`, laid out `[k, i, j]`.
pub fn christoffel(m: &MetricFamily, x: &[f64]) -> Result<TensorField> {
    let e = Expansion::new(m, x, 2)?;
    Ok(e.christoffel.values(x))
}

pub fn curvature_suite(m: &MetricFamily, x: &[f64]) -> Result<CurvatureSuite> {
    let e = Expansion::new(m, x, 2)?;
    Ok(CurvatureSuite {
        riemann: e.riemann.values(x).with_symmetry(Symmetry::RiemannType)?,
        ricci: e.ricci.values(x).with_symmetry(Symmetry::Symmetric)?,
        ricci_op: e.ricci_operator().values(x),
        scal: e.scal.value(),
    })
}

fn field_expansion(m: &MetricFamily, x: &[f64], field: FieldOracle<'_>, order: usize) -> Result<(Expansion, JetTensor)> {
    let e = Expansion::new(m, x, order.max(2))?;
    let t = field(&Jet::seed(x, order));
    if t.dimension != m.dimension() {
        return Err(GeometryError::ContractViolation(format!(
            "field has dimension {}, metric has {}",
            t.dimension,
            m.dimension()
        )));
    }
    Ok((e, t))
}

/// `∇T` at `x`, derivative slot first.
pub fn covariant_derivative(m: &MetricFamily, field: FieldOracle<'_>, x: &[f64]) -> Result<TensorField> {
    let (e, t) = field_expansion(m, x, field, 2)?;
    Ok(e.covariant_derivative(&t).values(x))
}

pub fn hessian_and_gradient(m: &MetricFamily, u: &dyn Fn(&[Jet]) -> Jet, x: &[f64]) -> Result<GradHess> {
    let e = Expansion::new(m, x, 2)?;
    let u = u(&Jet::seed(x, 2));
    let grad = JetTensor::new(e.dimension(), vec![Slot::Upper], e.raise_vector(&e.scalar_gradient(&u)));
    Ok(GradHess {
        grad: grad.values(x),
        hess: e.hessian(&u).values(x).with_symmetry(Symmetry::Symmetric)?,
    })
}

/// `Δ_f T` at `x`, using the potential of `m`.
pub fn f_laplacian(m: &MetricFamily, field: FieldOracle<'_>, x: &[f64]) -> Result<TensorField> {
    let (e, t) = field_expansion(m, x, field, 3)?;
    Ok(e.f_laplacian(&t).values(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn flat(n: usize) -> MetricFamily {
        MetricFamily::new(Chart::cartesian(n), move |x: &[Jet]| {
            (0..n * n).map(|k| x[0].constant_like(if k / n == k % n { 1.0 } else { 0.0 })).collect()
        })
    }

    fn sphere2() -> MetricFamily {
        let chart = Chart::new(vec!["theta".into(), "phi".into()], |x| x[0] > 0.0 && x[0] < std::f64::consts::PI);
        MetricFamily::new(chart, |x: &[Jet]| {
            let s = x[0].sin();
            vec![x[0].constant_like(1.0), x[0].zero_like(), x[0].zero_like(), s.square()]
        })
    }

    fn hyperbolic_half_plane() -> MetricFamily {
        let chart = Chart::new(vec!["x".into(), "y".into()], |x| x[1] > 0.0);
        MetricFamily::new(chart, |x: &[Jet]| {
            let w = x[1].powi(-2);
            vec![w.clone(), x[0].zero_like(), x[0].zero_like(), w]
        })
    }

    #[test]
    fn flat_christoffels_vanish() {
        let gamma = christoffel(&flat(2), &[1.0, 2.0]).unwrap();
        assert!(gamma.max_abs() == 0.0);
    }

    #[test]
    fn sphere_equator_christoffels() {
        let gamma = christoffel(&sphere2(), &[FRAC_PI_2, 0.0]).unwrap();
        // Γ^θ_φφ = −sinθcosθ, Γ^φ_θφ = cotθ
        assert!(gamma.get(&[0, 1, 1]).abs() < 1e-15);
        assert!(gamma.get(&[1, 0, 1]).abs() < 1e-15);
        let off = christoffel(&sphere2(), &[0.7, 0.0]).unwrap();
        assert!((off.get(&[0, 1, 1]) + 0.7f64.sin() * 0.7f64.cos()).abs() < 1e-14);
        assert!((off.get(&[1, 0, 1]) - 0.7f64.cos() / 0.7f64.sin()).abs() < 1e-14);
        assert!((off.get(&[1, 1, 0]) - off.get(&[1, 0, 1])).abs() < 1e-15);
    }

    #[test]
    fn sign_convention_is_locked_by_the_sphere() {
        let s = curvature_suite(&sphere2(), &[1.1, 0.3]).unwrap();
        assert!((s.scal - 2.0).abs() < 1e-13);
        let h = curvature_suite(&hyperbolic_half_plane(), &[0.2, 1.3]).unwrap();
        assert!((h.scal + 2.0).abs() < 1e-13);
    }

    #[test]
    fn domain_and_degeneracy_errors() {
        assert!(matches!(christoffel(&sphere2(), &[-0.5, 0.0]), Err(GeometryError::Domain { .. })));
        let bad = MetricFamily::new(Chart::cartesian(2), |x: &[Jet]| {
            vec![x[0].constant_like(1.0), x[0].zero_like(), x[0].zero_like(), x[0].constant_like(-1.0)]
        });
        assert!(matches!(curvature_suite(&bad, &[0.0, 0.0]), Err(GeometryError::DegenerateMetric { .. })));
    }

    #[test]
    fn jet_inverse_matches_inverse_of_values() {
        let m = sphere2();
        let e = m.expand(&[0.9, 0.1], 3).unwrap();
        let gi = e.inverse_metric.values(&e.point);
        assert!((gi.get(&[1, 1]) - 1.0 / 0.9f64.sin().powi(2)).abs() < 1e-13);
        // ∂_θ g^φφ = −2 cosθ / sin³θ
        let d = e.inverse_metric.get(&[1, 1]).partial(&[0]);
        assert!((d + 2.0 * 0.9f64.cos() / 0.9f64.sin().powi(3)).abs() < 1e-12);
    }

    #[test]
    fn frame_is_orthonormal() {
        let m = sphere2();
        let e = m.expand(&[0.9, 0.1], 2).unwrap();
        let g = m.metric_at(&[0.9, 0.1]);
        let f = e.frame();
        let id = f.transpose() * g * f;
        assert!((id - DMatrix::identity(2, 2)).abs().max() < 1e-14);
    }
}
