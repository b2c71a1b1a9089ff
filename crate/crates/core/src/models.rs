//! Closed-form soliton models, warped products, and the surface-level
//! checks that go with them.
//!
//! Round spheres and hyperbolic spaces are written in geodesic polar
//! coordinates, i.e. as nested warped products `dr² + h(r)² g₀`, so the
//! warped-product machinery applies to them directly. Cylinders are the
//! warped case `h ≡ 1` over a round or hyperbolic fiber.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{Chart, Expansion, MetricFamily};
use crate::error::{GeometryError, Result};
use crate::jet::Jet;
use crate::verify::{
    per_point, soliton_residual_report, IdentityId, PointResidual, ResidualReport, SampleGrid, DEFAULT_MARGIN,
    SOLITON_TOLERANCE,
};

/// Charts stay this far from warped-product tips.
pub const TIP_MARGIN: f64 = 0.05;
/// Largest dimension the builders accept.
pub const MAX_MODEL_DIMENSION: usize = 6;
const GATE_POINTS: usize = 50;
const GATE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolitonKind {
    Shrinking,
    Steady,
    Expanding,
}

impl SolitonKind {
    pub fn from_lambda(lambda: f64) -> SolitonKind {
        if lambda > 0.0 {
            SolitonKind::Shrinking
        } else if lambda < 0.0 {
            SolitonKind::Expanding
        } else {
            SolitonKind::Steady
        }
    }
}

/// Labels the classifier can return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ModelClass {
    #[serde(rename = "flat ℝⁿ")]
    Flat,
    #[serde(rename = "Sⁿ-Einstein")]
    SphereEinstein,
    #[serde(rename = "S^{n−1}×ℝ-split")]
    SphereSplit,
    #[serde(rename = "Hⁿ-Einstein")]
    HyperbolicEinstein,
    #[serde(rename = "H^{n−1}×ℝ-split")]
    HyperbolicSplit,
    #[serde(rename = "Einstein-other")]
    EinsteinOther,
    #[serde(rename = "N×ℝᵏ-rigid")]
    RigidProduct,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl ModelClass {
    pub const ALL: [ModelClass; 8] = [
        ModelClass::Flat,
        ModelClass::SphereEinstein,
        ModelClass::SphereSplit,
        ModelClass::HyperbolicEinstein,
        ModelClass::HyperbolicSplit,
        ModelClass::EinsteinOther,
        ModelClass::RigidProduct,
        ModelClass::Inconclusive,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ModelClass::Flat => "flat ℝⁿ",
            ModelClass::SphereEinstein => "Sⁿ-Einstein",
            ModelClass::SphereSplit => "S^{n−1}×ℝ-split",
            ModelClass::HyperbolicEinstein => "Hⁿ-Einstein",
            ModelClass::HyperbolicSplit => "H^{n−1}×ℝ-split",
            ModelClass::EinsteinOther => "Einstein-other",
            ModelClass::RigidProduct => "N×ℝᵏ-rigid",
            ModelClass::Inconclusive => "inconclusive",
        }
    }

    /// Accepts the display label or a plain ASCII alias.
    pub fn parse(s: &str) -> Option<ModelClass> {
        let alias = match s {
            "flat" => Some(ModelClass::Flat),
            "sphere-einstein" => Some(ModelClass::SphereEinstein),
            "sphere-split" => Some(ModelClass::SphereSplit),
            "hyperbolic-einstein" => Some(ModelClass::HyperbolicEinstein),
            "hyperbolic-split" => Some(ModelClass::HyperbolicSplit),
            "einstein-other" => Some(ModelClass::EinsteinOther),
            "rigid" => Some(ModelClass::RigidProduct),
            _ => None,
        };
        alias.or_else(|| ModelClass::ALL.into_iter().find(|c| c.label() == s))
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A function of one variable, written over jets.
pub type Profile = Arc<dyn Fn(&Jet) -> Jet + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyTag {
    /// `h(r₀) = 0`, `h′(r₀) = 1` at the lower end.
    PlaneLike,
    /// `h` vanishes at both ends with `h′ = ±1`.
    SphereLike,
    /// `h > 0` on the closed domain.
    CylinderLike,
}

/// `g = dr² + h(r)² g₀` on `r_domain × fiber`.
#[derive(Clone)]
pub struct WarpedProductSpec {
    pub h: Profile,
    pub fiber: MetricFamily,
    pub topology: TopologyTag,
    pub r_domain: (f64, f64),
    /// `∫ h dr`, whose Hessian is `h′ g` on the warped product.
    pub h_integral: Option<Profile>,
}

impl fmt::Debug for WarpedProductSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WarpedProductSpec")
            .field("fiber", &self.fiber)
            .field("topology", &self.topology)
            .field("r_domain", &self.r_domain)
            .finish()
    }
}

fn eval_profile(p: &Profile, r: f64, order: usize) -> Jet {
    p(&Jet::variable(1, order, 0, r))
}

impl WarpedProductSpec {
    pub fn h_at(&self, r: f64) -> f64 {
        eval_profile(&self.h, r, 0).value()
    }

    /// `(h, h′, h″)` at `r`.
    pub fn h_derivatives(&self, r: f64) -> [f64; 3] {
        let j = eval_profile(&self.h, r, 2);
        [j.value(), j.partial(&[0]), j.partial(&[0, 0])]
    }

    /// Open interval on which the chart is valid.
    pub fn valid_r_range(&self) -> (f64, f64) {
        let (lo, hi) = self.r_domain;
        match self.topology {
            TopologyTag::PlaneLike => (lo + TIP_MARGIN, hi),
            TopologyTag::SphereLike => (lo + TIP_MARGIN, hi - TIP_MARGIN),
            TopologyTag::CylinderLike => (lo, hi),
        }
    }

    pub fn check(&self) -> Result<()> {
        let (lo, hi) = self.r_domain;
        if !(lo < hi) || lo.is_nan() {
            return Err(GeometryError::InvalidWarp(format!("empty r-domain ({lo}, {hi})")));
        }
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        match self.topology {
            TopologyTag::PlaneLike => {
                let [h0, dh0, _] = self.h_derivatives(lo);
                if !close(h0, 0.0) || !close(dh0, 1.0) {
                    return Err(GeometryError::InvalidWarp(format!(
                        "plane-like tip needs h = 0, h' = 1 at r = {lo}; got {h0}, {dh0}"
                    )));
                }
            }
            TopologyTag::SphereLike => {
                if !hi.is_finite() {
                    return Err(GeometryError::InvalidWarp("sphere-like domain must be bounded".into()));
                }
                let [h0, dh0, _] = self.h_derivatives(lo);
                let [h1, dh1, _] = self.h_derivatives(hi);
                let scale = 1e-12 * (1.0 + hi.abs());
                if h0.abs() > scale || h1.abs() > scale || !close(dh0, 1.0) || (dh1 + 1.0).abs() > 1e-12 {
                    return Err(GeometryError::InvalidWarp(format!(
                        "sphere-like ends need h = 0, h' = ±1; got ({h0}, {dh0}) and ({h1}, {dh1})"
                    )));
                }
            }
            TopologyTag::CylinderLike => {}
        }
        // positivity on the interior; unbounded ends are probed out to 50
        let a = if lo.is_finite() { lo } else { -50.0 };
        let b = if hi.is_finite() { hi } else { a.max(0.0) + 50.0 };
        let steps = 400;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            let r = a + (b - a) * t;
            let interior = r > lo && r < hi;
            let must_be_positive = interior || self.topology == TopologyTag::CylinderLike;
            if must_be_positive && !(self.h_at(r) > 0.0) {
                return Err(GeometryError::InvalidWarp(format!("h({r}) = {} is not positive", self.h_at(r))));
            }
        }
        Ok(())
    }
}

/// Metric `dr² + h² g₀` in coordinates `(r, fiber coordinates)`.
pub fn build_warped_product(spec: &WarpedProductSpec) -> Result<MetricFamily> {
    spec.check()?;
    let k = spec.fiber.dimension();
    let n = k + 1;
    let (rlo, rhi) = spec.valid_r_range();
    let fiber_validity = spec.fiber.chart.validity();
    let mut names = vec!["r".to_string()];
    names.extend(spec.fiber.chart.coordinate_names.iter().cloned());
    let chart = Chart::new(names, move |x| x[0] > rlo && x[0] < rhi && fiber_validity(&x[1..]));
    let h = spec.h.clone();
    let fiber = spec.fiber.metric_oracle();
    Ok(MetricFamily::new(chart, move |x: &[Jet]| {
        let h2 = h(&x[0]).square();
        let g0 = fiber(&x[1..]);
        let mut g = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                g.push(match (i, j) {
                    (0, 0) => x[0].constant_like(1.0),
                    (0, _) | (_, 0) => x[0].zero_like(),
                    _ => &h2 * &g0[(i - 1) * k + (j - 1)],
                });
            }
        }
        g
    }))
}

/// `ℝᵏ × N` with coordinates `(t₁…t_k, N coordinates)`.
pub fn euclidean_product(k: usize, fiber: &MetricFamily) -> MetricFamily {
    let m = fiber.dimension();
    let n = k + m;
    let fiber_validity = fiber.chart.validity();
    let mut names: Vec<String> = (1..=k).map(|i| format!("t{i}")).collect();
    names.extend(fiber.chart.coordinate_names.iter().cloned());
    let chart = Chart::new(names, move |x| fiber_validity(&x[k..]));
    let oracle = fiber.metric_oracle();
    MetricFamily::new(chart, move |x: &[Jet]| {
        let g0 = oracle(&x[k..]);
        let mut g = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                g.push(if i < k || j < k {
                    x[0].constant_like(if i == j { 1.0 } else { 0.0 })
                } else {
                    g0[(i - k) * m + (j - k)].clone()
                });
            }
        }
        g
    })
}

/// Unit circle `dφ²`.
fn unit_circle() -> MetricFamily {
    MetricFamily::new(Chart::everywhere(vec!["phi".into()]), |x: &[Jet]| vec![x[0].constant_like(1.0)])
}

fn sphere_spec(k: usize, a: f64) -> WarpedProductSpec {
    WarpedProductSpec {
        h: Arc::new(move |r: &Jet| (r / a).sin() * a),
        fiber: unit_sphere(k - 1),
        topology: TopologyTag::SphereLike,
        r_domain: (0.0, PI * a),
        h_integral: Some(Arc::new(move |r: &Jet| (r / a).cos() * (-a * a))),
    }
}

fn hyperbolic_spec(k: usize, a: f64) -> WarpedProductSpec {
    WarpedProductSpec {
        h: Arc::new(move |r: &Jet| (r / a).sinh() * a),
        fiber: unit_sphere(k - 1),
        topology: TopologyTag::PlaneLike,
        r_domain: (0.0, f64::INFINITY),
        h_integral: Some(Arc::new(move |r: &Jet| (r / a).cosh() * (a * a))),
    }
}

/// Unit `Sᵏ` in nested polar angles (`k = 1` is the circle).
pub fn unit_sphere(k: usize) -> MetricFamily {
    assert!(k >= 1);
    if k == 1 {
        return unit_circle();
    }
    let mut m = build_warped_product(&sphere_spec(k, 1.0)).expect("unit sphere profile is valid");
    m.chart.coordinate_names[0] = format!("theta{}", k - 1);
    m
}

/// `Sᵏ(a)`.
pub fn round_sphere_metric(k: usize, a: f64) -> MetricFamily {
    if k == 1 {
        return unit_circle().scaled(a * a);
    }
    build_warped_product(&sphere_spec(k, a)).expect("sphere profile is valid")
}

/// `Hᵏ(a)`; `k = 1` is a line.
pub fn hyperbolic_metric(k: usize, a: f64) -> MetricFamily {
    if k == 1 {
        return MetricFamily::new(Chart::everywhere(vec!["s".into()]), |x: &[Jet]| vec![x[0].constant_like(1.0)]);
    }
    build_warped_product(&hyperbolic_spec(k, a)).expect("hyperbolic profile is valid")
}

/// One quadrature axis: `doubled` axes are widened to test for divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeAxis {
    pub lower: f64,
    pub upper: f64,
    pub doubled: bool,
}

impl VolumeAxis {
    pub fn fixed(lower: f64, upper: f64) -> VolumeAxis {
        VolumeAxis { lower, upper, doubled: false }
    }

    pub fn growing(lower: f64, upper: f64) -> VolumeAxis {
        VolumeAxis { lower, upper, doubled: true }
    }

    fn doubled(&self) -> VolumeAxis {
        if self.doubled {
            let mid = 0.5 * (self.lower + self.upper);
            let half = self.upper - self.lower;
            VolumeAxis { lower: mid - half, upper: mid + half, doubled: true }
        } else {
            *self
        }
    }
}

/// A metric asserted to satisfy `Ric + Hess f = λg`.
#[derive(Debug, Clone)]
pub struct SolitonInstance {
    pub metric: MetricFamily,
    pub kind: SolitonKind,
    pub label: String,
    pub expected_class: Option<ModelClass>,
    /// Default sampling box.
    pub sample_bounds: Vec<(f64, f64)>,
    pub warped: Option<WarpedProductSpec>,
    /// Default quadrature box for the f-volume.
    pub volume_box: Option<Vec<VolumeAxis>>,
}

impl SolitonInstance {
    /// Checks the soliton residual on 50 seeded points of the sample box.
    pub fn new(metric: MetricFamily, label: &str, expected_class: Option<ModelClass>, sample_bounds: Vec<(f64, f64)>) -> Result<SolitonInstance> {
        let inst = SolitonInstance::unchecked(metric, label, expected_class, sample_bounds);
        let grid = SampleGrid::sample(&inst.metric.chart, &inst.sample_bounds, GATE_POINTS, GATE_SEED, DEFAULT_MARGIN)?;
        let gate = soliton_residual_report(&inst.metric, &grid, SOLITON_TOLERANCE)?;
        if !gate.passed() {
            return Err(GeometryError::SolitonResidualFailed {
                max_residual: gate.max_residual,
                tolerance: SOLITON_TOLERANCE,
            });
        }
        Ok(inst)
    }

    /// No residual check; for negative controls.
    pub fn unchecked(metric: MetricFamily, label: &str, expected_class: Option<ModelClass>, sample_bounds: Vec<(f64, f64)>) -> SolitonInstance {
        SolitonInstance {
            kind: SolitonKind::from_lambda(metric.lambda),
            metric,
            label: label.to_string(),
            expected_class,
            sample_bounds,
            warped: None,
            volume_box: None,
        }
    }

    fn with_warped(mut self, spec: WarpedProductSpec) -> Self {
        self.warped = Some(spec);
        self
    }

    fn with_volume_box(mut self, axes: Vec<VolumeAxis>) -> Self {
        self.volume_box = Some(axes);
        self
    }

    pub fn dimension(&self) -> usize {
        self.metric.dimension()
    }

    pub fn lambda(&self) -> f64 {
        self.metric.lambda
    }

    /// Potential `f + ε·x₁³`; no longer a soliton, expected to be
    /// classified inconclusive.
    pub fn perturbed(&self, epsilon: f64) -> SolitonInstance {
        let mut out = self.clone();
        out.metric = self.metric.perturbed_potential(epsilon);
        out.label = format!("{}+{epsilon}x1^3", self.label);
        out.expected_class = Some(ModelClass::Inconclusive);
        out.warped = None;
        out
    }

    /// `c·g`, `λ/c`, same potential: again a soliton.
    pub fn scaled(&self, c: f64) -> SolitonInstance {
        let mut out = self.clone();
        out.metric = self.metric.scaled(c);
        out.kind = SolitonKind::from_lambda(out.metric.lambda);
        out.label = format!("{}*{c}", self.label);
        out.warped = None;
        out.volume_box = None;
        out
    }

    pub fn default_grid(&self, count: usize, seed: u64) -> Result<SampleGrid> {
        SampleGrid::sample(&self.metric.chart, &self.sample_bounds, count, seed, DEFAULT_MARGIN)
    }
}

fn quadratic_potential(lambda: f64, k: usize) -> impl Fn(&[Jet]) -> Jet + Send + Sync + 'static {
    move |x: &[Jet]| {
        let mut acc = x[0].zero_like();
        for t in &x[..k] {
            acc.add_product(t, t);
        }
        acc * (0.5 * lambda)
    }
}

fn zero_potential(x: &[Jet]) -> Jet {
    x[0].zero_like()
}

/// Sample box for nested polar angles after the radial coordinate.
fn angle_bounds(k: usize) -> Vec<(f64, f64)> {
    // k fiber coordinates: k−1 polar angles then the circle angle
    let mut b = vec![(0.15, PI - 0.15); k.saturating_sub(1)];
    b.push((0.0, 2.0 * PI));
    b
}

fn angle_volume(k: usize) -> Vec<VolumeAxis> {
    let mut b = vec![VolumeAxis::fixed(0.0, PI); k.saturating_sub(1)];
    b.push(VolumeAxis::fixed(0.0, 2.0 * PI));
    b
}

struct Params<'a> {
    model: &'a str,
    values: &'a BTreeMap<String, f64>,
}

impl Params<'_> {
    fn check_known(&self, known: &[&str]) -> Result<()> {
        match self.values.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            Some((k, v)) => Err(GeometryError::InvalidParameter {
                name: k.clone(),
                value: *v,
                reason: format!("not a parameter of {}", self.model),
            }),
            None => Ok(()),
        }
    }

    fn real(&self, name: &str, default: f64) -> Result<f64> {
        let v = self.values.get(name).copied().unwrap_or(default);
        if !v.is_finite() {
            return Err(GeometryError::InvalidParameter {
                name: name.into(),
                value: v,
                reason: "must be finite".into(),
            });
        }
        Ok(v)
    }

    fn positive(&self, name: &str, default: f64) -> Result<f64> {
        let v = self.real(name, default)?;
        if v <= 0.0 {
            return Err(GeometryError::InvalidParameter {
                name: name.into(),
                value: v,
                reason: "must be positive".into(),
            });
        }
        Ok(v)
    }

    fn integer(&self, name: &str, default: usize, min: usize, max: usize) -> Result<usize> {
        let v = self.real(name, default as f64)?;
        if v.fract() != 0.0 || v < min as f64 || v > max as f64 {
            return Err(GeometryError::InvalidParameter {
                name: name.into(),
                value: v,
                reason: format!("must be an integer in [{min}, {max}]"),
            });
        }
        Ok(v as usize)
    }
}

/// Builder names, parameters and expected classes.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub parameters: Vec<ParameterSpec>,
    pub expected_class: &'static str,
    pub note: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParameterSpec {
    pub name: &'static str,
    pub default: f64,
    pub range: &'static str,
}

const fn param(name: &'static str, default: f64, range: &'static str) -> ParameterSpec {
    ParameterSpec { name, default, range }
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "gaussian",
            parameters: vec![param("n", 3.0, "integer 1..=6"), param("lambda", 0.5, "real")],
            expected_class: ModelClass::Flat.label(),
            note: "flat ℝⁿ, f = λ|x|²/2; shrinking, steady or expanding by sign of λ",
        },
        CatalogEntry {
            name: "round_sphere",
            parameters: vec![param("n", 3.0, "integer 2..=6"), param("a", 1.0, "radius > 0")],
            expected_class: ModelClass::SphereEinstein.label(),
            note: "shrinking, Sⁿ(a), f = 0, λ = (n−1)/a²",
        },
        CatalogEntry {
            name: "cylinder",
            parameters: vec![param("n", 3.0, "integer 3..=6"), param("a", 1.0, "radius > 0")],
            expected_class: ModelClass::SphereSplit.label(),
            note: "shrinking, S^{n−1}(a)×ℝ, f = λt²/2, λ = (n−2)/a²",
        },
        CatalogEntry {
            name: "hyperbolic",
            parameters: vec![param("n", 3.0, "integer 2..=6"), param("a", 1.0, "curvature radius > 0")],
            expected_class: ModelClass::HyperbolicEinstein.label(),
            note: "expanding, Hⁿ(a), f = 0, λ = −(n−1)/a²",
        },
        CatalogEntry {
            name: "hyperbolic_cylinder",
            parameters: vec![param("n", 3.0, "integer 3..=6"), param("a", 1.0, "curvature radius > 0")],
            expected_class: ModelClass::HyperbolicSplit.label(),
            note: "expanding, H^{n−1}(a)×ℝ, f = λt²/2, λ = −(n−2)/a²",
        },
        CatalogEntry {
            name: "cigar",
            parameters: vec![],
            expected_class: ModelClass::Inconclusive.label(),
            note: "steady, n=2, h=tanh r, f = −2 log cosh r",
        },
        CatalogEntry {
            name: "einstein_product",
            parameters: vec![
                param("m", 2.0, "Einstein factor dimension 2..=5"),
                param("k", 2.0, "Euclidean factor dimension 1..=4, m + k <= 6"),
                param("a", 1.0, "radius > 0"),
                param("sign", 1.0, "+1 round factor, -1 hyperbolic factor"),
            ],
            expected_class: ModelClass::RigidProduct.label(),
            note: "rigid N^m(a)×ℝᵏ, f = λ|t|²/2 (k = 1 is the corresponding split cylinder)",
        },
    ]
}

/// Builds a catalog model; every instance passes the residual gate.
pub fn build_model(name: &str, params: &BTreeMap<String, f64>) -> Result<SolitonInstance> {
    let p = Params { model: name, values: params };
    let d = MAX_MODEL_DIMENSION;
    match name {
        "gaussian" => {
            p.check_known(&["n", "lambda"])?;
            let n = p.integer("n", 3, 1, d)?;
            let lambda = p.real("lambda", 0.5)?;
            let metric = MetricFamily::new(Chart::cartesian(n), move |x: &[Jet]| {
                (0..n * n).map(|k| x[0].constant_like(if k / n == k % n { 1.0 } else { 0.0 })).collect()
            })
            .with_potential(quadratic_potential(lambda, n), lambda)
            .with_parameter("n", n as f64)
            .with_parameter("lambda", lambda);
            let half = if lambda > 0.0 { 6.0 * (2.0 / lambda).sqrt() } else { 8.0 };
            let inst = SolitonInstance::new(metric, &format!("gaussian(n={n}, λ={lambda})"), Some(ModelClass::Flat), vec![(-2.0, 2.0); n])?;
            Ok(inst.with_volume_box(vec![VolumeAxis::growing(-half, half); n]))
        }
        "round_sphere" => {
            p.check_known(&["n", "a"])?;
            let n = p.integer("n", 3, 2, d)?;
            let a = p.positive("a", 1.0)?;
            let lambda = (n as f64 - 1.0) / (a * a);
            let spec = sphere_spec(n, a);
            let metric = build_warped_product(&spec)?
                .with_potential(zero_potential, lambda)
                .with_parameter("n", n as f64)
                .with_parameter("a", a);
            let mut bounds = vec![(0.25 * a, (PI - 0.25) * a)];
            bounds.extend(angle_bounds(n - 1));
            let mut vol = vec![VolumeAxis::fixed(0.0, PI * a)];
            vol.extend(angle_volume(n - 1));
            let inst = SolitonInstance::new(metric, &format!("round_sphere(n={n}, a={a})"), Some(ModelClass::SphereEinstein), bounds)?;
            Ok(inst.with_warped(spec).with_volume_box(vol))
        }
        "cylinder" | "hyperbolic_cylinder" => {
            p.check_known(&["n", "a"])?;
            let n = p.integer("n", 3, 3, d)?;
            let a = p.positive("a", 1.0)?;
            let round = name == "cylinder";
            build_cylinder(n - 1, a, round, name)
        }
        "hyperbolic" => {
            p.check_known(&["n", "a"])?;
            let n = p.integer("n", 3, 2, d)?;
            let a = p.positive("a", 1.0)?;
            let lambda = -(n as f64 - 1.0) / (a * a);
            let spec = hyperbolic_spec(n, a);
            let metric = build_warped_product(&spec)?
                .with_potential(zero_potential, lambda)
                .with_parameter("n", n as f64)
                .with_parameter("a", a);
            let mut bounds = vec![(0.25 * a, 2.0 * a)];
            bounds.extend(angle_bounds(n - 1));
            let inst = SolitonInstance::new(metric, &format!("hyperbolic(n={n}, a={a})"), Some(ModelClass::HyperbolicEinstein), bounds)?;
            Ok(inst.with_warped(spec))
        }
        "cigar" => {
            p.check_known(&[])?;
            let spec = cigar_spec();
            let metric = build_warped_product(&spec)?.with_potential(|x: &[Jet]| x[0].cosh().ln() * -2.0, 0.0);
            let inst = SolitonInstance::new(metric, "cigar", Some(ModelClass::Inconclusive), vec![(0.1, 3.0), (0.0, 2.0 * PI)])?;
            Ok(inst.with_warped(spec))
        }
        "einstein_product" => {
            p.check_known(&["m", "k", "a", "sign"])?;
            let m = p.integer("m", 2, 2, d - 1)?;
            let k = p.integer("k", 2, 1, d - 1)?;
            if m + k > d {
                return Err(GeometryError::InvalidParameter {
                    name: "k".into(),
                    value: k as f64,
                    reason: format!("m + k must be at most {d}"),
                });
            }
            let a = p.positive("a", 1.0)?;
            let sign = p.real("sign", 1.0)?;
            if sign != 1.0 && sign != -1.0 {
                return Err(GeometryError::InvalidParameter {
                    name: "sign".into(),
                    value: sign,
                    reason: "must be +1 or -1".into(),
                });
            }
            if k == 1 {
                return build_cylinder(m, a, sign > 0.0, name);
            }
            let round = sign > 0.0;
            let fiber = if round { round_sphere_metric(m, a) } else { hyperbolic_metric(m, a) };
            let lambda = sign * (m as f64 - 1.0) / (a * a);
            let metric = euclidean_product(k, &fiber)
                .with_potential(quadratic_potential(lambda, k), lambda)
                .with_parameter("m", m as f64)
                .with_parameter("k", k as f64)
                .with_parameter("a", a)
                .with_parameter("sign", sign);
            let mut bounds = vec![(-2.0, 2.0); k];
            bounds.push(if round { (0.1 * a, (PI - 0.1) * a) } else { (0.1 * a, 2.0 * a) });
            bounds.extend(angle_bounds(m - 1));
            let factor = if round { "S" } else { "H" };
            let label = format!("einstein_product({factor}^{m}(a={a})×ℝ^{k})");
            let inst = SolitonInstance::new(metric, &label, Some(ModelClass::RigidProduct), bounds)?;
            Ok(if round {
                let t = 6.0 * (2.0 / lambda).sqrt();
                let mut vol = vec![VolumeAxis::growing(-t, t); k];
                vol.push(VolumeAxis::fixed(0.0, PI * a));
                vol.extend(angle_volume(m - 1));
                inst.with_volume_box(vol)
            } else {
                inst
            })
        }
        other => Err(GeometryError::UnknownModel(other.to_string())),
    }
}

/// `N^m(a) × ℝ` written as the warped product with `h ≡ 1`.
fn build_cylinder(m: usize, a: f64, round: bool, name: &str) -> Result<SolitonInstance> {
    let fiber = if round { round_sphere_metric(m, a) } else { hyperbolic_metric(m, a) };
    let sign = if round { 1.0 } else { -1.0 };
    let lambda = sign * (m as f64 - 1.0) / (a * a);
    let spec = WarpedProductSpec {
        h: Arc::new(|r: &Jet| r.constant_like(1.0)),
        fiber,
        topology: TopologyTag::CylinderLike,
        r_domain: (f64::NEG_INFINITY, f64::INFINITY),
        h_integral: Some(Arc::new(|r: &Jet| r.clone())),
    };
    let n = m + 1;
    let mut metric = build_warped_product(&spec)?
        .with_potential(quadratic_potential(lambda, 1), lambda)
        .with_parameter("n", n as f64)
        .with_parameter("a", a);
    metric.chart.coordinate_names[0] = "t".into();
    let mut bounds = vec![(-2.0, 2.0)];
    bounds.push(if round { (0.1 * a, (PI - 0.1) * a) } else { (0.1 * a, 2.0 * a) });
    bounds.extend(angle_bounds(m - 1));
    let (label, class) = if round {
        (format!("{name}(S^{m}(a={a})×ℝ)"), ModelClass::SphereSplit)
    } else {
        (format!("{name}(H^{m}(a={a})×ℝ)"), ModelClass::HyperbolicSplit)
    };
    let inst = SolitonInstance::new(metric, &label, Some(class), bounds)?.with_warped(spec);
    Ok(if round {
        let t = 8.0 / lambda.sqrt();
        let mut vol = vec![VolumeAxis::growing(-t, t), VolumeAxis::fixed(0.0, PI * a)];
        vol.extend(angle_volume(m - 1));
        inst.with_volume_box(vol)
    } else {
        inst
    })
}

/// Warp profiles for [`warped_from_recipe`], all with scale `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// `a sin(r/a)` on `(0, πa)`.
    Sin,
    /// `a sinh(r/a)` on `(0, ∞)`.
    Sinh,
    /// `a tanh(r/a)` on `(0, ∞)`.
    Tanh,
    /// `h ≡ 1` on `ℝ`.
    One,
}

impl ProfileKind {
    pub fn parse(s: &str) -> Option<ProfileKind> {
        match s {
            "sin" => Some(ProfileKind::Sin),
            "sinh" => Some(ProfileKind::Sinh),
            "tanh" => Some(ProfileKind::Tanh),
            "one" => Some(ProfileKind::One),
            _ => None,
        }
    }
}

/// Radial potentials `f(r) = c·u(r)` for [`warped_from_recipe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialPotential {
    Zero,
    /// `u = r²/2`
    Quadratic,
    /// `u = log cosh r`
    LogCosh,
}

impl RadialPotential {
    pub fn parse(s: &str) -> Option<RadialPotential> {
        match s {
            "zero" => Some(RadialPotential::Zero),
            "quadratic" => Some(RadialPotential::Quadratic),
            "log-cosh" => Some(RadialPotential::LogCosh),
            _ => None,
        }
    }
}

/// `dr² + h(r)² g_{Sᵏ}` with a radial potential, as written in a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WarpedRecipe {
    pub profile: ProfileKind,
    pub scale: f64,
    pub fiber_dimension: usize,
    pub lambda: f64,
    pub potential: RadialPotential,
    pub coefficient: f64,
}

/// Builds a recipe without the residual gate; suites apply it.
pub fn warped_from_recipe(recipe: &WarpedRecipe) -> Result<SolitonInstance> {
    let a = recipe.scale;
    if !(a > 0.0) || !a.is_finite() {
        return Err(GeometryError::InvalidParameter {
            name: "scale".into(),
            value: a,
            reason: "must be positive".into(),
        });
    }
    let k = recipe.fiber_dimension;
    if k == 0 || k + 1 > MAX_MODEL_DIMENSION {
        return Err(GeometryError::InvalidParameter {
            name: "fiber_dimension".into(),
            value: k as f64,
            reason: format!("must be in [1, {}]", MAX_MODEL_DIMENSION - 1),
        });
    }
    let (h, integral, topology, domain, r_bounds): (Profile, Profile, TopologyTag, (f64, f64), (f64, f64)) = match recipe.profile {
        ProfileKind::Sin => (
            Arc::new(move |r: &Jet| (r / a).sin() * a),
            Arc::new(move |r: &Jet| (r / a).cos() * (-a * a)),
            TopologyTag::SphereLike,
            (0.0, PI * a),
            (0.25 * a, (PI - 0.25) * a),
        ),
        ProfileKind::Sinh => (
            Arc::new(move |r: &Jet| (r / a).sinh() * a),
            Arc::new(move |r: &Jet| (r / a).cosh() * (a * a)),
            TopologyTag::PlaneLike,
            (0.0, f64::INFINITY),
            (0.25 * a, 3.0 * a),
        ),
        ProfileKind::Tanh => (
            Arc::new(move |r: &Jet| (r / a).tanh() * a),
            Arc::new(move |r: &Jet| (r / a).cosh().ln() * (a * a)),
            TopologyTag::PlaneLike,
            (0.0, f64::INFINITY),
            (0.1 * a, 3.0 * a),
        ),
        ProfileKind::One => (
            Arc::new(|r: &Jet| r.constant_like(1.0)),
            Arc::new(|r: &Jet| r.clone()),
            TopologyTag::CylinderLike,
            (f64::NEG_INFINITY, f64::INFINITY),
            (-2.0, 2.0),
        ),
    };
    let spec = WarpedProductSpec {
        h,
        fiber: unit_sphere(k),
        topology,
        r_domain: domain,
        h_integral: Some(integral),
    };
    let c = recipe.coefficient;
    let kind = recipe.potential;
    let potential = move |x: &[Jet]| match kind {
        RadialPotential::Zero => x[0].zero_like(),
        RadialPotential::Quadratic => x[0].square() * (0.5 * c),
        RadialPotential::LogCosh => x[0].cosh().ln() * c,
    };
    let metric = build_warped_product(&spec)?.with_potential(potential, recipe.lambda);
    let mut bounds = vec![r_bounds];
    bounds.extend(angle_bounds(k));
    let profile = format!("{:?}", recipe.profile).to_lowercase();
    let label = format!("warped(h={profile}, a={a}, S^{k})");
    let inst = SolitonInstance::unchecked(metric, &label, None, bounds).with_warped(spec);
    let volume = match recipe.profile {
        ProfileKind::Sin => Some(VolumeAxis::fixed(0.0, PI * a)),
        ProfileKind::One if recipe.potential == RadialPotential::Quadratic && c > 0.0 => {
            let t = 8.0 / c.sqrt();
            Some(VolumeAxis::growing(-t, t))
        }
        _ => None,
    };
    Ok(match volume {
        Some(radial) => {
            let mut axes = vec![radial];
            axes.extend(angle_volume(k));
            inst.with_volume_box(axes)
        }
        None => inst,
    })
}

/// `h = tanh r` over the unit circle.
pub fn cigar_spec() -> WarpedProductSpec {
    WarpedProductSpec {
        h: Arc::new(|r: &Jet| r.tanh()),
        fiber: unit_circle(),
        topology: TopologyTag::PlaneLike,
        r_domain: (0.0, f64::INFINITY),
        h_integral: Some(Arc::new(|r: &Jet| r.cosh().ln())),
    }
}

/// Per-point `max(|−h″/h + f″ − λ|, |−h″/h + f′h′/h − λ|)` for a surface
/// `dr² + h² dθ²` with radial potential `f`.
pub fn surface_soliton_residual(spec: &WarpedProductSpec, f: &Profile, lambda: f64, r_grid: &[f64], tolerance: f64) -> Result<ResidualReport> {
    if spec.fiber.dimension() != 1 {
        return Err(GeometryError::UnsupportedDimension {
            operation: "surface soliton ODE",
            dimension: spec.fiber.dimension() + 1,
        });
    }
    let (lo, hi) = spec.r_domain;
    let mut per = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let [h, dh, ddh] = spec.h_derivatives(r);
        if !(r > lo && r < hi) || h.abs() < 1e-12 {
            return Err(GeometryError::Domain {
                point: vec![r],
                reason: "surface grid touches a zero of h".into(),
            });
        }
        let fj = eval_profile(f, r, 2);
        let (df, ddf) = (fj.partial(&[0]), fj.partial(&[0, 0]));
        let radial = -ddh / h + ddf - lambda;
        let fiber = -ddh / h + df * dh / h - lambda;
        per.push(PointResidual {
            coords: vec![r],
            residual: radial.abs().max(fiber.abs()),
        });
    }
    Ok(ResidualReport::new(IdentityId::SurfaceSolitonOde, per, tolerance))
}

/// Outcome of the concircular-potential test `Hess f = μ g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WarpedDetection {
    pub is_warped: bool,
    /// `f` constant on the grid; the test says nothing.
    pub trivial: bool,
    /// `Δf / n` per point.
    pub mu_values: Vec<f64>,
    /// Largest frame norm of the trace-free Hessian.
    pub max_trace_free: f64,
}

pub const TRACE_FREE_TOLERANCE: f64 = 1e-7;

/// Tests whether the potential of `m` has pure-trace Hessian on the grid.
pub fn detect_warped_product(m: &MetricFamily, grid: &SampleGrid) -> Result<WarpedDetection> {
    let n = m.dimension() as f64;
    let rows = per_point(grid, |x| {
        let e = Expansion::new(m, x, 2)?;
        let hess = e.hessian(&e.potential).values(x);
        let g = e.metric.values(x);
        let ginv = e.inverse_metric.values(x);
        let lap: f64 = hess.components.iter().zip(&ginv.components).map(|(h, gi)| h * gi).sum();
        let mu = lap / n;
        let mut tf = hess.clone();
        for (t, gv) in tf.components.iter_mut().zip(&g.components) {
            *t -= mu * gv;
        }
        let grad_norm = e.potential.gradient().iter().fold(0.0f64, |a, b| a.max(b.abs()));
        Ok((mu, e.frame_norm(&tf), grad_norm))
    })?;
    let max_trace_free = rows.iter().fold(0.0f64, |a, r| a.max(r.1));
    let trivial = rows.iter().all(|r| r.2 < 1e-12);
    Ok(WarpedDetection {
        is_warped: trivial || max_trace_free < TRACE_FREE_TOLERANCE,
        trivial,
        mu_values: rows.iter().map(|r| r.0).collect(),
        max_trace_free,
    })
}

/// Replaces the potential of a warped product by `∫h dr` and checks
/// `Hess f = h′ g`; returns the detection and `max |μ − h′(r)|`.
pub fn concircular_check(spec: &WarpedProductSpec, grid: &SampleGrid) -> Result<(WarpedDetection, f64)> {
    let integral = spec
        .h_integral
        .clone()
        .ok_or_else(|| GeometryError::NotApplicable("warped spec has no ∫h dr".into()))?;
    let metric = build_warped_product(spec)?.with_potential(move |x: &[Jet]| integral(&x[0]), 0.0);
    let det = detect_warped_product(&metric, grid)?;
    let err = grid
        .points
        .iter()
        .zip(&det.mu_values)
        .map(|(x, mu)| (mu - spec.h_derivatives(x[0])[1]).abs())
        .fold(0.0f64, f64::max);
    Ok((det, err))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum VolumeEstimate {
    Finite { value: f64 },
    Divergent { value: f64, doubled_value: f64 },
}

impl VolumeEstimate {
    pub fn value(&self) -> f64 {
        match self {
            VolumeEstimate::Finite { value } | VolumeEstimate::Divergent { value, .. } => *value,
        }
    }
}

pub const DEFAULT_VOLUME_RESOLUTION: usize = 400;

fn midpoint_volume(m: &MetricFamily, axes: &[VolumeAxis], resolution: usize) -> f64 {
    let n = axes.len();
    let widths: Vec<f64> = axes.iter().map(|a| (a.upper - a.lower) / resolution as f64).collect();
    let cell: f64 = widths.iter().product();
    let total = resolution.pow(n as u32 - 1);
    let metric = m.metric_oracle();
    let potential = m.potential_oracle();
    (0..resolution)
        .into_par_iter()
        .map(|i0| {
            let mut sum = 0.0;
            let mut x = vec![0.0; n];
            x[0] = axes[0].lower + (i0 as f64 + 0.5) * widths[0];
            for rest in 0..total {
                let mut r = rest;
                for d in (1..n).rev() {
                    let i = r % resolution;
                    r /= resolution;
                    x[d] = axes[d].lower + (i as f64 + 0.5) * widths[d];
                }
                let seed = Jet::seed(&x, 0);
                let g = metric(&seed);
                let gm = nalgebra::DMatrix::from_fn(n, n, |i, j| g[i * n + j].value());
                let det = gm.determinant().max(0.0);
                sum += (-potential(&seed).value()).exp() * det.sqrt();
            }
            sum
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        * cell
}

/// Midpoint quadrature of `e^{−f} √det g` over a box. Doubling the
/// growing axes must change the value by at most 1%, else the estimate is
/// flagged divergent.
pub fn f_volume_estimate(inst: &SolitonInstance, axes: &[VolumeAxis], resolution: usize) -> Result<VolumeEstimate> {
    if axes.len() != inst.dimension() {
        return Err(GeometryError::ContractViolation(format!(
            "{} axes for a {}-dimensional model",
            axes.len(),
            inst.dimension()
        )));
    }
    if resolution == 0 || axes.iter().any(|a| !(a.lower < a.upper) || !a.lower.is_finite() || !a.upper.is_finite()) {
        return Err(GeometryError::ContractViolation("empty or unbounded quadrature box".into()));
    }
    let value = midpoint_volume(&inst.metric, axes, resolution);
    let doubled: Vec<VolumeAxis> = axes.iter().map(VolumeAxis::doubled).collect();
    let doubled_value = midpoint_volume(&inst.metric, &doubled, resolution);
    if (doubled_value - value).abs() > 0.01 * value.abs() || !value.is_finite() {
        Ok(VolumeEstimate::Divergent { value, doubled_value })
    } else {
        Ok(VolumeEstimate::Finite { value })
    }
}
