use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use soliton_core::bivector::{
    curvature_operator, max_trace, sharp_b_algebraic, sharp_matrix, weyl_algebraic, weyl_decompose, AlgebraicCurvature,
    BivectorBasis,
};
use soliton_core::chart::{christoffel, covariant_derivative, f_laplacian, Chart, Expansion, MetricFamily};
use soliton_core::error::GeometryError;
use soliton_core::jet::Jet;
use soliton_core::models::{
    build_model, cigar_spec, concircular_check, detect_warped_product, f_volume_estimate, surface_soliton_residual,
    Profile, SolitonInstance, VolumeAxis, VolumeEstimate, DEFAULT_VOLUME_RESOLUTION,
};
use soliton_core::stencil::first_derivative;
use soliton_core::tensor::{JetTensor, Slot};
use soliton_core::verify::SampleGrid;

fn model(name: &str, kv: &[(&str, f64)]) -> SolitonInstance {
    let p: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    build_model(name, &p).unwrap()
}

/// Hamilton's cigar `(dx² + dy²)/(1 + |x|²)`, `f = −log(1 + |x|²)`.
fn cartesian_cigar() -> MetricFamily {
    MetricFamily::new(Chart::cartesian(2), |x: &[Jet]| {
        let c = (x[0].square() + x[1].square() + 1.0).recip();
        vec![c.clone(), x[0].zero_like(), x[0].zero_like(), c]
    })
    .with_potential(|x: &[Jet]| -(x[0].square() + x[1].square() + 1.0).ln(), 0.0)
}

/// A metric with no symmetry, positive definite near the origin.
fn lumpy(n: usize) -> MetricFamily {
    MetricFamily::new(Chart::cartesian(n), move |x: &[Jet]| {
        let mut g = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                g.push(if i == j {
                    (x[(i + 1) % n].clone() * 0.4).sin().exp() + x[i].square() * 0.1
                } else {
                    (x[i].clone() * x[j].clone()) * 0.05
                });
            }
        }
        g
    })
}

#[test]
fn christoffels_match_finite_differences() {
    let m = cartesian_cigar();
    let x = [0.4, -0.7];
    let gamma = christoffel(&m, &x).unwrap();
    let g = |y: &[f64]| m.metric_at(y).iter().copied().collect::<Vec<f64>>();
    let dg: Vec<Vec<f64>> = (0..2).map(|a| first_derivative(&g, &x, a, 1e-3)).collect();
    let ginv = m.metric_at(&x).try_inverse().unwrap();
    // nalgebra is column-major: entry (i, j) sits at j * 2 + i
    let d = |a: usize, i: usize, j: usize| dg[a][j * 2 + i];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut oracle = 0.0;
                for l in 0..2 {
                    oracle += 0.5 * ginv[(k, l)] * (d(i, j, l) + d(j, i, l) - d(l, i, j));
                }
                assert!((gamma.get(&[k, i, j]) - oracle).abs() < 1e-9, "Γ^{k}_{i}{j}");
            }
        }
    }
}

#[test]
fn cigar_scalar_curvature() {
    let m = cartesian_cigar();
    for x in [[0.0, 0.0], [1.0, 0.5], [-2.0, 3.0]] {
        let e = Expansion::new(&m, &x, 2).unwrap();
        let rr = 1.0 + x[0] * x[0] + x[1] * x[1];
        assert!((e.scal.value() - 4.0 / rr).abs() < 1e-12);
    }
    // polar form: scal = 4 sech² r, ∂_r scal = −8 sech² r tanh r
    let cigar = model("cigar", &[]);
    for x in cigar.default_grid(6, 0).unwrap().points {
        let e = Expansion::new(&cigar.metric, &x, 3).unwrap();
        let (s, t) = (1.0 / x[0].cosh(), x[0].tanh());
        assert!((e.scal.value() - 4.0 * s * s).abs() < 1e-11);
        assert!((e.scal.partial(&[0]) + 8.0 * s * s * t).abs() < 1e-10);
        assert!(e.scal.partial(&[1]).abs() < 1e-12);
    }
}

#[test]
fn f_laplacian_of_cigar_scal_is_minus_scal_squared() {
    let m = cartesian_cigar();
    let scal = |x: &[Jet]| JetTensor::scalar((x[0].square() + x[1].square() + 1.0).recip() * 4.0);
    for x in [[0.2, 0.1], [1.5, -0.5], [-3.0, 2.0]] {
        let lap = f_laplacian(&m, &scal, &x).unwrap();
        let rr = 1.0 + x[0] * x[0] + x[1] * x[1];
        let s = 4.0 / rr;
        assert!((lap.components[0] + s * s).abs() < 1e-10, "{} vs {}", lap.components[0], -s * s);
    }
}

#[test]
fn metric_is_parallel() {
    let m = lumpy(3);
    let field = |x: &[Jet]| JetTensor::new(3, vec![Slot::Lower, Slot::Lower], m.metric_jets(x));
    let dg = covariant_derivative(&m, &field, &[0.3, -0.2, 0.5]).unwrap();
    assert!(dg.max_abs() < 1e-12);
}

#[test]
fn riemann_has_curvature_symmetries() {
    let m = lumpy(4);
    let e = Expansion::new(&m, &[0.1, 0.2, -0.3, 0.4], 2).unwrap();
    let r = AlgebraicCurvature::from_tensor(&e.riemann.values(&e.point));
    let n = 4;
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let v = r.get(a, b, c, d);
                    worst = worst.max((v + r.get(b, a, c, d)).abs());
                    worst = worst.max((v - r.get(c, d, a, b)).abs());
                    worst = worst.max((v + r.get(b, c, a, d) + r.get(c, a, b, d)).abs());
                }
            }
        }
    }
    assert!(worst < 1e-11, "{worst}");
}

#[test]
fn unit_three_sphere_operator_is_identity() {
    let s = model("round_sphere", &[("n", 3.0)]);
    for x in s.default_grid(4, 0).unwrap().points {
        let op = curvature_operator(&s.metric, &x).unwrap();
        assert!(op.spectrum.iter().all(|v| (v - 1.0).abs() < 1e-11));
        let basis = BivectorBasis::new(3);
        let sharp = sharp_matrix(&op.matrix, &basis).unwrap();
        // (n − 2) I on the unit sphere
        assert!((sharp - DMatrix::identity(3, 3)).amax() < 1e-11);
    }
}

#[test]
fn cigar_operator_is_half_scal() {
    let cigar = model("cigar", &[]);
    for x in cigar.default_grid(4, 1).unwrap().points {
        let op = curvature_operator(&cigar.metric, &x).unwrap();
        let scal = 4.0 / x[0].cosh().powi(2);
        assert_eq!(op.spectrum.len(), 1);
        assert!((op.spectrum[0] - scal / 2.0).abs() < 1e-11);
    }
}

#[test]
fn weyl_vanishes_in_dimension_three_and_is_trace_free() {
    let x3 = [0.2, -0.1, 0.3];
    let w = weyl_decompose(&lumpy(3), &x3).unwrap();
    assert!(w.weyl.max_abs() < 1e-11);

    let m = lumpy(4);
    let x4 = [0.2, -0.1, 0.3, 0.05];
    let e = Expansion::new(&m, &x4, 2).unwrap();
    let r = AlgebraicCurvature::from_tensor(&e.riemann.values(&x4));
    let g = m.metric_at(&x4);
    let (w, _) = weyl_algebraic(&r, &g).unwrap();
    assert!(w.max_abs() > 1e-4);
    assert!(max_trace(&w, &g.try_inverse().unwrap()) < 1e-12);

    assert!(matches!(
        weyl_decompose(&cartesian_cigar(), &[0.0, 0.0]),
        Err(GeometryError::UnsupportedDimension { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // the B-tensor and structure-constant routes to R^# agree
    #[test]
    fn sharp_routes_agree(n in 3usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = AlgebraicCurvature::random(n, &mut rng);
        let basis = BivectorBasis::new(n);
        let via_b = sharp_b_algebraic(&r).operator_matrix(&basis);
        let via_c = sharp_matrix(&r.operator_matrix(&basis), &basis).unwrap();
        let scale = 1.0 + via_b.amax();
        prop_assert!((via_b - via_c).amax() < 1e-12 * scale);
    }

    // operator matrix round trip, symmetry and trace
    #[test]
    fn curvature_operator_roundtrips(n in 2usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = AlgebraicCurvature::random(n, &mut rng);
        let basis = BivectorBasis::new(n);
        let back = AlgebraicCurvature::from_operator_matrix(&r.operator_matrix(&basis), &basis);
        prop_assert!(r.sub(&back).max_abs() < 1e-12 * (1.0 + r.max_abs()));
        let m = r.operator_matrix(&basis);
        prop_assert!((m.clone() - m.transpose()).amax() < 1e-12 * (1.0 + r.max_abs()));
        // scal = 2 tr 𝓡
        prop_assert!((r.scal() - 2.0 * m.trace()).abs() < 1e-10 * (1.0 + r.scal().abs()));
    }
}

#[test]
fn surface_ode_on_the_cigar_and_sphere() {
    let r_grid: Vec<f64> = (1..40).map(|i| 0.1 * i as f64).collect();
    let f: Profile = Arc::new(|r: &Jet| r.cosh().ln() * -2.0);
    let ok = surface_soliton_residual(&cigar_spec(), &f, 0.0, &r_grid, 1e-10).unwrap();
    assert!(ok.passed(), "{:e}", ok.max_residual);
    let wrong = surface_soliton_residual(&cigar_spec(), &f, 1.0, &r_grid, 1e-10).unwrap();
    assert!((wrong.max_residual - 1.0).abs() < 1e-9);

    let sphere = model("round_sphere", &[("n", 2.0)]);
    let spec = sphere.warped.clone().unwrap();
    let zero: Profile = Arc::new(|r: &Jet| r.zero_like());
    let grid: Vec<f64> = (1..30).map(|i| 0.1 * i as f64).collect();
    assert!(surface_soliton_residual(&spec, &zero, 1.0, &grid, 1e-10).unwrap().passed());
    assert!(matches!(
        surface_soliton_residual(&spec, &zero, 1.0, &[0.0, 1.0], 1e-10),
        Err(GeometryError::Domain { .. })
    ));
}

#[test]
fn warped_detection() {
    let g = model("gaussian", &[("n", 3.0), ("lambda", 0.5)]);
    let det = detect_warped_product(&g.metric, &g.default_grid(8, 0).unwrap()).unwrap();
    assert!(det.is_warped && !det.trivial);
    assert!(det.mu_values.iter().all(|mu| (mu - 0.5).abs() < 1e-12));

    let cigar = model("cigar", &[]);
    let grid = cigar.default_grid(8, 0).unwrap();
    let (det, err) = concircular_check(&cigar_spec(), &grid).unwrap();
    assert!(det.is_warped);
    assert!(err < 1e-7, "{err:e}");

    // f = x₁x₂ in the polar chart of S³ is not concircular
    let s = model("round_sphere", &[("n", 3.0)]);
    let bent = s.metric.clone().with_potential(|x: &[Jet]| x[0].clone() * x[1].clone(), 2.0);
    let det = detect_warped_product(&bent, &s.default_grid(6, 0).unwrap()).unwrap();
    assert!(!det.is_warped);
}

#[test]
fn sphere_concircular_function_is_cosine() {
    let s = model("round_sphere", &[("n", 3.0)]);
    let spec = s.warped.clone().unwrap();
    let grid = s.default_grid(8, 2).unwrap();
    let (det, err) = concircular_check(&spec, &grid).unwrap();
    assert!(det.is_warped && err < 1e-7);
    for (x, mu) in grid.points.iter().zip(&det.mu_values) {
        assert!((mu - x[0].cos()).abs() < 1e-7);
    }
}

#[test]
fn gaussian_f_volume() {
    for n in 1..=3usize {
        let inst = model("gaussian", &[("n", n as f64), ("lambda", 0.5)]);
        let res = if n == 3 { 120 } else { DEFAULT_VOLUME_RESOLUTION };
        let v = f_volume_estimate(&inst, inst.volume_box.as_ref().unwrap(), res).unwrap();
        let exact = (2.0 * PI / 0.5f64).powf(n as f64 / 2.0);
        assert!(matches!(v, VolumeEstimate::Finite { .. }));
        assert!((v.value() - exact).abs() < 1e-6 * exact, "n={n}: {} vs {exact}", v.value());
    }
}

#[test]
fn cylinder_f_volume() {
    // 4π · √(2π) for S²(1) × ℝ with f = t²/2
    let inst = model("cylinder", &[("n", 3.0)]);
    let v = f_volume_estimate(&inst, inst.volume_box.as_ref().unwrap(), 160).unwrap();
    let exact = 4.0 * PI * (2.0 * PI).sqrt();
    assert!((v.value() - exact).abs() < 1e-3, "{} vs {exact}", v.value());
}

#[test]
fn divergent_boxes_are_flagged() {
    let h = model("gaussian", &[("n", 1.0), ("lambda", -0.5)]);
    let v = f_volume_estimate(&h, &[VolumeAxis::growing(-8.0, 8.0)], 400).unwrap();
    assert!(matches!(v, VolumeEstimate::Divergent { .. }));
    assert!(matches!(
        f_volume_estimate(&h, &[VolumeAxis::fixed(1.0, 1.0)], 10),
        Err(GeometryError::ContractViolation(_))
    ));
}

#[test]
fn grids_are_reproducible() {
    let chart = Chart::cartesian(2);
    let a = SampleGrid::sample(&chart, &[(-1.0, 1.0), (-1.0, 1.0)], 10, 42, 0.0).unwrap();
    let b = SampleGrid::sample(&chart, &[(-1.0, 1.0), (-1.0, 1.0)], 10, 42, 0.0).unwrap();
    assert_eq!(a, b);
}
