use std::collections::BTreeMap;

use nalgebra::DMatrix;
use proptest::prelude::*;
use soliton_core::bivector::{AlgebraicCurvature, BivectorBasis};
use soliton_core::classify::{
    audit_points, barrier_ratio_check, classify, constant_scal_diagnostics, k_quadratic_form, kernel_parallelism_check,
    phi, phi_diagnostic, second_eigenvalue_check, second_eigenvalue_point, spectral_diagnostics, Audit, ScalEndpoint,
};
use soliton_core::error::GeometryError;
use soliton_core::models::{build_model, catalog, ModelClass, SolitonInstance};

fn model(name: &str, kv: &[(&str, f64)]) -> SolitonInstance {
    let p: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    build_model(name, &p).unwrap()
}

#[test]
fn catalog_defaults_get_their_expected_labels() {
    for entry in catalog() {
        let inst = build_model(entry.name, &BTreeMap::new()).unwrap();
        let grid = inst.default_grid(10, 11).unwrap();
        let result = classify(&inst, &grid).unwrap();
        println!("{:22} {}", entry.name, result.label);
        assert_eq!(result.label.label(), entry.expected_class, "{}", entry.name);
        if result.label != ModelClass::Inconclusive {
            assert!(result.evidence.iter().all(|e| e.passed), "{}: {:?}", entry.name, result.evidence);
        }
    }
}

#[test]
fn more_labels() {
    let cases = [
        (model("round_sphere", &[("n", 2.0)]), ModelClass::SphereEinstein),
        (model("round_sphere", &[("n", 5.0), ("a", 2.0)]), ModelClass::SphereEinstein),
        (model("cylinder", &[("n", 4.0)]), ModelClass::SphereSplit),
        (model("hyperbolic", &[("n", 4.0)]), ModelClass::HyperbolicEinstein),
        (model("gaussian", &[("n", 2.0), ("lambda", -1.0)]), ModelClass::Flat),
        (model("einstein_product", &[("m", 2.0), ("k", 2.0)]), ModelClass::RigidProduct),
        (model("einstein_product", &[("m", 3.0), ("k", 1.0)]), ModelClass::SphereSplit),
    ];
    for (inst, want) in cases {
        let grid = inst.default_grid(8, 4).unwrap();
        assert_eq!(classify(&inst, &grid).unwrap().label, want, "{}", inst.label);
    }
}

#[test]
fn perturbed_models_are_inconclusive() {
    for name in ["gaussian", "round_sphere", "cylinder", "cigar"] {
        let inst = model(name, &[]).perturbed(0.01);
        let grid = inst.default_grid(8, 1).unwrap();
        let r = classify(&inst, &grid).unwrap();
        assert_eq!(r.label, ModelClass::Inconclusive);
        assert!(r.evidence.iter().any(|e| e.diagnostic == "soliton-residual" && !e.passed));
    }
}

#[test]
fn labels_are_scale_invariant() {
    for name in ["gaussian", "round_sphere", "cylinder", "hyperbolic", "einstein_product", "cigar"] {
        let inst = model(name, &[]);
        let grid = inst.default_grid(8, 9).unwrap();
        let base = classify(&inst, &grid).unwrap().label;
        for c in [0.25, 4.0, 30.0] {
            assert_eq!(classify(&inst.scaled(c), &grid).unwrap().label, base, "{name} c={c}");
        }
    }
}

#[test]
fn spectra_of_the_cylinder() {
    let inst = model("cylinder", &[("n", 3.0)]);
    let grid = inst.default_grid(6, 0).unwrap();
    let d = spectral_diagnostics(&inst, &grid).unwrap();
    for (i, rho) in d.ricci_eigenvalues.iter().enumerate() {
        assert!(rho[0].abs() < 1e-10 && (rho[1] - 1.0).abs() < 1e-10 && (rho[2] - 1.0).abs() < 1e-10);
        assert!((rho.iter().sum::<f64>() - d.scal[i]).abs() < 1e-10);
        assert!(d.cauchy_schwarz_gap[i] >= -1e-9);
        let op = &d.curvop_eigenvalues[i];
        assert!(op[0].abs() < 1e-10 && op[1].abs() < 1e-10 && (op[2] - 1.0).abs() < 1e-10);
    }
}

#[test]
fn trace_of_ricci_spectrum_is_scal() {
    for name in ["cigar", "hyperbolic_cylinder", "einstein_product"] {
        let inst = model(name, &[]);
        let grid = inst.default_grid(6, 2).unwrap();
        let d = spectral_diagnostics(&inst, &grid).unwrap();
        for (rho, s) in d.ricci_eigenvalues.iter().zip(&d.scal) {
            assert!((rho.iter().sum::<f64>() - s).abs() < 1e-9 * (1.0 + s.abs()));
            assert!(rho.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}

#[test]
fn phi_is_zero_on_catalog_shrinkers() {
    for inst in [model("round_sphere", &[("n", 4.0)]), model("cylinder", &[("n", 4.0)])] {
        let grid = inst.default_grid(6, 5).unwrap();
        let d = spectral_diagnostics(&inst, &grid).unwrap();
        for v in phi_diagnostic(&d).unwrap() {
            assert!(v.phi.abs() < 1e-10);
            assert!(v.h_weight.is_finite());
        }
    }
    let g = model("gaussian", &[]);
    let d = spectral_diagnostics(&g, &g.default_grid(3, 0).unwrap()).unwrap();
    assert!(matches!(phi_diagnostic(&d), Err(GeometryError::NotApplicable(_))));
}

#[test]
fn barrier_inequality_on_the_cylinder() {
    let inst = model("cylinder", &[("n", 3.0)]);
    let grid = inst.default_grid(6, 5).unwrap();
    let b = barrier_ratio_check(&inst.metric, &grid, 1e-5).unwrap();
    assert_eq!(b.checked, 6);
    assert!(b.passed, "{b:?}");
    // ρ₁ is never simple on the round sphere
    let s = model("round_sphere", &[("n", 3.0)]);
    let b = barrier_ratio_check(&s.metric, &s.default_grid(4, 0).unwrap(), 1e-5).unwrap();
    assert_eq!((b.checked, b.skipped), (0, 4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    // φ ≤ 0 whenever ρ₁ is the smallest eigenvalue and scal > 0
    #[test]
    fn phi_is_nonpositive(n in 3usize..7, raw in proptest::collection::vec(-3.0f64..3.0, 6)) {
        let mut rho: Vec<f64> = raw[..n].to_vec();
        rho.sort_by(f64::total_cmp);
        prop_assume!(rho.iter().sum::<f64>() > 1e-3);
        let v = phi(&rho).unwrap();
        prop_assert!(v <= 1e-12 * (1.0 + v.abs()), "phi = {v} for {rho:?}");
    }
}

#[test]
fn k_form_on_the_cylinder() {
    let inst = model("cylinder", &[("n", 3.0)]);
    let x = inst.default_grid(1, 3).unwrap().points[0].clone();
    // K(Y,Y) = Σ ρ_i sec(Y, E_i); the line direction is a null vector
    let along_line = k_quadratic_form(&inst.metric, &x, &[1.0, 0.0, 0.0]).unwrap();
    assert!(along_line.abs() < 1e-10);
    let value = k_quadratic_form(&inst.metric, &x, &[0.0, 1.0, 0.0]).unwrap();
    assert!((value - 1.0).abs() < 1e-10, "{value}");
    assert!(matches!(
        k_quadratic_form(&inst.metric, &x, &[0.0, 0.0, 0.0]),
        Err(GeometryError::ContractViolation(_))
    ));
}

#[test]
fn k_form_on_the_cigar() {
    let inst = model("cigar", &[]);
    for x in inst.default_grid(5, 1).unwrap().points {
        // in 2D, K(Y,Y) = ρ R(Y,E,E,Y) = (scal/2)² for unit Y
        let r = x[0];
        let scal = 4.0 / r.cosh().powi(2);
        let v = k_quadratic_form(&inst.metric, &x, &[0.3, 0.7]).unwrap();
        assert!((v - scal * scal / 4.0).abs() < 1e-9, "{v}");
    }
}

#[test]
fn second_eigenvalue_audit() {
    let inst = model("cylinder", &[("n", 3.0)]);
    let grid = inst.default_grid(5, 0).unwrap();
    let r = second_eigenvalue_check(&inst, &grid).unwrap();
    assert!(matches!(r.audit, Audit::Passed { points: 5 }));
    assert!(r.per_point.iter().all(|p| p.degenerate_lambda1));

    let h = model("hyperbolic", &[]);
    assert!(matches!(
        second_eigenvalue_check(&h, &h.default_grid(2, 0).unwrap()),
        Err(GeometryError::NotApplicable(_))
    ));
}

#[test]
fn product_of_hyperbolic_plane_and_sphere() {
    // H²(−1) × S²(1): spectrum (−1, 0, 0, 0, 0, 1). λ₁ < 0 with λ₂ = 0, but
    // the product is no soliton, so the audit hypothesis does not apply.
    let n = 4;
    let r = AlgebraicCurvature::from_fn(n, |a, b, c, d| {
        let block = |i: usize| if i < 2 { 0 } else { 1 };
        if [a, b, c, d].iter().any(|i| block(*i) != block(a)) {
            return 0.0;
        }
        let k = if block(a) == 0 { -1.0 } else { 1.0 };
        let g = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        k * (g(b, c) * g(a, d) - g(a, c) * g(b, d))
    });
    let basis = BivectorBasis::new(n);
    let m: DMatrix<f64> = r.operator_matrix(&basis);
    let p = second_eigenvalue_point(&m, &basis, &[]);
    assert!((p.lambda1 + 1.0).abs() < 1e-12);
    assert!(p.lambda2.abs() < 1e-12);
    assert!(!p.degenerate_lambda1);
    // the unique negative plane commutes with everything of nonzero weight
    assert!(p.restricted_sum.abs() < 1e-12);
    assert!(matches!(audit_points(&[p]), Audit::Failed { .. }));
}

#[test]
fn kernel_projector_is_parallel_on_splittings() {
    for (name, k) in [("cylinder", 1), ("hyperbolic_cylinder", 1), ("einstein_product", 2)] {
        let inst = model(name, &[]);
        let r = kernel_parallelism_check(&inst, &inst.default_grid(6, 8).unwrap()).unwrap();
        assert_eq!(r.kernel_dimension, k);
        assert!(r.passed, "{name}: {:e}", r.max_norm);
    }
    let s = model("round_sphere", &[]);
    assert!(matches!(
        kernel_parallelism_check(&s, &s.default_grid(3, 0).unwrap()),
        Err(GeometryError::HypothesisViolated(_))
    ));
}

#[test]
fn constant_scal_endpoints() {
    let expectations = [
        ("gaussian", Some(ScalEndpoint::Flat)),
        ("round_sphere", Some(ScalEndpoint::Einstein)),
        ("hyperbolic", Some(ScalEndpoint::Einstein)),
        ("cylinder", None),
    ];
    for (name, endpoint) in expectations {
        let inst = model(name, &[]);
        let r = constant_scal_diagnostics(&inst, &inst.default_grid(8, 2).unwrap()).unwrap();
        assert!(r.constant);
        assert_eq!(r.within_bounds, Some(true), "{name}");
        assert!(r.ricci_identity_residual.unwrap() < 1e-9);
        assert_eq!(r.endpoint, endpoint, "{name}");
    }
    let cigar = model("cigar", &[]);
    let r = constant_scal_diagnostics(&cigar, &cigar.default_grid(8, 2).unwrap()).unwrap();
    assert!(!r.constant && r.endpoint.is_none());
}

#[test]
fn weyl_radial_ratio_is_reported() {
    let inst = model("cylinder", &[("n", 4.0)]);
    let r = classify(&inst, &inst.default_grid(6, 0).unwrap()).unwrap();
    assert!(r.weyl_radial_ratio.unwrap() < 1e-8);
}
