//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines are always printed; exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soliton_core::bivector::{
    curvature_operator, max_trace, sharp_b_algebraic, sharp_matrix, sharp_via_b, sharp_via_structure_constants,
    weyl_decompose, AlgebraicCurvature, BivectorBasis,
};
use soliton_core::classify::{classify, phi, spectral_diagnostics};
use soliton_core::jet::Jet;
use soliton_core::models::{
    build_model, catalog, cigar_spec, concircular_check, f_volume_estimate, surface_soliton_residual, ModelClass,
    Profile, SolitonInstance,
};
use soliton_core::verify::{verify_elliptic_equations, verify_pointwise_identities, EllipticEquation, Tolerances};

type Outcome = Result<String, String>;

fn model(name: &str, kv: &[(&str, f64)]) -> SolitonInstance {
    let p: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    build_model(name, &p).expect("catalog model builds")
}

fn identity_catalog() -> Vec<SolitonInstance> {
    vec![
        model("gaussian", &[("n", 3.0), ("lambda", 0.5)]),
        model("round_sphere", &[("n", 2.0)]),
        model("round_sphere", &[("n", 3.0)]),
        model("round_sphere", &[("n", 4.0)]),
        model("cylinder", &[("n", 3.0)]),
        model("cylinder", &[("n", 4.0)]),
        model("hyperbolic", &[("n", 3.0)]),
        model("hyperbolic_cylinder", &[("n", 3.0)]),
        model("cigar", &[]),
    ]
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn identities() -> Outcome {
    let start = Instant::now();
    let tol = Tolerances {
        algebraic: 1e-6,
        ..Tolerances::default()
    };
    let mut worst = 0.0f64;
    for inst in identity_catalog() {
        let grid = inst.default_grid(40, 2024).map_err(err)?;
        for r in verify_pointwise_identities(&inst, &grid, &tol).map_err(err)? {
            worst = worst.max(r.max_residual);
            if !r.passed() {
                return Err(format!("{} {} residual {:e}", inst.label, r.identity_id, r.max_residual));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        return Err(format!("took {secs:.1} s"));
    }
    Ok(format!("9 models × 5 identities, worst residual {worst:.1e}, {secs:.1} s"))
}

fn elliptic() -> Outcome {
    let tol = Tolerances::default();
    let mut worst = 0.0f64;
    let mut count = 0;
    for inst in identity_catalog() {
        let grid = inst.default_grid(20, 2024).map_err(err)?;
        let which: Vec<EllipticEquation> = EllipticEquation::ALL
            .into_iter()
            .filter(|e| *e != EllipticEquation::WeylRicci || inst.dimension() >= 3)
            .collect();
        for r in verify_elliptic_equations(&inst, &grid, &which, &tol).map_err(err)? {
            worst = worst.max(r.max_residual);
            count += 1;
            if !r.passed() {
                return Err(format!("{} {} residual {:e}", inst.label, r.identity_id, r.max_residual));
            }
        }
    }
    Ok(format!("{count} model/equation pairs below 1e-5, worst {worst:.1e}"))
}

fn sharp_duality() -> Outcome {
    let mut worst = 0.0f64;
    let mut models = identity_catalog();
    models.push(model("einstein_product", &[]));
    for inst in &models {
        let n = inst.dimension();
        let basis = BivectorBasis::new(n);
        for x in inst.default_grid(5, 1).map_err(err)?.points {
            let via_b = AlgebraicCurvature::from_tensor(&sharp_via_b(&inst.metric, &x).map_err(err)?).operator_matrix(&basis);
            let op = curvature_operator(&inst.metric, &x).map_err(err)?;
            let via_c = sharp_via_structure_constants(&op, &basis).map_err(err)?;
            worst = worst.max((via_b - via_c).amax());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for n in 3..=5 {
        let basis = BivectorBasis::new(n);
        for _ in 0..20 {
            let r = AlgebraicCurvature::random(n, &mut rng);
            let via_b = sharp_b_algebraic(&r).operator_matrix(&basis);
            let via_c = sharp_matrix(&r.operator_matrix(&basis), &basis).map_err(err)?;
            worst = worst.max((via_b - via_c).amax());
        }
    }
    if worst < 1e-10 {
        Ok(format!("10 catalog models + 60 random tensors, max difference {worst:.1e}"))
    } else {
        Err(format!("max difference {worst:e}"))
    }
}

fn weyl() -> Outcome {
    let vanishing = [
        model("gaussian", &[("n", 3.0)]),
        model("round_sphere", &[("n", 3.0)]),
        model("round_sphere", &[("n", 4.0)]),
        model("round_sphere", &[("n", 5.0)]),
        model("hyperbolic", &[("n", 3.0)]),
        model("hyperbolic", &[("n", 4.0)]),
        model("cylinder", &[("n", 3.0)]),
        model("cylinder", &[("n", 4.0)]),
        model("cylinder", &[("n", 5.0)]),
        model("hyperbolic_cylinder", &[("n", 3.0)]),
    ];
    let mut worst_w = 0.0f64;
    let mut worst_trace = 0.0f64;
    for inst in &vanishing {
        for x in inst.default_grid(8, 5).map_err(err)?.points {
            let w = weyl_decompose(&inst.metric, &x).map_err(err)?;
            worst_w = worst_w.max(w.weyl.max_abs());
        }
    }
    let mut all = vanishing.to_vec();
    all.push(model("einstein_product", &[]));
    all.push(model("einstein_product", &[("m", 2.0), ("k", 2.0), ("sign", -1.0)]));
    for inst in &all {
        for x in inst.default_grid(8, 5).map_err(err)?.points {
            let w = weyl_decompose(&inst.metric, &x).map_err(err)?;
            let ginv = inst.metric.metric_at(&x).try_inverse().ok_or("singular metric")?;
            worst_trace = worst_trace.max(max_trace(&AlgebraicCurvature::from_tensor(&w.weyl), &ginv));
        }
    }
    if worst_w < 1e-9 && worst_trace < 1e-9 {
        Ok(format!("max |W| {worst_w:.1e} on 10 conformally flat models, max trace {worst_trace:.1e}"))
    } else {
        Err(format!("max |W| {worst_w:e}, max trace {worst_trace:e}"))
    }
}

fn phi_nonpositive() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut tuples = 0;
    let mut worst = f64::NEG_INFINITY;
    while tuples < 1000 {
        let n = rng.gen_range(3..=6);
        let mut rho: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..3.0)).collect();
        rho.sort_by(f64::total_cmp);
        if rho.iter().sum::<f64>() <= 1e-3 {
            continue;
        }
        worst = worst.max(phi(&rho).map_err(err)?);
        tuples += 1;
    }
    let shrinkers = [
        model("round_sphere", &[("n", 3.0)]),
        model("round_sphere", &[("n", 4.0)]),
        model("cylinder", &[("n", 3.0)]),
        model("cylinder", &[("n", 4.0)]),
        model("einstein_product", &[]),
    ];
    for inst in &shrinkers {
        let d = spectral_diagnostics(inst, &inst.default_grid(20, 9).map_err(err)?).map_err(err)?;
        for rho in &d.ricci_eigenvalues {
            worst = worst.max(phi(rho).map_err(err)?);
        }
    }
    if worst > 1e-12 {
        return Err(format!("max φ {worst:e}"));
    }
    let mut zero = 0.0f64;
    for n in 3..=6 {
        for c in [0.5, 1.0, 3.0] {
            zero = zero.max(phi(&vec![c; n]).map_err(err)?.abs());
            let mut split = vec![c; n];
            split[0] = 0.0;
            zero = zero.max(phi(&split).map_err(err)?.abs());
        }
    }
    if zero > 1e-15 {
        return Err(format!("φ on a vanishing branch is {zero:e}"));
    }
    Ok(format!("1000 tuples + 5 shrinker grids, max φ {worst:.1e}; branches vanish to {zero:.0e}"))
}

fn classification() -> Outcome {
    let mut n = 0;
    for entry in catalog() {
        let inst = build_model(entry.name, &BTreeMap::new()).map_err(err)?;
        let grid = inst.default_grid(20, 4).map_err(err)?;
        let label = classify(&inst, &grid).map_err(err)?.label;
        if label.label() != entry.expected_class {
            return Err(format!("{} classified {}, expected {}", entry.name, label, entry.expected_class));
        }
        let scaled = classify(&inst.scaled(2.0), &grid).map_err(err)?.label;
        if scaled != label {
            return Err(format!("{} changes label under g → 2g", entry.name));
        }
        n += 1;
    }
    for name in ["gaussian", "round_sphere", "cylinder"] {
        let bad = model(name, &[]).perturbed(0.01);
        let label = classify(&bad, &bad.default_grid(20, 4).map_err(err)?).map_err(err)?.label;
        if label != ModelClass::Inconclusive {
            return Err(format!("perturbed {name} classified {label}"));
        }
    }
    Ok(format!("{n} catalog labels match and are scale invariant; 3 controls inconclusive"))
}

fn f_volume() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=3usize {
        let lambda = 0.5;
        let inst = model("gaussian", &[("n", n as f64), ("lambda", lambda)]);
        let axes = inst.volume_box.clone().ok_or("no quadrature box")?;
        let resolution = if n == 3 { 120 } else { 400 };
        let v = f_volume_estimate(&inst, &axes, resolution).map_err(err)?.value();
        let exact = (2.0 * PI / lambda).powf(n as f64 / 2.0);
        worst = worst.max((v - exact).abs() / exact);
    }
    if worst < 1e-4 {
        Ok(format!("Gaussian n = 1, 2, 3 within relative {worst:.1e}"))
    } else {
        Err(format!("relative error {worst:e}"))
    }
}

fn warped() -> Outcome {
    let mut worst_mu = 0.0f64;
    let mut count = 0;
    let candidates = [
        model("round_sphere", &[("n", 2.0)]),
        model("round_sphere", &[("n", 3.0)]),
        model("round_sphere", &[("n", 4.0)]),
        model("cylinder", &[("n", 3.0)]),
        model("cylinder", &[("n", 4.0)]),
        model("hyperbolic", &[("n", 3.0)]),
        model("hyperbolic_cylinder", &[("n", 3.0)]),
        model("cigar", &[]),
    ];
    for inst in &candidates {
        let spec = inst.warped.as_ref().ok_or_else(|| format!("{} has no warped form", inst.label))?;
        let (det, err_mu) = concircular_check(spec, &inst.default_grid(10, 6).map_err(err)?).map_err(err)?;
        if !det.is_warped {
            return Err(format!("{} not detected as warped", inst.label));
        }
        worst_mu = worst_mu.max(err_mu);
        count += 1;
    }
    if worst_mu > 1e-7 {
        return Err(format!("μ differs from f'' by {worst_mu:e}"));
    }
    let r_grid: Vec<f64> = (1..=40).map(|i| 0.075 * i as f64).collect();
    let cigar_f: Profile = Arc::new(|r: &Jet| r.cosh().ln() * -2.0);
    let cigar = surface_soliton_residual(&cigar_spec(), &cigar_f, 0.0, &r_grid, 1e-9).map_err(err)?;
    let sphere = model("round_sphere", &[("n", 2.0)]);
    let zero: Profile = Arc::new(|r: &Jet| r.zero_like());
    let s_grid: Vec<f64> = (1..40).map(|i| PI * i as f64 / 40.0).collect();
    let s2 = surface_soliton_residual(sphere.warped.as_ref().ok_or("S² not warped")?, &zero, 1.0, &s_grid, 1e-9).map_err(err)?;
    let control = surface_soliton_residual(&cigar_spec(), &cigar_f, 0.5, &r_grid, 1e-9).map_err(err)?;
    if !cigar.passed() || !s2.passed() || control.passed() {
        return Err(format!(
            "ODE residuals cigar {:e}, S² {:e}, control {:e}",
            cigar.max_residual, s2.max_residual, control.max_residual
        ));
    }
    Ok(format!(
        "{count} warped models, max |μ − f''| {worst_mu:.1e}; ODE cigar {:.1e}, S² {:.1e}, control {:.1e}",
        cigar.max_residual, s2.max_residual, control.max_residual
    ))
}

fn negative_control() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let mut failed = Vec::new();
    for suite in ["identities", "elliptic", "spectra", "classify", "volume"] {
        let manifest = dir.path().join(format!("{suite}.toml"));
        std::fs::write(
            &manifest,
            format!(
                "suites = [\"{suite}\"]\n[grid]\ncount = 10\n[[models]]\nbuilder = \"gaussian\"\nparams = {{ n = 3, lambda = 0.5 }}\nperturb = 0.01\n"
            ),
        )
        .map_err(err)?;
        let out = Command::new(env!("CARGO_BIN_EXE_soliton"))
            .arg("verify")
            .arg(&manifest)
            .arg("--out")
            .arg(dir.path().join(format!("{suite}.json")))
            .output()
            .map_err(err)?;
        let stderr = String::from_utf8_lossy(&out.stderr);
        if out.status.code() != Some(1) || !stderr.contains("soliton-residual-failed") {
            return Err(format!("suite {suite} exited {:?}", out.status.code()));
        }
        failed.push(suite);
    }
    // the unperturbed manifest passes, so the failures come from the perturbation
    let manifest = dir.path().join("clean.toml");
    std::fs::write(
        &manifest,
        "suites = [\"identities\", \"spectra\", \"classify\", \"volume\"]\n[grid]\ncount = 10\n[[models]]\nbuilder = \"gaussian\"\nparams = { n = 3, lambda = 0.5 }\n",
    )
    .map_err(err)?;
    let status = Command::new(env!("CARGO_BIN_EXE_soliton"))
        .arg("verify")
        .arg(&manifest)
        .arg("--out")
        .arg(dir.path().join("clean.json"))
        .output()
        .map_err(err)?
        .status;
    if status.code() != Some(0) {
        return Err(format!("unperturbed control exited {:?}", status.code()));
    }
    Ok(format!("exit 1 with soliton-residual-failed from {}", failed.join(", ")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("identity suite", identities),
        ("elliptic suite", elliptic),
        ("R^# dual formulas", sharp_duality),
        ("Weyl tensor", weyl),
        ("φ nonpositivity", phi_nonpositive),
        ("classification", classification),
        ("f-volume", f_volume),
        ("warped products", warped),
        ("negative controls", negative_control),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of 9 acceptance criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
