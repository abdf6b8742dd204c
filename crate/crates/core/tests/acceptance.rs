//! Acceptance suite: one test per headline property of the artifact,
//! each printing a single PASS/FAIL verdict line (visible under
//! `cargo test --test acceptance -- --nocapture`).  Everything is
//! exact arithmetic; a FAIL panics with the offending cases.

use std::time::Instant;

use confsym_core::conformal::{self, laplacian_weights};
use confsym_core::enveloping::{rho, DegreeTwoMap, EnvAlgebra, EnvElement, EnvKind};
use confsym_core::invariants::{classify, trace_free_basis, AnsatzMonom};
use confsym_core::opalg::{normal_order_n, right_divide};
use confsym_core::quantization::{
    quantize, quantize_tracefree, radoux_coeffs, solve_quantization, QuantStatus,
};
use confsym_core::ring::{
    exponents, exponents_up_to, rat, rint, xp_pairing, Monom, PhasePoly, Signature,
};
use confsym_core::starproduct::{check_star, moment_image_products, PolySpan};
use confsym_core::symmetries::{solve_ckt, verify_symmetry, SymmetryCheck, SymmetryPair};

fn sig(p: usize, q: usize) -> Signature {
    Signature::new(p, q).unwrap()
}

fn verdict(name: &str, started: Instant, failures: Vec<String>) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("{name}: {status} [{:.2}s]", started.elapsed().as_secs_f64());
    assert!(failures.is_empty(), "{name}: {failures:?}");
}

#[test]
fn criterion_01_casimir_eigenvalue() {
    let t = Instant::now();
    let mut failures = Vec::new();
    for (n, lambda) in [(3usize, rat(1, 2)), (3, rat(1, 6)), (4, rat(1, 4)), (4, rat(0, 1))] {
        let s = sig(n, 0);
        let alg = EnvAlgebra::new(&s).unwrap();
        let op = alg.ell_morphism(&alg.casimir_env().unwrap(), &lambda).unwrap();
        let want = normal_order_n(
            &PhasePoly::one(n).scale(&rho(n, &lambda)),
            lambda.clone(),
            lambda.clone(),
        );
        if op != want {
            failures.push(format!("n={n} lambda={lambda}"));
        }
    }
    verdict("criterion 01 (Casimir acts by n^2*lambda*(1-lambda))", t, failures);
}

#[test]
fn criterion_02_tracefree_quantization_coefficients() {
    let t = Instant::now();
    let mut failures = Vec::new();
    let zero = rat(0, 1);
    for n in [3usize, 4] {
        let s = sig(n, 0);
        for lambda in [rat(1, 2), rat(2, 7)] {
            for k in 1..=3usize {
                let qm = solve_quantization(k, &zero, &lambda, &s).unwrap();
                if !matches!(qm.status(), QuantStatus::Unique) {
                    failures.push(format!("n={n} k={k} lambda={lambda}: not unique"));
                    continue;
                }
                let closed = radoux_coeffs(k, n, &lambda, &zero).unwrap();
                for m in 1..=k as u16 {
                    let mono = AnsatzMonom { r: 0, g: 0, l: 0, d: m, t: 0 };
                    let got =
                        qm.coefficients().get(&mono).cloned().unwrap_or_else(|| rint(0));
                    if got != closed[m as usize] {
                        failures.push(format!(
                            "n={n} k={k} lambda={lambda} divergence level {m}: {got} vs {}",
                            closed[m as usize]
                        ));
                    }
                }
                // the two routes agree as operators on x-dependent
                // trace-free symbols
                let x0 = PhasePoly::x_var(n, 0).unwrap();
                let x1 = PhasePoly::x_var(n, 1).unwrap();
                for f in trace_free_basis(&s, k).iter().take(2) {
                    let g = f
                        .mul(&x0)
                        .unwrap()
                        .add(&f.mul(&x1.mul(&x1).unwrap()).unwrap())
                        .unwrap();
                    if quantize(&g, &lambda, &lambda, &s).unwrap()
                        != quantize_tracefree(&g, &lambda, &lambda, &s).unwrap()
                    {
                        failures.push(format!("n={n} k={k} lambda={lambda}: operators differ"));
                    }
                }
            }
        }
    }
    verdict("criterion 02 (trace-free quantization coefficients)", t, failures);
}

#[test]
fn criterion_03_first_order_symmetries() {
    let t = Instant::now();
    let mut failures = Vec::new();
    for n in [3usize, 4] {
        let s = sig(n, 0);
        let gens = conformal::generators(&s).unwrap();
        let want = (n + 1) * (n + 2) / 2;
        if gens.len() != want {
            failures.push(format!("n={n}: {} generators, expected {want}", gens.len()));
        }
        for g in &gens {
            if !SymmetryPair::first_order(g, 1, &s).is_valid(&s).unwrap() {
                failures.push(format!("n={n} generator {}", g.label()));
            }
        }
    }
    verdict("criterion 03 (first-order symmetries at the Laplacian weight)", t, failures);
}

#[test]
fn criterion_04_killing_tensors_are_higher_symmetries() {
    let t = Instant::now();
    let mut failures = Vec::new();
    let slots: [(usize, usize, &[usize]); 4] =
        [(1, 0, &[1]), (2, 0, &[1]), (2, 1, &[1, 2]), (3, 1, &[1, 2])];
    for n in [3usize, 4] {
        let s = sig(n, 0);
        for (k, ks, ells) in slots {
            let kb = solve_ckt(k, ks, &s, None).unwrap();
            if !kb.stable || kb.dimension() == 0 {
                failures.push(format!("n={n} ({k},{ks}): unstable or empty basis"));
            }
            for (i, f) in kb.basis.iter().enumerate() {
                for &ell in ells {
                    // the strict form: the quantized pair itself
                    // intertwines, no division fallback
                    if !matches!(
                        verify_symmetry(f, ell, &s).unwrap(),
                        SymmetryCheck::Pair(_)
                    ) {
                        failures.push(format!("n={n} ({k},{ks}) element {i} ell={ell}"));
                    }
                }
            }
        }
    }
    verdict("criterion 04 (Killing tensors quantize to higher symmetries)", t, failures);
}

/// Multiplicative congruential step (Knuth's MMIX constants).
fn lcg(state: &mut u64) -> u64 {
    *state = state
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    *state
}

#[test]
fn criterion_05_non_killing_symbols_fail() {
    let t = Instant::now();
    let mut failures = Vec::new();
    let s = sig(3, 0);
    let killing: Vec<PhasePoly> = solve_ckt(2, 0, &s, None)
        .unwrap()
        .basis
        .into_iter()
        .chain(solve_ckt(2, 1, &s, None).unwrap().basis)
        .collect();
    let span = PolySpan::build(&killing);
    let mut pool = Vec::new();
    for pe in exponents(3, 2) {
        for xe in exponents_up_to(3, 2) {
            pool.push(Monom::new(xe, pe.clone()));
        }
    }
    let mut state = 0x5eed_1dea_0f00_ba5eu64;
    let mut found = 0usize;
    let mut attempts = 0usize;
    while found < 20 && attempts < 200 {
        attempts += 1;
        let mut f = PhasePoly::zero(3);
        for m in &pool {
            let c = (lcg(&mut state) >> 33) % 7;
            f.add_term(m.clone(), rint(c as i64 - 3));
        }
        if f.is_zero() || span.contains(&f) {
            continue;
        }
        found += 1;
        match verify_symmetry(&f, 1, &s).unwrap() {
            SymmetryCheck::Defect(d) if !d.is_zero() => {}
            other => failures.push(format!("sample {found}: {other:?}")),
        }
    }
    if found < 20 {
        failures.push(format!("sampler produced only {found} symbols outside the span"));
    }
    verdict("criterion 05 (random non-Killing symbols have nonzero defect)", t, failures);
}

#[test]
fn criterion_06_degree_two_kernel_dimensions() {
    let t = Instant::now();
    let mut failures = Vec::new();
    let lambda = rat(1, 2);
    for n in [3usize, 4] {
        let s = sig(n, 0);
        let alg = EnvAlgebra::new(&s).unwrap();
        let d = n + 2;
        let want_ambient = d * (d - 1) * (d - 2) * (d - 3) / 24;
        let amb = alg.kernel_deg2(&DegreeTwoMap::AmbientMoment).unwrap().dimension;
        if amb != want_ambient {
            failures.push(format!("n={n} ambient kernel {amb}, expected {want_ambient}"));
        }
        let model = alg.kernel_deg2(&DegreeTwoMap::ModelMoment).unwrap().dimension;
        if model != want_ambient + 1 {
            failures.push(format!("n={n} model kernel {model}, expected {}", want_ambient + 1));
        }
        let ell = alg
            .kernel_deg2(&DegreeTwoMap::Ell(lambda.clone()))
            .unwrap()
            .dimension;
        if ell != want_ambient + 1 {
            failures.push(format!("n={n} morphism kernel {ell}, expected {}", want_ambient + 1));
        }
        let shifted = alg
            .casimir_env()
            .unwrap()
            .sub(&EnvElement::unit(EnvKind::Enveloping).scale(&rho(n, &lambda)))
            .unwrap();
        if !alg.ell_morphism(&shifted, &lambda).unwrap().is_zero() {
            failures.push(format!("n={n}: shifted Casimir outside the kernel"));
        }
    }
    verdict("criterion 06 (degree-2 kernel dimensions and Casimir member)", t, failures);
}

#[test]
fn criterion_07_ambient_casimir_pullback() {
    let t = Instant::now();
    let mut failures = Vec::new();
    for n in [3usize, 4] {
        let s = sig(n, 0);
        let alg = EnvAlgebra::new(&s).unwrap();
        let d = n + 2;
        let amb = alg.moment_pullback(&alg.casimir(), true).unwrap();
        let xp = xp_pairing(d);
        let mut x2 = PhasePoly::zero(d);
        let mut p2 = PhasePoly::zero(d);
        for a in 0..d {
            for b in 0..d {
                let g = alg.metric_at(a, b).clone();
                if g == rint(0) {
                    continue;
                }
                let xa = PhasePoly::x_var(d, a).unwrap();
                let xb = PhasePoly::x_var(d, b).unwrap();
                x2 = x2.add(&xa.mul(&xb).unwrap().scale(&g)).unwrap();
                let pa = PhasePoly::p_var(d, a).unwrap();
                let pb = PhasePoly::p_var(d, b).unwrap();
                p2 = p2.add(&pa.mul(&pb).unwrap().scale(&g)).unwrap();
            }
        }
        let want = xp.mul(&xp).unwrap().sub(&x2.mul(&p2).unwrap()).unwrap();
        if amb != want {
            failures.push(format!("n={n}"));
        }
    }
    verdict("criterion 07 (ambient Casimir pullback is (xp)^2 - x^2 p^2)", t, failures);
}

#[test]
fn criterion_08_quadratic_ideal_membership() {
    let t = Instant::now();
    let mut failures = Vec::new();
    for n in [3usize, 4] {
        let s = sig(n, 0);
        let alg = EnvAlgebra::new(&s).unwrap();
        let gens = alg.generators().to_vec();
        let (special, _) = laplacian_weights(&s, 1);
        let dim = alg.dim();
        for a in 0..dim {
            for b in a..dim {
                let g = alg.joseph_generator(&gens[a], &gens[b], &special).unwrap();
                let op = alg.ell_morphism(&g, &special).unwrap();
                if right_divide(&op, 1, &s).unwrap().is_none() {
                    failures.push(format!(
                        "n={n} pair ({},{}) at the special weight",
                        gens[a].label(),
                        gens[b].label()
                    ));
                }
            }
        }
        // counter-probe: a generic weight leaves some pair undivided
        let generic = rat(2, 7);
        let mut any_failed = false;
        'probe: for a in 0..dim {
            for b in a..dim {
                let g = alg.joseph_generator(&gens[a], &gens[b], &generic).unwrap();
                let op = alg.ell_morphism(&g, &generic).unwrap();
                if right_divide(&op, 1, &s).unwrap().is_none() {
                    any_failed = true;
                    break 'probe;
                }
            }
        }
        if !any_failed {
            failures.push(format!("n={n}: every pair divided at a generic weight"));
        }
    }
    verdict("criterion 08 (quadratic generators right-divisible by the Laplacian)", t, failures);
}

#[test]
fn criterion_09_star_product_suite() {
    let t = Instant::now();
    let mut failures = Vec::new();
    let s = sig(3, 0);
    let report = check_star(&rat(1, 2), 2, &s).unwrap();
    for (name, ok) in [
        ("gradation", report.gradation),
        ("associativity", report.associativity),
        ("strong_invariance", report.strong_invariance),
        ("symmetric_parity", report.symmetric_parity),
        ("tangential", report.tangential),
        ("descent", report.descent),
    ] {
        if !ok {
            failures.push(format!("lambda=1/2: {name}"));
        }
    }
    if report.descent_lambda != rat(1, 6) {
        failures.push("descent weight is not (n-2)/(2n)".into());
    }
    let at_zero = check_star(&rat(0, 1), 2, &s).unwrap();
    if at_zero.symmetric_parity || at_zero.parity_witness.is_none() {
        failures.push("lambda=0: expected a parity failure with witness".into());
    }
    for (name, ok) in [
        ("gradation", at_zero.gradation),
        ("associativity", at_zero.associativity),
        ("strong_invariance", at_zero.strong_invariance),
        ("tangential", at_zero.tangential),
        ("descent", at_zero.descent),
    ] {
        if !ok {
            failures.push(format!("lambda=0: {name}"));
        }
    }
    verdict("criterion 09 (graded star product property suite)", t, failures);
}

#[test]
fn criterion_10_classification_spot_checks() {
    let t = Instant::now();
    let mut failures = Vec::new();
    let s = sig(3, 0);
    let n = 3i64;
    let one = rint(1);

    // special weights carry exactly one invariant operator per slot
    let d_delta = one.clone() + rat(2, n);
    let slots = [
        ("divergence", 1usize, 0usize, d_delta.clone(), d_delta.clone(), 4usize),
        ("gradient", 3, 0, rat(0, 1), rat(2, n), 3),
        ("second-order", 2, 0, rat(1, 2) + rat(1, n), rat(1, 2) + rat(3, n), 4),
    ];
    for (name, kp, sp, delta, deltap, bound) in &slots {
        let c = classify(2, 0, *kp, *sp, delta, deltap, &s, *bound).unwrap();
        if c.dimension != 1 {
            failures.push(format!("{name} slot: dimension {}", c.dimension));
        }
    }
    // generic weights keep the same slots empty
    let generic = [
        ("divergence", 1usize, 0usize, rat(7, 5), rat(7, 5), 4usize),
        ("gradient", 3, 0, rat(3, 7), rat(3, 7) + rat(2, n), 3),
        ("second-order", 2, 0, rat(5, 11), rat(5, 11) + rat(2, n), 4),
    ];
    for (name, kp, sp, delta, deltap, bound) in &generic {
        let c = classify(2, 0, *kp, *sp, delta, deltap, &s, *bound).unwrap();
        if c.dimension != 0 {
            failures.push(format!("generic {name} slot: dimension {}", c.dimension));
        }
    }

    // the solved map degenerates exactly at the excluded shifts
    let lambda = rat(1, 3);
    let cases: [(usize, Vec<confsym_core::ring::Rat>); 2] = [
        (1, vec![one.clone()]),
        (2, vec![one.clone() + rat(1, n), one + rat(2, n)]),
    ];
    for (k, excluded) in cases {
        for d in excluded {
            let qm = solve_quantization(k, &d, &lambda, &s).unwrap();
            if matches!(qm.status(), QuantStatus::Unique) {
                failures.push(format!("k={k} delta={d}: unexpectedly unique"));
            }
        }
        for d in [rat(0, 1), rat(1, 5)] {
            let qm = solve_quantization(k, &d, &lambda, &s).unwrap();
            if !matches!(qm.status(), QuantStatus::Unique) {
                failures.push(format!("k={k} delta={d}: {}", qm.status()));
            }
        }
    }
    verdict("criterion 10 (invariant-operator and existence spot checks)", t, failures);
}

#[test]
fn criterion_11_moment_image_generation() {
    let t = Instant::now();
    let mut failures = Vec::new();
    let s = sig(3, 0);
    let products = moment_image_products(&s, 2).unwrap();
    let image = PolySpan::build(&products);
    let flat = solve_ckt(2, 0, &s, None).unwrap().basis;
    let deep = solve_ckt(2, 1, &s, None).unwrap().basis;
    let expected_rank = flat.len() + deep.len();
    let killing: Vec<PhasePoly> = flat.into_iter().chain(deep).collect();
    let killing_span = PolySpan::build(&killing);
    if killing_span.rank() != expected_rank {
        failures.push(format!(
            "Killing components overlap: rank {} vs {expected_rank}",
            killing_span.rank()
        ));
    }
    if image.rank() != killing_span.rank() {
        failures.push(format!(
            "image rank {} vs Killing span rank {}",
            image.rank(),
            killing_span.rank()
        ));
    }
    if !products.iter().all(|f| killing_span.contains(f)) {
        failures.push("a moment product falls outside the Killing span".into());
    }
    if !killing.iter().all(|f| image.contains(f)) {
        failures.push("a Killing tensor falls outside the moment image".into());
    }
    verdict("criterion 11 (degree-2 moment image equals the Killing span)", t, failures);
}
