use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use entclass::classify::{
    classification_report, classification_report_with, ghz_distillable, pair_distillable,
    split_margin, three_qubit_class, witness_decomposition, ReportOptions,
    ThreeQubitClass,
};
use entclass::depolarize::{depolarize_channel, ghz_offdiagonal_residual};
use entclass::ghz::{ghz_basis_state, ghz_diagonal_operator, ghz_overlaps, rho_from_params, GhzIndex, Sign};
use entclass::mixture::{ghz_mixture_params, ghz_mixture_state, separability_threshold, MixtureWeight};
use entclass::purify::{
    min_copies_to_distill, multicopy_oracle, pair_fidelity_after_projection, purification_step,
    CopiesOutcome, DEFAULT_MAX_COPIES,
};
use entclass::qstate::{is_ppt, overlap, random_density_matrix, QubitSubset};
use entclass::splits::{
    count_shape_configurations, enumerate_k_splits, integer_partitions, is_contained,
    lambda_count, lambda_index_to_split, partition_function, split_to_lambda_index, stirling2,
    Split, SplitIndex,
};
use entclass::RhoNParams;

type Outcome = Result<String, String>;

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_params(n: usize, rng: &mut ChaCha8Rng) -> RhoNParams {
    let count = lambda_count(n).unwrap();
    RhoNParams::from_unnormalized_weights(
        n,
        rng.gen(),
        rng.gen(),
        (0..count).map(|_| rng.gen()).collect(),
    )
    .unwrap()
}

/// Random parameters with `2λ_k >= |Δ|` for every split.
fn random_all_ppt(n: usize, rng: &mut ChaCha8Rng) -> RhoNParams {
    let count = lambda_count(n).unwrap();
    let lambdas: Vec<f64> = (0..count).map(|_| rng.gen_range(0.05..1.0)).collect();
    let min = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let base: f64 = rng.gen();
    let d = rng.gen::<f64>() * 2.0 * min;
    let (plus, minus) = if rng.gen() { (base + d, base) } else { (base, base + d) };
    RhoNParams::from_unnormalized_weights(n, plus, minus, lambdas).unwrap()
}

fn split_encoding() -> Outcome {
    let s = Split::from_labels(6, &[vec![1, 4, 5], vec![2, 3, 6]]).map_err(|e| e.to_string())?;
    let k = split_to_lambda_index(&s).map_err(|e| e.to_string())?;
    ensure(k == SplitIndex(19), || format!("expected index 19, got {}", k.0))?;
    for n in 2..=10 {
        let count = lambda_count(n).map_err(|e| e.to_string())?;
        ensure(count == (1 << (n - 1)) - 1, || format!("n={n}: count {count}"))?;
        let mut seen = std::collections::HashSet::new();
        for k in 1..=count {
            let split = lambda_index_to_split(n, SplitIndex(k)).map_err(|e| e.to_string())?;
            let back = split_to_lambda_index(&split).map_err(|e| e.to_string())?;
            ensure(back.0 == k, || format!("n={n}: {k} round-trips to {}", back.0))?;
            ensure(seen.insert(split), || format!("n={n}: split for {k} repeated"))?;
        }
        let bip = enumerate_k_splits(n, 2).map_err(|e| e.to_string())?;
        ensure(bip.len() == count, || format!("n={n}: {} bipartite splits", bip.len()))?;
    }
    Ok("index 19; bijection for N=2..10".into())
}

fn analytic_vs_numeric() -> Outcome {
    let tol = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0usize;
    let mut disagreements = 0usize;
    for n in 2..=5 {
        for _ in 0..200 {
            let p = random_params(n, &mut rng);
            let rho = rho_from_params(&p).map_err(|e| e.to_string())?;
            for k in 1..=lambda_count(n).unwrap() {
                let analytic = split_margin(&p, SplitIndex(k), tol);
                let split = lambda_index_to_split(n, SplitIndex(k)).map_err(|e| e.to_string())?;
                let side = &split.blocks()[0];
                let dense = is_ppt(&rho, side, tol).map_err(|e| e.to_string())?;
                checked += 1;
                if dense.ppt != analytic.ppt {
                    disagreements += 1;
                    let gap = 2.0 * p.lambda(SplitIndex(k)) - p.delta().abs();
                    ensure(gap.abs() < tol, || {
                        format!("n={n}, k={k}: disagreement with gap {gap:e}")
                    })?;
                }
            }
        }
    }
    Ok(format!("{checked} split checks, {disagreements} boundary disagreements"))
}

fn depolarization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = [0.0f64; 3];
    for n in 2..=4 {
        for _ in 0..50 {
            let rho = random_density_matrix(n, &mut rng).map_err(|e| e.to_string())?;
            let out = depolarize_channel(&rho).map_err(|e| e.to_string())?;
            let residual = ghz_offdiagonal_residual(&out).map_err(|e| e.to_string())?;
            let (ip, im) = ghz_overlaps(&rho).map_err(|e| e.to_string())?;
            let (op, om) = ghz_overlaps(&out).map_err(|e| e.to_string())?;
            let mut preserved = (ip[0] - op[0]).abs().max((im[0] - om[0]).abs());
            for j in 1..ip.len() {
                preserved = preserved.max(((ip[j] + im[j]) - (op[j] + om[j])).abs());
            }
            let twice = depolarize_channel(&out).map_err(|e| e.to_string())?;
            let idem = twice.max_abs_diff(&out);
            worst[0] = worst[0].max(residual);
            worst[1] = worst[1].max(preserved);
            worst[2] = worst[2].max(idem);
        }
    }
    ensure(worst[0] <= 1e-12, || format!("off-diagonal residual {:e}", worst[0]))?;
    ensure(worst[1] <= 1e-12, || format!("weight preservation error {:e}", worst[1]))?;
    ensure(worst[2] <= 1e-13, || format!("idempotence error {:e}", worst[2]))?;
    Ok(format!(
        "residual {:.1e}, preservation {:.1e}, idempotence {:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

fn threshold_sharpness() -> Outcome {
    let t3 = separability_threshold(3).map_err(|e| e.to_string())?;
    ensure(t3.to_string() == "1/5", || format!("N=3 threshold {t3}"))?;
    let opts = ReportOptions {
        tol: 1e-12,
        ..ReportOptions::default()
    };
    for n in 3..=8 {
        let t = separability_threshold(n).map_err(|e| e.to_string())?;
        ensure(t.numerator == 1 && t.denominator == 1 + (1 << (n - 1)), || {
            format!("n={n}: threshold {t}")
        })?;
        // Margin 2(1-x)/2^N - x vanishes exactly at the rational x*.
        let margin_num = 2 * (t.denominator - t.numerator) as i128 - (1i128 << n) * t.numerator as i128;
        ensure(margin_num == 0, || format!("n={n}: rational margin {margin_num}"))?;
        let all = QubitSubset::new(n, &(0..n).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
        for (x, above) in [(t.value() - 1e-9, false), (t.value(), false), (t.value() + 1e-9, true)] {
            let p = ghz_mixture_params(n, MixtureWeight::new(x).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let r = classification_report_with(&p, &opts).map_err(|e| e.to_string())?;
            let all_npt = r.bipartite.iter().all(|e| !e.ppt);
            let ghz = ghz_distillable(&p, &all, opts.tol).map_err(|e| e.to_string())?;
            if above {
                ensure(all_npt && ghz && !r.fully_separable, || {
                    format!("n={n}: x*+1e-9 not fully NPT and GHZ distillable")
                })?;
            } else {
                ensure(r.fully_separable && !ghz, || format!("n={n}: x={x} not fully separable"))?;
            }
        }
    }
    Ok("x* = 1/(1+2^(N-1)) sharp for N=3..8; N=3 gives 1/5".into())
}

fn purification_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for (n, m) in [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2)] {
        let p = random_params(n, &mut rng);
        let step = purification_step(&p, m).map_err(|e| e.to_string())?;
        let closed = ghz_diagonal_operator(&step.raw_weights()).map_err(|e| e.to_string())?;
        let oracle = multicopy_oracle(&p, m).map_err(|e| e.to_string())?;
        let diff = closed.max_abs_diff(&oracle);
        ensure(diff <= 1e-12, || format!("(N={n}, M={m}): entrywise error {diff:e}"))?;
        let raw = step.raw_weights();
        let h = p.delta() / 2.0;
        let mut law = ((raw.delta() / 2.0) - h.powi(m as i32)).abs();
        for (out, inp) in raw.lambdas.iter().zip(p.lambdas()) {
            law = law.max((out - inp.powi(m as i32)).abs());
        }
        ensure(law <= 1e-14, || format!("(N={n}, M={m}): power law off by {law:e}"))?;
        worst = worst.max(diff);
    }
    Ok(format!("max entrywise error {worst:.1e}"))
}

fn distillation_closure() -> Outcome {
    let tol = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut done = 0usize;
    let mut max_m = 0usize;
    let mut min_f = f64::INFINITY;
    while done < 100 {
        let n = if done.is_multiple_of(2) { 3 } else { 4 };
        let p = random_params(n, &mut rng);
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        if !pair_distillable(&p, i, j, tol).map_err(|e| e.to_string())? {
            continue;
        }
        let m = match min_copies_to_distill(&p, i, j, tol, DEFAULT_MAX_COPIES)
            .map_err(|e| e.to_string())?
        {
            CopiesOutcome::Copies(m) => m,
            other => return Err(format!("n={n} pair ({i},{j}): {other:?}")),
        };
        let out = if m >= 2 {
            purification_step(&p, m).map_err(|e| e.to_string())?.output
        } else {
            p.clone()
        };
        let f = pair_fidelity_after_projection(&out, i, j).map_err(|e| e.to_string())?;
        ensure(f > 0.5, || format!("n={n} pair ({i},{j}), M={m}: fidelity {f}"))?;
        max_m = max_m.max(m);
        min_f = min_f.min(f);
        done += 1;
    }
    Ok(format!("100 pairs, max M = {max_m}, min fidelity {min_f:.4}"))
}

fn three_qubit_classes() -> Outcome {
    let tol = 1e-9;
    let params = |l0p: f64, lambdas: Vec<f64>| {
        RhoNParams::from_unnormalized_weights(3, l0p, 0.0, lambdas).map_err(|e| e.to_string())
    };
    let p = params(2.0 / 3.0, vec![0.0, 1.0 / 3.0, 0.0])?;
    let class = three_qubit_class(&p, tol).map_err(|e| e.to_string())?;
    ensure(class == ThreeQubitClass::Class2_1, || format!("class {class}"))?;
    ensure(pair_distillable(&p, 1, 2, tol).map_err(|e| e.to_string())?, || {
        "pair BC not distillable".into()
    })?;
    for j in [1, 2] {
        ensure(!pair_distillable(&p, 0, j, tol).map_err(|e| e.to_string())?, || {
            format!("pair A{} distillable", j + 1)
        })?;
    }
    let rows = [
        (params(1.0, vec![0.0, 0.0, 0.0])?, ThreeQubitClass::Class1),
        (p.clone(), ThreeQubitClass::Class2_1),
        (params(0.4, vec![0.2, 0.2, 0.0])?, ThreeQubitClass::Class3_1),
        (params(0.4, vec![0.2, 0.2, 0.2])?, ThreeQubitClass::Class5),
    ];
    for (p, expected) in &rows {
        let r = classification_report(p).map_err(|e| e.to_string())?;
        let label = r.class_label.as_ref().ok_or("missing class label")?;
        ensure(label.class == *expected, || format!("expected {expected}, got {}", label.class))?;
        match expected {
            ThreeQubitClass::Class1 => ensure(r.ghz(&[0, 1, 2]) == Some(true), || {
                "class 1 row not GHZ distillable".into()
            })?,
            ThreeQubitClass::Class3_1 => ensure(label.activation_pair == Some([1, 2]), || {
                "class 3.1 row not activated by AB".into()
            })?,
            ThreeQubitClass::Class5 => ensure(r.fully_separable, || {
                "class 5 row not fully separable".into()
            })?,
            _ => {}
        }
    }
    Ok("class 2.1 with pair BC; rows 1, 2.1, 3.1, 5 reproduced".into())
}

fn partition_counts() -> Outcome {
    for (n, expected) in [(10usize, 42u64), (50, 204_226), (100, 190_569_292)] {
        let p = partition_function(n);
        ensure(p == BigUint::from(expected), || format!("p({n}) = {p}"))?;
    }
    for n in 1..=8 {
        for k in 1..=n {
            let listed = enumerate_k_splits(n, k).map_err(|e| e.to_string())?.len();
            let by_shape: BigUint = integer_partitions(n)
                .iter()
                .filter(|s| s.k() == k)
                .map(count_shape_configurations)
                .sum();
            ensure(by_shape == BigUint::from(listed), || {
                format!("n={n}, k={k}: shapes give {by_shape}, listing {listed}")
            })?;
            ensure(stirling2(n, k) == BigUint::from(listed), || {
                format!("n={n}, k={k}: Stirling mismatch")
            })?;
        }
    }
    Ok("p(10)=42, p(50)=204226, p(100)=190569292; shape sums match for N<=8".into())
}

fn witnesses() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for n in [3, 4] {
        for _ in 0..50 {
            let p = random_all_ppt(n, &mut rng);
            let finest = Split::finest(n).map_err(|e| e.to_string())?;
            let w = witness_decomposition(&p, &finest, 1e-9).map_err(|e| e.to_string())?;
            ensure(w.ensemble.terms.iter().all(|t| t.weight >= 0.0), || {
                "negative ensemble weight".into()
            })?;
            w.ensemble.verify(1e-10).map_err(|e| e.to_string())?;
            let image = depolarize_channel(&w.state).map_err(|e| e.to_string())?;
            let target = rho_from_params(&p).map_err(|e| e.to_string())?;
            let diff = image.max_abs_diff(&target);
            ensure(diff <= 1e-10, || format!("n={n}: channel image off by {diff:e}"))?;
            worst = worst.max(diff);
        }
    }
    Ok(format!("100 ensembles, max channel-image error {worst:.1e}"))
}

fn werner() -> Outcome {
    let t = separability_threshold(2).map_err(|e| e.to_string())?;
    ensure(t.to_string() == "1/3", || format!("N=2 threshold {t}"))?;
    let x = MixtureWeight::new(t.value()).map_err(|e| e.to_string())?;
    let rho = ghz_mixture_state(2, x).map_err(|e| e.to_string())?;
    let side = QubitSubset::new(2, &[0]).map_err(|e| e.to_string())?;
    let check = is_ppt(&rho, &side, 1e-12).map_err(|e| e.to_string())?;
    ensure(check.min_eigenvalue.abs() <= 1e-12, || {
        format!("PT minimum eigenvalue {:e} at x = 1/3", check.min_eigenvalue)
    })?;
    let bell = ghz_basis_state(2, GhzIndex::new(0, Sign::Plus)).map_err(|e| e.to_string())?;
    let f = overlap(&rho, &bell).map_err(|e| e.to_string())?;
    ensure((f - 0.5).abs() <= 1e-12, || format!("fidelity {f} at x = 1/3"))?;
    for (dx, ppt) in [(-1e-9, true), (1e-9, false)] {
        let rho = ghz_mixture_state(2, MixtureWeight::new(t.value() + dx).unwrap())
            .map_err(|e| e.to_string())?;
        let c = is_ppt(&rho, &side, 1e-12).map_err(|e| e.to_string())?;
        ensure(c.ppt == ppt, || format!("x* {dx:+e}: PPT = {}", c.ppt))?;
    }
    Ok(format!("PT eigenvalue {:.1e}, fidelity {f:.12} at x = 1/3", check.min_eigenvalue))
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut pairs = 0usize;
    for i in 0..100 {
        let n = if i % 2 == 0 { 4 } else { 5 };
        let p = random_params(n, &mut rng);
        let r = classification_report(&p).map_err(|e| e.to_string())?;
        for fine in &r.k_splits {
            for coarse in &r.k_splits {
                if fine.split == coarse.split || !is_contained(&fine.split, &coarse.split) {
                    continue;
                }
                pairs += 1;
                ensure(!fine.separable || coarse.separable, || {
                    format!("{} separable but {} not", fine.split, coarse.split)
                })?;
            }
            for b in &r.bipartite {
                if !b.ppt && is_contained(&fine.split, &b.split) {
                    ensure(!fine.separable, || {
                        format!("{} NPT but finer {} separable", b.split, fine.split)
                    })?;
                }
            }
        }
    }
    Ok(format!("{pairs} containment pairs checked"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("split-index encoding", split_encoding, Duration::from_secs(1)),
        ("analytic vs numeric PPT", analytic_vs_numeric, Duration::from_secs(60)),
        ("depolarization channel", depolarization, Duration::from_secs(60)),
        ("mixture threshold sharpness", threshold_sharpness, Duration::from_secs(10)),
        ("purification vs brute force", purification_oracle, Duration::from_secs(60)),
        ("distillation closure", distillation_closure, Duration::from_secs(60)),
        ("three-qubit classes", three_qubit_classes, Duration::from_secs(60)),
        ("partition counts", partition_counts, Duration::from_secs(60)),
        ("witness decompositions", witnesses, Duration::from_secs(60)),
        ("two-qubit Werner boundary", werner, Duration::from_secs(60)),
        ("hierarchy monotonicity", monotonicity, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (idx, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > *budget => Err(format!("took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}; {elapsed:.2?})", idx + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({detail}; {elapsed:.2?})", idx + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
