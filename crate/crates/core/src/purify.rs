//! Multi-copy purification: the local filter `P`, its closed-form action on
//! `ρ_N`, a dense multi-copy oracle, and the pair-fidelity test.

use num_complex::Complex64;
use serde::Serialize;

use crate::classify::{pair_distillable, separating_indices};
use crate::error::{Error, Result};
use crate::ghz::{rho_from_params, GhzWeights, RhoNParams};
use crate::qstate::{
    apply_local_operator, check_qubit_cap, project_local, tensor_product, CMatrix, DensityMatrix,
};
use crate::splits::{lambda_index_to_split, Split, SplitIndex};

/// Default upper bound on the copy search in [`min_copies_to_distill`].
pub const DEFAULT_MAX_COPIES: usize = 10_000;

/// Outcome of one purification step on `M` copies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PurificationStep {
    pub copies: usize,
    pub input: RhoNParams,
    /// Normalized output parameters.
    pub output: RhoNParams,
    /// Trace of the unnormalized output.
    pub success_probability: f64,
    pub log_success_probability: f64,
}

impl PurificationStep {
    /// Unnormalized output weights: `λ_k^M` and `s^M ± (Δ/2)^M` with
    /// `s = (λ_0^+ + λ_0^-)/2`. Entries may underflow to zero for large `M`.
    pub fn raw_weights(&self) -> GhzWeights {
        let w = self.output.weights();
        let scale = self.success_probability;
        GhzWeights {
            n: w.n,
            lambda0_plus: w.lambda0_plus * scale,
            lambda0_minus: w.lambda0_minus * scale,
            lambdas: w.lambdas.iter().map(|x| x * scale).collect(),
        }
    }
}

/// `ln Σ_i c_i e^{x_i}` over terms with finite `x_i`.
fn log_sum_exp(terms: &[(f64, f64)]) -> f64 {
    let max = terms
        .iter()
        .filter(|(_, x)| x.is_finite())
        .map(|&(_, x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = terms
        .iter()
        .filter(|(_, x)| x.is_finite())
        .map(|&(c, x)| c * (x - max).exp())
        .sum();
    max + sum.ln()
}

/// `x^m` written as `(sign, m ln|x|)`.
fn signed_log_pow(x: f64, m: usize) -> (f64, f64) {
    let sign = if x < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
    (sign, m as f64 * x.abs().ln())
}

/// Applies `P` at every site of `M` copies and keeps the first copy.
///
/// Every output coefficient is the `M`-th power of the input one in the
/// computational basis, so `Δ̃/2 = (Δ/2)^M`, `λ̃_k = λ_k^M`, and
/// `λ̃_0^± = s^M ± (Δ/2)^M`. Normalization runs in the log domain.
pub fn purification_step(p: &RhoNParams, copies: usize) -> Result<PurificationStep> {
    if copies < 2 {
        return Err(Error::InvalidArgument(format!(
            "purification needs at least 2 copies, got {copies}"
        )));
    }
    let s = 0.5 * (p.lambda0_plus() + p.lambda0_minus());
    let h = 0.5 * p.delta();
    let ln_s = copies as f64 * s.ln();
    let (h_sign, ln_h) = signed_log_pow(h, copies);
    let ln_l: Vec<f64> = p.lambdas().iter().map(|l| copies as f64 * l.ln()).collect();

    let mut terms = vec![(2.0, ln_s)];
    terms.extend(ln_l.iter().map(|&x| (2.0, x)));
    let ln_trace = log_sum_exp(&terms);
    if !ln_trace.is_finite() {
        return Err(Error::ZeroProbability(0.0));
    }
    let norm = |x: f64| (x - ln_trace).exp();
    let l0p = norm(ln_s) + h_sign * norm(ln_h);
    let l0m = (norm(ln_s) - h_sign * norm(ln_h)).max(0.0);
    let lambdas: Vec<f64> = ln_l.iter().map(|&x| norm(x)).collect();
    let output = RhoNParams::with_tolerance(p.n(), l0p, l0m, lambdas, 1e-10)?;
    Ok(PurificationStep {
        copies,
        input: p.clone(),
        output,
        success_probability: ln_trace.exp(),
        log_success_probability: ln_trace,
    })
}

/// `P = |0..0><0..0| + |10..0><1..1|` on `m` qubits.
pub fn filter_operator(m: usize) -> CMatrix {
    let dim = 1usize << m;
    let mut op = CMatrix::zeros(dim, dim);
    op[(0, 0)] = Complex64::new(1.0, 0.0);
    op[(dim >> 1, dim - 1)] = Complex64::new(1.0, 0.0);
    op
}

/// Dense reference: `P^{⊗N} ρ^{⊗M} P^{†⊗N}` on `N·M` qubits (copy-major),
/// restricted to the first copy with the others in `|0..0>`.
///
/// Fails if any weight is left outside that block.
pub fn multicopy_oracle(p: &RhoNParams, copies: usize) -> Result<DensityMatrix> {
    let n = p.n();
    if copies == 0 {
        return Err(Error::InvalidArgument("need at least one copy".into()));
    }
    let total = n
        .checked_mul(copies)
        .ok_or(Error::SizeCap { requested: usize::MAX, max: crate::qstate::max_qubits() })?;
    check_qubit_cap(total)?;
    let rho = rho_from_params(p)?;
    let mut big = rho.clone();
    for _ in 1..copies {
        big = tensor_product(&big, &rho)?;
    }
    let op = filter_operator(copies);
    for site in 0..n {
        let qubits: Vec<usize> = (0..copies).map(|c| c * n + site).collect();
        big = apply_local_operator(&big, &qubits, &op)?;
    }
    let shift = n * (copies - 1);
    let dim = 1usize << n;
    let m = big.entries();
    let first = CMatrix::from_fn(dim, dim, |r, c| m[(r << shift, c << shift)]);
    let kept: f64 = first.iter().map(|z| z.norm_sqr()).sum();
    let all: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let leakage = (all - kept).max(0.0).sqrt();
    if leakage > 1e-12 {
        return Err(Error::Invariant(format!(
            "filtered copies left weight {leakage:e} outside |0..0>"
        )));
    }
    Ok(DensityMatrix::from_parts(n, first, false))
}

/// Result of [`min_copies_to_distill`].
#[derive(Clone, Debug, PartialEq)]
pub enum CopiesOutcome {
    Copies(usize),
    /// Some split separating the pair is PPT (or on the boundary).
    NotDistillable { violated: Vec<Split> },
    /// Distillable, but no `M <= max_copies` satisfies the criterion.
    LimitReached { max_copies: usize },
}

/// Permutation sending `i -> N-2` and `j -> N-1`, others keeping their order.
pub fn pair_to_end_permutation(n: usize, i: usize, j: usize) -> Result<Vec<usize>> {
    separating_indices(n, i, j)?;
    let mut perm = vec![0; n];
    let mut next = 0;
    for (p, slot) in perm.iter_mut().enumerate() {
        if p == i {
            *slot = n - 2;
        } else if p == j {
            *slot = n - 1;
        } else {
            *slot = next;
            next += 1;
        }
    }
    Ok(perm)
}

/// Smallest `M >= 1` with `(|Δ|/2)^M > Σ λ_k^M` over the splits separating
/// `A_i` and `A_j`.
pub fn min_copies_to_distill(
    p: &RhoNParams,
    i: usize,
    j: usize,
    tol: f64,
    max_copies: usize,
) -> Result<CopiesOutcome> {
    let n = p.n();
    if !pair_distillable(p, i, j, tol)? {
        let h = p.delta().abs() / 2.0;
        let violated = separating_indices(n, i, j)?
            .into_iter()
            .filter(|&k| p.lambda(k) >= h - tol / 2.0)
            .map(|k| lambda_index_to_split(n, k))
            .collect::<Result<Vec<_>>>()?;
        return Ok(CopiesOutcome::NotDistillable { violated });
    }
    let moved = crate::ghz::permute_params(p, &pair_to_end_permutation(n, i, j)?)?;
    let ln_h = (moved.delta().abs() / 2.0).ln();
    let odd: Vec<f64> = moved
        .lambdas()
        .iter()
        .enumerate()
        .filter(|(idx, &l)| (idx + 1) % 2 == 1 && l > 0.0)
        .map(|(_, &l)| l.ln())
        .collect();
    for m in 1..=max_copies {
        let mf = m as f64;
        let terms: Vec<(f64, f64)> = odd.iter().map(|&x| (1.0, mf * x)).collect();
        if mf * ln_h > log_sum_exp(&terms) {
            return Ok(CopiesOutcome::Copies(m));
        }
    }
    Ok(CopiesOutcome::LimitReached { max_copies })
}

/// Projects every party other than `A_i`, `A_j` onto `|+>` and returns the
/// overlap of the normalized remainder with `(|00> ± |11>)/√2`, the sign
/// following that of `Δ`.
pub fn pair_fidelity_after_projection(p: &RhoNParams, i: usize, j: usize) -> Result<f64> {
    let n = p.n();
    separating_indices(n, i, j)?;
    let mut rho = rho_from_params(p)?;
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    for party in (0..n).rev().filter(|&q| q != i && q != j) {
        rho = project_local(&rho, party, [h, h])?;
    }
    let rho = rho.normalize()?;
    let last = if p.delta() < 0.0 { -h } else { h };
    let phi = [h, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), last];
    crate::qstate::overlap(&rho, &phi)
}

/// `1/2 + |Δ|/2 - Σ λ_k` over the splits separating `A_i` and `A_j`.
pub fn pair_fidelity_closed_form(p: &RhoNParams, i: usize, j: usize) -> Result<f64> {
    let sep: f64 = separating_indices(p.n(), i, j)?
        .into_iter()
        .map(|k: SplitIndex| p.lambda(k))
        .sum();
    Ok(0.5 + 0.5 * p.delta().abs() - sep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghz::{ghz_diagonal_operator, normalize_delta};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, l0p: f64, l0m: f64, lambdas: Vec<f64>) -> RhoNParams {
        RhoNParams::from_unnormalized_weights(n, l0p, l0m, lambdas).unwrap()
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> RhoNParams {
        let count = crate::splits::lambda_count(n).unwrap();
        params(n, rng.gen(), rng.gen(), (0..count).map(|_| rng.gen()).collect())
    }

    #[test]
    fn recurrence_example() {
        // Δ/2 = 0.3, λ_1 = 0.2
        let p = RhoNParams::new(2, 0.6, 0.0, vec![0.2]).unwrap();
        let step = purification_step(&p, 2).unwrap();
        let raw = step.raw_weights();
        assert!((raw.delta() / 2.0 - 0.09).abs() < 1e-15);
        assert!((raw.lambdas[0] - 0.04).abs() < 1e-15);
        assert!(purification_step(&p, 1).is_err());
    }

    #[test]
    fn pure_ghz_success_probability() {
        for n in 2..=4 {
            let p = RhoNParams::pure_ghz(n).unwrap();
            for m in 2..=4 {
                let step = purification_step(&p, m).unwrap();
                assert!((step.success_probability - 2f64.powi(1 - m as i32)).abs() < 1e-15);
                assert!((step.output.lambda0_plus() - 1.0).abs() < 1e-15);
            }
        }
        let oracle = multicopy_oracle(&RhoNParams::pure_ghz(3).unwrap(), 3).unwrap();
        assert!((oracle.trace() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for (n, m) in [(2, 2), (2, 3), (3, 2), (3, 3), (4, 2)] {
            for _ in 0..3 {
                let p = random(n, &mut rng);
                let step = purification_step(&p, m).unwrap();
                let closed = ghz_diagonal_operator(&step.raw_weights()).unwrap();
                let oracle = multicopy_oracle(&p, m).unwrap();
                assert!(closed.max_abs_diff(&oracle) < 1e-12, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn maximally_mixed_oracle_squares() {
        let p = RhoNParams::fully_mixed(3).unwrap();
        let oracle = multicopy_oracle(&p, 2).unwrap();
        let w = crate::ghz::extract_weights(&oracle).unwrap();
        for l in w.lambdas {
            assert!((l - 1.0 / 64.0).abs() < 1e-15);
        }
        assert!(crate::depolarize::ghz_offdiagonal_residual(&oracle).unwrap() < 1e-15);
    }

    #[test]
    fn log_domain_survives_many_copies() {
        let p = params(3, 0.5, 0.1, vec![0.1, 0.15, 0.05]);
        let step = purification_step(&p, 5000).unwrap();
        assert!(step.success_probability == 0.0 || step.log_success_probability < -700.0);
        assert!(step.log_success_probability.is_finite());
        assert!((step.output.lambda0_plus() - 0.5 - step.output.delta() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn min_copies_example() {
        // Δ/2 = 0.4 and odd-index λ = {0.3, 0.15} at N = 3 (λ_1, λ_3).
        // The criterion is homogeneous, so rescaling to unit trace is harmless.
        let p = params(3, 0.8, 0.0, vec![0.3, 0.0, 0.15]);
        assert_eq!(
            min_copies_to_distill(&p, 1, 2, 1e-9, 100).unwrap(),
            CopiesOutcome::Copies(2)
        );
    }

    #[test]
    fn min_copies_edge_cases() {
        let ghz = RhoNParams::pure_ghz(3).unwrap();
        assert_eq!(
            min_copies_to_distill(&ghz, 0, 2, 1e-9, 10).unwrap(),
            CopiesOutcome::Copies(1)
        );
        let mixed = RhoNParams::fully_mixed(3).unwrap();
        match min_copies_to_distill(&mixed, 0, 1, 1e-9, 10).unwrap() {
            CopiesOutcome::NotDistillable { violated } => assert_eq!(violated.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fidelity_examples() {
        for n in 3..=5 {
            let f = pair_fidelity_after_projection(&RhoNParams::pure_ghz(n).unwrap(), 0, n - 1)
                .unwrap();
            assert!((f - 1.0).abs() < 1e-12);
            let f = pair_fidelity_after_projection(&RhoNParams::fully_mixed(n).unwrap(), 1, 2)
                .unwrap();
            assert!((f - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_closed_form_matches_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for n in 2..=5 {
            for _ in 0..5 {
                let p = random(n, &mut rng);
                for i in 0..n {
                    for j in i + 1..n {
                        let a = pair_fidelity_after_projection(&p, i, j).unwrap();
                        let b = pair_fidelity_closed_form(&p, i, j).unwrap();
                        assert!((a - b).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn fidelity_half_at_boundary() {
        // N = 3, pair (B, C): Δ/2 = λ_1 + λ_3.
        let p = params(3, 0.5, 0.1, vec![0.12, 0.2, 0.08]);
        let f = pair_fidelity_after_projection(&p, 1, 2).unwrap();
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_invariant_under_delta_sign() {
        let p = params(3, 0.5, 0.1, vec![0.05, 0.1, 0.05]);
        let q = params(3, 0.1, 0.5, vec![0.05, 0.1, 0.05]);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let a = pair_fidelity_after_projection(&p, i, j).unwrap();
            let b = pair_fidelity_after_projection(&q, i, j).unwrap();
            assert!((a - b).abs() < 1e-12);
            assert!((b - pair_fidelity_closed_form(&q, i, j).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn odd_indices_are_the_separating_ones() {
        for n in 2..=6 {
            let sep = separating_indices(n, n - 2, n - 1).unwrap();
            assert!(sep.iter().all(|k| k.0 % 2 == 1));
            assert_eq!(sep.len(), 1 << (n - 2));
        }
    }

    #[test]
    fn amplification_is_monotone() {
        let p = normalize_delta(&params(3, 0.6, 0.05, vec![0.1, 0.2, 0.12]));
        let h = p.delta() / 2.0;
        let mut last = [f64::INFINITY; 3];
        for m in 2..8 {
            let out = purification_step(&p, m).unwrap().output;
            for (k, &l) in p.lambdas().iter().enumerate() {
                if l < h {
                    let ratio = out.lambdas()[k] / out.delta();
                    assert!(ratio < last[k]);
                    last[k] = ratio;
                }
            }
        }
    }
}
