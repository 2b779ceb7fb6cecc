//! Depolarization onto the `ρ_N` family: the exact channel and a sampled
//! simulation of the local mixing protocol.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ghz::{extract_weights, ghz_components, ghz_diagonal_operator};
use crate::qstate::{party_bit, CMatrix, DensityMatrix};
use crate::splits::lambda_count;

/// Samples per independently seeded batch in [`locc_depolarize_sample`].
pub const DEFAULT_BATCH: usize = 1024;

/// One mixing round of the local protocol.
#[derive(Clone, Debug, PartialEq)]
pub enum MixingRound {
    /// `σ_x` on every party.
    SpinFlipAll,
    /// `σ_z` on party `k` (0-based, `k < N - 1`) and on the last party.
    SigmaZPair(usize),
    /// `|0>_α -> e^{iφ_α}|0>_α` with `Σ φ_α = 2π`.
    PhaseTwirl(Vec<f64>),
}

impl MixingRound {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            MixingRound::SpinFlipAll => Ok(()),
            MixingRound::SigmaZPair(k) if *k + 1 < n => Ok(()),
            MixingRound::SigmaZPair(k) => Err(Error::PartyOutOfRange { party: *k, n: n - 1 }),
            MixingRound::PhaseTwirl(phases) => {
                if phases.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: phases.len(),
                    });
                }
                let sum: f64 = phases.iter().sum();
                if (sum - TAU).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "twirl phases sum to {sum}, expected 2π"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Computes `U ρ U†` for the round's unitary.
pub fn apply_round_unitary(rho: &DensityMatrix, round: &MixingRound) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    round.validate(n)?;
    let dim = rho.dim();
    let src = rho.entries();
    let out = match round {
        MixingRound::SpinFlipAll => {
            let full = dim - 1;
            CMatrix::from_fn(dim, dim, |r, c| src[(r ^ full, c ^ full)])
        }
        MixingRound::SigmaZPair(k) => {
            let mask = party_bit(n, *k) | 1;
            let sign = |x: usize| (x & mask).count_ones() & 1;
            CMatrix::from_fn(dim, dim, |r, c| {
                if sign(r) == sign(c) {
                    src[(r, c)]
                } else {
                    -src[(r, c)]
                }
            })
        }
        MixingRound::PhaseTwirl(phases) => {
            let z = phase_vector(n, phases);
            CMatrix::from_fn(dim, dim, |r, c| z[r] * src[(r, c)] * z[c].conj())
        }
    };
    Ok(DensityMatrix::from_parts(n, out, rho.is_normalized()))
}

/// `½ρ + ½UρU†`.
pub fn mixing_round(rho: &DensityMatrix, round: &MixingRound) -> Result<DensityMatrix> {
    let moved = apply_round_unitary(rho, round)?;
    let half = Complex64::new(0.5, 0.0);
    let out = (rho.entries() + moved.entries()) * half;
    Ok(DensityMatrix::from_parts(rho.n_qubits(), out, rho.is_normalized()))
}

/// The `N` coin-flip rounds: spin flip on all parties, then `σ_zσ_z` on each
/// `(A_k, A_N)`.
pub fn coin_flip_rounds(n: usize) -> Vec<MixingRound> {
    std::iter::once(MixingRound::SpinFlipAll)
        .chain((0..n.saturating_sub(1)).map(MixingRound::SigmaZPair))
        .collect()
}

pub fn apply_coin_flips(rho: &DensityMatrix) -> Result<DensityMatrix> {
    coin_flip_rounds(rho.n_qubits())
        .iter()
        .try_fold(rho.clone(), |acc, round| mixing_round(&acc, round))
}

/// Exact depolarization: keeps `λ_0^±` and each pair mean, drops everything
/// else.
pub fn depolarize_channel(rho: &DensityMatrix) -> Result<DensityMatrix> {
    ghz_diagonal_operator(&extract_weights(rho)?)
}

/// Phase picked up by each computational index: `θ_x = Σ_{α: x_α = 0} φ_α`.
fn phase_vector(n: usize, phases: &[f64]) -> Vec<Complex64> {
    (0..1usize << n)
        .map(|x| {
            let theta: f64 = (0..n)
                .filter(|&p| x & party_bit(n, p) == 0)
                .map(|p| phases[p])
                .sum();
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

/// `N - 1` uniform phases on `[0, 2π)`, the last one fixed by `Σ φ = 2π`.
pub fn sample_phase_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut phases: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.0..TAU)).collect();
    let head: f64 = phases.iter().sum();
    phases.push(TAU - head);
    phases
}

/// Compensated (Neumaier) accumulator for complex values.
#[derive(Clone, Copy, Default)]
struct Neumaier {
    sum: Complex64,
    comp: Complex64,
}

impl Neumaier {
    fn add(&mut self, x: Complex64) {
        self.sum.re = step(&mut self.comp.re, self.sum.re, x.re);
        self.sum.im = step(&mut self.comp.im, self.sum.im, x.im);
    }

    fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn step(comp: &mut f64, sum: f64, x: f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}

fn sample_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    rng
}

fn accumulate_batch(n: usize, seed: u64, range: std::ops::Range<usize>) -> Vec<Neumaier> {
    let dim = 1usize << n;
    let mut acc = vec![Neumaier::default(); dim * dim];
    for s in range {
        let phases = sample_phase_vector(n, &mut sample_rng(seed, s));
        let z = phase_vector(n, &phases);
        for c in 0..dim {
            let zc = z[c].conj();
            for r in 0..dim {
                acc[c * dim + r].add(z[r] * zc);
            }
        }
    }
    acc
}

/// Sample mean of `z z†` over random twirl phase vectors.
///
/// Sample `s` draws from its own ChaCha stream, so the result does not depend
/// on `batch` beyond summation order.
pub fn phase_twirl_average(n: usize, seed: u64, n_samples: usize, batch: usize) -> Result<CMatrix> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    if batch == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    crate::qstate::check_qubit_cap(n)?;
    let dim = 1usize << n;
    let starts: Vec<usize> = (0..n_samples).step_by(batch).collect();
    let partials: Vec<Vec<Neumaier>> = starts
        .par_iter()
        .map(|&s| accumulate_batch(n, seed, s..(s + batch).min(n_samples)))
        .collect();
    let mut total = vec![Neumaier::default(); dim * dim];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    let scale = 1.0 / n_samples as f64;
    Ok(CMatrix::from_fn(dim, dim, |r, c| total[c * dim + r].value() * scale))
}

/// Coin-flip rounds averaged exactly, followed by `n_samples` random phase
/// twirls.
pub fn locc_depolarize_sample(rho: &DensityMatrix, seed: u64, n_samples: usize) -> Result<DensityMatrix> {
    locc_depolarize_sample_batched(rho, seed, n_samples, DEFAULT_BATCH)
}

pub fn locc_depolarize_sample_batched(
    rho: &DensityMatrix,
    seed: u64,
    n_samples: usize,
    batch: usize,
) -> Result<DensityMatrix> {
    let flipped = apply_coin_flips(rho)?;
    let avg = phase_twirl_average(rho.n_qubits(), seed, n_samples, batch)?;
    let out = flipped.entries().component_mul(&avg);
    Ok(DensityMatrix::from_parts(rho.n_qubits(), out, rho.is_normalized()))
}

/// Largest magnitude of an off-diagonal element in the GHZ basis.
pub fn ghz_offdiagonal_residual(rho: &DensityMatrix) -> Result<f64> {
    let n = rho.n_qubits();
    let pairs = lambda_count(n)? + 1;
    let comps: Vec<(usize, usize)> = (0..pairs).map(|j| ghz_components(n, j)).collect();
    let m = rho.entries();
    let element = |(a, b): (usize, usize), s: f64, (c, d): (usize, usize), t: f64| {
        0.5 * (m[(a, c)] + m[(a, d)] * t + m[(b, c)] * s + m[(b, d)] * (s * t))
    };
    let mut worst: f64 = 0.0;
    for (i, &pi) in comps.iter().enumerate() {
        for (j, &pj) in comps.iter().enumerate() {
            for s in [1.0, -1.0] {
                for t in [1.0, -1.0] {
                    if i == j && s == t {
                        continue;
                    }
                    worst = worst.max(element(pi, s, pj, t).norm());
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghz::{ghz_basis_state, ghz_overlaps, rho_from_params, GhzIndex, RhoNParams, Sign};
    use crate::qstate::{apply_local_operator, pauli_z, random_density_matrix, tensor_product};

    fn outer(a: &[Complex64], b: &[Complex64]) -> CMatrix {
        CMatrix::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
    }

    #[test]
    fn spin_flip_kills_cross_term() {
        for n in 2..=4 {
            let p = ghz_basis_state(n, GhzIndex::new(0, Sign::Plus)).unwrap();
            let m = ghz_basis_state(n, GhzIndex::new(0, Sign::Minus)).unwrap();
            let rho = DensityMatrix::from_parts(n, outer(&p, &m), false);
            let out = mixing_round(&rho, &MixingRound::SpinFlipAll).unwrap();
            assert!(out.max_abs_entry() < 1e-15);
        }
    }

    #[test]
    fn sigma_z_pair_sign() {
        // N=4, j = 0b101 has j_1 = 1 and j_2 = 0.
        let n = 4;
        let v = ghz_basis_state(n, GhzIndex::new(0b101, Sign::Minus)).unwrap();
        let rho = DensityMatrix::pure(&v).unwrap();
        for (k, flips) in [(0, true), (1, false), (2, true)] {
            let vm = DensityMatrix::from_parts(n, outer(&v, &v), true);
            let moved = apply_round_unitary(&vm, &MixingRound::SigmaZPair(k)).unwrap();
            assert!(moved.max_abs_diff(&rho) < 1e-15);
            let u = (0..n).fold(CMatrix::identity(1, 1), |acc, q| {
                let f = if q == k || q == n - 1 { pauli_z() } else { CMatrix::identity(2, 2) };
                acc.kronecker(&f)
            });
            let w = &u * nalgebra::DVector::from_vec(v.clone());
            let ip: Complex64 = v.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
            let want = if flips { -1.0 } else { 1.0 };
            assert!((ip.re - want).abs() < 1e-14);
        }
    }

    #[test]
    fn rounds_fix_maximally_mixed() {
        let n = 3;
        let mm = DensityMatrix::maximally_mixed(n).unwrap();
        let mut rounds = coin_flip_rounds(n);
        rounds.push(MixingRound::PhaseTwirl(vec![1.0, 2.0, TAU - 3.0]));
        for r in rounds {
            assert!(mixing_round(&mm, &r).unwrap().max_abs_diff(&mm) < 1e-15);
        }
        assert!(mixing_round(&mm, &MixingRound::SigmaZPair(2)).is_err());
        assert!(mixing_round(&mm, &MixingRound::PhaseTwirl(vec![1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn coin_flips_make_ghz_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in 2..=4 {
            let rho = random_density_matrix(n, &mut rng).unwrap();
            let out = apply_coin_flips(&rho).unwrap();
            assert!(ghz_offdiagonal_residual(&out).unwrap() < 1e-12);
            assert!(ghz_offdiagonal_residual(&rho).unwrap() > 1e-3);
        }
    }

    #[test]
    fn channel_fixes_family_members() {
        let ghz = rho_from_params(&RhoNParams::pure_ghz(3).unwrap()).unwrap();
        assert!(depolarize_channel(&ghz).unwrap().max_abs_diff(&ghz) < 1e-13);
        let p = RhoNParams::from_unnormalized_weights(3, 0.4, 0.1, vec![0.1, 0.2, 0.05]).unwrap();
        let rho = rho_from_params(&p).unwrap();
        assert!(depolarize_channel(&rho).unwrap().max_abs_diff(&rho) < 1e-13);
    }

    #[test]
    fn channel_preserves_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for n in 2..=4 {
            let rho = random_density_matrix(n, &mut rng).unwrap();
            let out = depolarize_channel(&rho).unwrap();
            let (p0, m0) = ghz_overlaps(&rho).unwrap();
            let (p1, m1) = ghz_overlaps(&out).unwrap();
            assert!((p0[0] - p1[0]).abs() < 1e-12 && (m0[0] - m1[0]).abs() < 1e-12);
            for j in 1..p0.len() {
                assert!((p0[j] + m0[j] - p1[j] - m1[j]).abs() < 1e-12);
                assert!((p1[j] - m1[j]).abs() < 1e-15);
            }
            assert!((out.trace() - 1.0).abs() < 1e-12);
            assert!(out.check_psd(1e-12).is_ok());
            let twice = depolarize_channel(&out).unwrap();
            assert!(twice.max_abs_diff(&out) < 1e-13);

            let z = pauli_z();
            let flipped = apply_local_operator(&rho, &[n - 1], &z).unwrap();
            let lhs = depolarize_channel(&flipped).unwrap();
            let rhs = apply_local_operator(&out, &[n - 1], &z).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-13);
        }
    }

    #[test]
    fn coin_flips_then_exact_twirl_equals_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let rho = random_density_matrix(3, &mut rng).unwrap();
        let flipped = apply_coin_flips(&rho).unwrap();
        assert!(depolarize_channel(&flipped)
            .unwrap()
            .max_abs_diff(&depolarize_channel(&rho).unwrap())
            < 1e-13);
    }

    #[test]
    fn product_input_stays_ppt() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let a = DensityMatrix::pure(&crate::qstate::random_pure_state(1, &mut rng)).unwrap();
        let b = DensityMatrix::pure(&crate::qstate::random_pure_state(2, &mut rng)).unwrap();
        let rho = tensor_product(&a, &b).unwrap();
        let out = depolarize_channel(&rho).unwrap();
        let w = extract_weights(&out).unwrap();
        let delta = w.delta().abs();
        assert!(w.lambdas.iter().all(|&l| delta <= 2.0 * l + 1e-12));
    }

    #[test]
    fn sampled_protocol_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let rho = random_density_matrix(3, &mut rng).unwrap();
        let exact = depolarize_channel(&rho).unwrap();
        let d100 = locc_depolarize_sample(&rho, 7, 100).unwrap().frobenius_distance(&exact);
        let d10k = locc_depolarize_sample(&rho, 7, 10_000).unwrap().frobenius_distance(&exact);
        assert!(d10k < 0.02, "distance {d10k}");
        assert!(d10k < d100);
    }

    #[test]
    fn sampled_protocol_independent_of_batching() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let rho = random_density_matrix(3, &mut rng).unwrap();
        let a = locc_depolarize_sample_batched(&rho, 11, 3000, 1).unwrap();
        let b = locc_depolarize_sample_batched(&rho, 11, 3000, 97).unwrap();
        let c = locc_depolarize_sample_batched(&rho, 11, 3000, 5000).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
        assert!(a.max_abs_diff(&c) < 1e-12);
    }

    #[test]
    fn sampled_protocol_exact_on_family() {
        let p = RhoNParams::from_unnormalized_weights(3, 0.5, 0.2, vec![0.1, 0.3, 0.05]).unwrap();
        let rho = rho_from_params(&p).unwrap();
        let out = locc_depolarize_sample(&rho, 1, 3).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-13);
    }

    #[test]
    fn degenerate_twirl_keeps_imbalance() {
        let v = ghz_basis_state(3, GhzIndex::new(1, Sign::Plus)).unwrap();
        let rho = DensityMatrix::pure(&v).unwrap();
        let twirled = apply_round_unitary(&rho, &MixingRound::PhaseTwirl(vec![TAU, 0.0, 0.0])).unwrap();
        assert!(twirled.max_abs_diff(&rho) < 1e-13);
        assert!(twirled.max_abs_diff(&depolarize_channel(&rho).unwrap()) > 0.1);
    }
}
