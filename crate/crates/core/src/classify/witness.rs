//! Explicit separable states that depolarize onto a given `ρ_N`.

use num_complex::Complex64;

use crate::depolarize::depolarize_channel;
use crate::error::{Error, Result};
use crate::ghz::{ghz_components, rho_from_params, RhoNParams};
use crate::qstate::{check_qubit_cap, party_bit, CMatrix, DensityMatrix};
use crate::splits::{bipartite_coarsenings, lambda_count, Split};

use super::is_k_separable;

/// Bound on `|depolarize(witness) - ρ_N|` accepted by [`witness_decomposition`].
pub const WITNESS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessKind {
    /// Two blocks.
    Bipartite,
    /// Every party in its own block.
    FullySeparable,
    /// Any other number of blocks.
    KPartite,
}

/// One weighted product `⊗_b |f_b>` across the blocks of a split.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTerm {
    pub weight: f64,
    /// One normalized vector per block, in the split's block order. Each is
    /// indexed by the block's parties in ascending order, lowest party most
    /// significant.
    pub factors: Vec<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductEnsemble {
    pub split: Split,
    pub terms: Vec<ProductTerm>,
}

impl ProductEnsemble {
    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// Checks nonnegative weights and one normalized factor per block of the
    /// right dimension.
    pub fn verify(&self, tol: f64) -> Result<()> {
        let sizes: Vec<usize> = self.split.block_parties().iter().map(Vec::len).collect();
        for (t, term) in self.terms.iter().enumerate() {
            if term.weight.is_nan() || term.weight < 0.0 {
                return Err(Error::Invariant(format!(
                    "term {t} has weight {}",
                    term.weight
                )));
            }
            if term.factors.len() != sizes.len() {
                return Err(Error::DimensionMismatch {
                    expected: sizes.len(),
                    found: term.factors.len(),
                });
            }
            for (f, &m) in term.factors.iter().zip(&sizes) {
                if f.len() != 1 << m {
                    return Err(Error::DimensionMismatch {
                        expected: 1 << m,
                        found: f.len(),
                    });
                }
                let norm: f64 = f.iter().map(|z| z.norm_sqr()).sum();
                if (norm - 1.0).abs() > tol {
                    return Err(Error::Invariant(format!(
                        "term {t} has a factor of squared norm {norm}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `Σ_t w_t |v_t><v_t|`, not renormalized.
    pub fn assemble(&self) -> Result<DensityMatrix> {
        let n = self.split.n();
        check_qubit_cap(n)?;
        let dim = 1usize << n;
        let blocks = self.split.block_parties();
        let mut m = CMatrix::zeros(dim, dim);
        for term in &self.terms {
            let support = product_support(n, &blocks, &term.factors);
            for &(r, a) in &support {
                for &(c, b) in &support {
                    m[(r, c)] += a * b.conj() * term.weight;
                }
            }
        }
        let tr = self.total_weight();
        Ok(DensityMatrix::from_parts(
            n,
            m,
            (tr - 1.0).abs() <= crate::qstate::TRACE_TOL,
        ))
    }
}

/// Nonzero amplitudes of the full-register product vector.
fn product_support(
    n: usize,
    blocks: &[Vec<usize>],
    factors: &[Vec<Complex64>],
) -> Vec<(usize, Complex64)> {
    let mut support = vec![(0usize, Complex64::new(1.0, 0.0))];
    for (parties, f) in blocks.iter().zip(factors) {
        let m = parties.len();
        let local: Vec<(usize, Complex64)> = f
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm_sqr() > 0.0)
            .map(|(idx, &z)| {
                let global = parties
                    .iter()
                    .enumerate()
                    .filter(|(t, _)| idx >> (m - 1 - t) & 1 == 1)
                    .fold(0, |acc, (_, &p)| acc | party_bit(n, p));
                (global, z)
            })
            .collect();
        support = support
            .iter()
            .flat_map(|&(g, a)| local.iter().map(move |&(h, b)| (g | h, a * b)))
            .collect();
    }
    support
}

/// Factors of the computational state `|x>` restricted to each block.
fn computational_factors(n: usize, blocks: &[Vec<usize>], x: usize) -> Vec<Vec<Complex64>> {
    blocks
        .iter()
        .map(|parties| {
            let m = parties.len();
            let idx = parties
                .iter()
                .enumerate()
                .filter(|(_, &p)| x & party_bit(n, p) != 0)
                .fold(0, |acc, (t, _)| acc | 1 << (m - 1 - t));
            let mut v = vec![Complex64::new(0.0, 0.0); 1 << m];
            v[idx] = Complex64::new(1.0, 0.0);
            v
        })
        .collect()
}

/// `(|0..0> + s|1..1>)/√2` on `m` qubits.
fn block_ghz(m: usize, s: f64) -> Vec<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << m];
    v[0] = Complex64::new(h, 0.0);
    v[(1 << m) - 1] = Complex64::new(s * h, 0.0);
    v
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub kind: WitnessKind,
    pub ensemble: ProductEnsemble,
    /// The assembled separable state, unit trace.
    pub state: DensityMatrix,
    /// `max |depolarize(state) - ρ_N|`.
    pub channel_residual: f64,
}

/// Builds a state that is explicitly separable across `split` and
/// depolarizes exactly onto `p`.
///
/// The ensemble holds, with weight `|Δ|`, every product of block GHZ states
/// `(|0..0> ± |1..1>)/√2` whose sign count has the parity of `Δ`, plus
/// computational pairs `|j0>, |j̄1>` weighted by `λ_j - |Δ|/2` for splits
/// coarsening `split`, by `λ_j` otherwise, and by `min(λ_0^±)` for `j = 0`.
pub fn witness_decomposition(p: &RhoNParams, split: &Split, tol: f64) -> Result<Witness> {
    if !is_k_separable(p, split, tol)? {
        return Err(Error::NotSeparable(split.to_string()));
    }
    let n = p.n();
    let blocks = split.block_parties();
    let k = blocks.len();
    let delta = p.delta();
    let d = delta.abs();
    let minus_parity = if delta >= 0.0 { 0 } else { 1 };

    let mut terms = Vec::new();
    if d > 0.0 {
        for signs in 0usize..1 << k {
            if signs.count_ones() % 2 != minus_parity {
                continue;
            }
            let factors = blocks
                .iter()
                .enumerate()
                .map(|(b, parties)| {
                    let s = if signs >> b & 1 == 1 { -1.0 } else { 1.0 };
                    block_ghz(parties.len(), s)
                })
                .collect();
            terms.push(ProductTerm { weight: d, factors });
        }
    }

    let coarse = bipartite_coarsenings(split);
    let mut pair_weights = Vec::with_capacity(lambda_count(n)? + 1);
    pair_weights.push(p.lambda0_plus().min(p.lambda0_minus()));
    for (i, &lam) in p.lambdas().iter().enumerate() {
        let idx = crate::splits::SplitIndex(i + 1);
        let w = if coarse.binary_search(&idx).is_ok() {
            lam - d / 2.0
        } else {
            lam
        };
        pair_weights.push(w.max(0.0));
    }
    for (j, &w) in pair_weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let (a, b) = ghz_components(n, j);
        for x in [a, b] {
            terms.push(ProductTerm {
                weight: w,
                factors: computational_factors(n, &blocks, x),
            });
        }
    }

    let ensemble = ProductEnsemble {
        split: split.clone(),
        terms,
    };
    ensemble.verify(1e-12)?;
    let raw = ensemble.assemble()?;
    let state = raw.normalize()?;
    let target = rho_from_params(p)?;
    let channel_residual = depolarize_channel(&state)?.max_abs_diff(&target);
    if channel_residual > WITNESS_TOL.max(tol) {
        return Err(Error::Invariant(format!(
            "witness depolarizes to within {channel_residual:e} of the target"
        )));
    }
    let kind = if k == n {
        WitnessKind::FullySeparable
    } else if k == 2 {
        WitnessKind::Bipartite
    } else {
        WitnessKind::KPartite
    };
    Ok(Witness {
        kind,
        ensemble,
        state,
        channel_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{is_ppt, partial_trace, QubitSubset};
    use crate::splits::{enumerate_k_splits, lambda_index_to_split, SplitIndex};

    fn params(n: usize, l0p: f64, l0m: f64, lambdas: Vec<f64>) -> RhoNParams {
        RhoNParams::from_unnormalized_weights(n, l0p, l0m, lambdas).unwrap()
    }

    #[test]
    fn finest_split_uses_even_minus_products() {
        let p = params(3, 0.3, 0.05, vec![0.2, 0.15, 0.25]);
        let w = witness_decomposition(&p, &Split::finest(3).unwrap(), 1e-9).unwrap();
        assert_eq!(w.kind, WitnessKind::FullySeparable);
        let delta = p.delta();
        let line_one: Vec<&ProductTerm> = w
            .ensemble
            .terms
            .iter()
            .filter(|t| t.factors.iter().all(|f| f.iter().all(|z| z.norm() > 0.0)))
            .collect();
        assert_eq!(line_one.len(), 4);
        for t in line_one {
            assert_eq!(t.weight, delta);
            let minus = t.factors.iter().filter(|f| f[1].re < 0.0).count();
            assert_eq!(minus % 2, 0);
        }
        assert!(w.channel_residual < 1e-12);
    }

    #[test]
    fn zero_delta_has_no_ghz_terms() {
        let p = params(3, 0.2, 0.2, vec![0.1, 0.2, 0.1]);
        let s = lambda_index_to_split(3, SplitIndex(2)).unwrap();
        let w = witness_decomposition(&p, &s, 1e-9).unwrap();
        assert_eq!(w.kind, WitnessKind::Bipartite);
        for t in &w.ensemble.terms {
            for f in &t.factors {
                assert_eq!(f.iter().filter(|z| z.norm() > 0.0).count(), 1);
            }
        }
    }

    #[test]
    fn boundary_split_matches_target() {
        // Δ = 2λ_2 exactly for A-(BC).
        let p = params(3, 0.5, 0.1, vec![0.1, 0.2, 0.05]);
        assert!((p.delta() - 2.0 * p.lambdas()[1]).abs() < 1e-15);
        let s = lambda_index_to_split(3, SplitIndex(2)).unwrap();
        let w = witness_decomposition(&p, &s, 1e-9).unwrap();
        assert!(w.channel_residual < 1e-12);
        let ghz_terms = w
            .ensemble
            .terms
            .iter()
            .filter(|t| t.factors[1].iter().filter(|z| z.norm() > 0.0).count() == 2)
            .count();
        assert_eq!(ghz_terms, 2);
        // Separable across A-(BC), so the witness is PPT there.
        let side = QubitSubset::new(3, &[0]).unwrap();
        assert!(is_ppt(&w.state, &side, 1e-12).unwrap().ppt);
    }

    #[test]
    fn rejects_inseparable_split() {
        let p = RhoNParams::pure_ghz(3).unwrap();
        assert!(matches!(
            witness_decomposition(&p, &Split::finest(3).unwrap(), 1e-9),
            Err(Error::NotSeparable(_))
        ));
    }

    #[test]
    fn negative_delta_uses_odd_products() {
        let p = params(3, 0.05, 0.3, vec![0.2, 0.15, 0.25]);
        let w = witness_decomposition(&p, &Split::finest(3).unwrap(), 1e-9).unwrap();
        assert!(w.channel_residual < 1e-12);
    }

    #[test]
    fn factors_reproduce_the_assembled_state() {
        let p = params(4, 0.3, 0.1, vec![0.15; 7]);
        for s in enumerate_k_splits(4, 3).unwrap() {
            let w = witness_decomposition(&p, &s, 1e-9).unwrap();
            assert_eq!(w.kind, WitnessKind::KPartite);
            for t in &w.ensemble.terms {
                let single = ProductEnsemble {
                    split: s.clone(),
                    terms: vec![ProductTerm {
                        weight: 1.0,
                        factors: t.factors.clone(),
                    }],
                };
                let rho = single.assemble().unwrap();
                assert!((rho.purity() - 1.0).abs() < 1e-12);
                for block in s.blocks() {
                    let rest = block.complement();
                    if rest.is_empty() {
                        continue;
                    }
                    let reduced = partial_trace(&rho, &rest).unwrap();
                    assert!((reduced.purity() - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
