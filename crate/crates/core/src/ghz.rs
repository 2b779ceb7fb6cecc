//! GHZ basis, the GHZ-diagonal family with paired weights, and parameter
//! extraction from arbitrary states.
//!
//! The basis element `Ψ_j^±` is `(|j>|0> ± |2^(N-1) - j - 1>|1>)/√2`, with
//! `j` an `(N-1)`-bit string over `A_1..A_{N-1}` (most significant first) and
//! `A_N` the least significant qubit. Its two computational components are
//! `2j` and the bitwise complement `2^N - 1 - 2j`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{check_qubit_cap, CMatrix, DensityMatrix, TRACE_TOL};
use crate::splits::{lambda_count, lambda_index_to_split, split_to_lambda_index, SplitIndex};

/// Tolerance on nonnegativity and normalization of parameter vectors.
pub const PARAM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GhzIndex {
    pub j: usize,
    pub sign: Sign,
}

impl GhzIndex {
    pub fn new(j: usize, sign: Sign) -> Self {
        GhzIndex { j, sign }
    }
}

/// Computational indices `(|j>|0>, |j̄>|1>)` of the pair `Ψ_j^±`.
#[inline]
pub fn ghz_components(n: usize, j: usize) -> (usize, usize) {
    let low = j << 1;
    (low, ((1usize << n) - 1) ^ low)
}

fn check_ghz_index(n: usize, j: usize) -> Result<()> {
    let count = lambda_count(n)?;
    if j > count {
        return Err(Error::InvalidArgument(format!(
            "GHZ index {j} out of range 0..={count}"
        )));
    }
    Ok(())
}

pub fn ghz_basis_state(n: usize, idx: GhzIndex) -> Result<Vec<Complex64>> {
    check_ghz_index(n, idx.j)?;
    check_qubit_cap(n)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = ghz_components(n, idx.j);
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << n];
    v[a] = Complex64::new(s, 0.0);
    v[b] = Complex64::new(s * idx.sign.value(), 0.0);
    Ok(v)
}

/// GHZ-diagonal weights without any normalization requirement.
///
/// `lambdas[k - 1]` is the common weight of `Ψ_k^+` and `Ψ_k^-`.
#[derive(Clone, Debug, PartialEq)]
pub struct GhzWeights {
    pub n: usize,
    pub lambda0_plus: f64,
    pub lambda0_minus: f64,
    pub lambdas: Vec<f64>,
}

impl GhzWeights {
    pub fn trace(&self) -> f64 {
        self.lambda0_plus + self.lambda0_minus + 2.0 * self.lambdas.iter().sum::<f64>()
    }

    pub fn delta(&self) -> f64 {
        self.lambda0_plus - self.lambda0_minus
    }
}

/// A member of the `ρ_N` family: `2^(N-1)` real parameters.
///
/// Invariants: every weight is nonnegative and
/// `λ_0^+ + λ_0^- + 2 Σ_j λ_j = 1`, both within [`PARAM_TOL`] (or the
/// tolerance given to [`RhoNParams::with_tolerance`]). The labeling
/// convention `Δ >= 0` is applied by [`normalize_delta`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct RhoNParams {
    n: usize,
    lambda0_plus: f64,
    lambda0_minus: f64,
    lambdas: Vec<f64>,
}

#[derive(Deserialize)]
struct RawParams {
    n: usize,
    lambda0_plus: f64,
    lambda0_minus: f64,
    lambdas: Vec<f64>,
}

impl TryFrom<RawParams> for RhoNParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        RhoNParams::new(raw.n, raw.lambda0_plus, raw.lambda0_minus, raw.lambdas)
    }
}

impl RhoNParams {
    pub fn new(n: usize, lambda0_plus: f64, lambda0_minus: f64, lambdas: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(n, lambda0_plus, lambda0_minus, lambdas, PARAM_TOL)
    }

    pub fn with_tolerance(
        n: usize,
        lambda0_plus: f64,
        lambda0_minus: f64,
        lambdas: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        let w = GhzWeights {
            n,
            lambda0_plus,
            lambda0_minus,
            lambdas,
        };
        validate_shape(&w)?;
        let min = w
            .lambdas
            .iter()
            .copied()
            .chain([w.lambda0_plus, w.lambda0_minus])
            .fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::Invariant(format!("negative weight {min}")));
        }
        let tr = w.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::Invariant(format!(
                "weights sum to {tr} (λ_0^+ + λ_0^- + 2Σλ_j must be 1)"
            )));
        }
        Ok(Self::from_weights_unchecked(w))
    }

    /// Rescales nonnegative weights to unit trace.
    pub fn from_unnormalized_weights(
        n: usize,
        lambda0_plus: f64,
        lambda0_minus: f64,
        lambdas: Vec<f64>,
    ) -> Result<Self> {
        let w = GhzWeights {
            n,
            lambda0_plus,
            lambda0_minus,
            lambdas,
        };
        Self::normalized_from(&w)
    }

    pub fn normalized_from(w: &GhzWeights) -> Result<Self> {
        validate_shape(w)?;
        if w.lambdas
            .iter()
            .chain([&w.lambda0_plus, &w.lambda0_minus])
            .any(|&x| x.is_nan() || x < 0.0)
        {
            return Err(Error::Invariant("weights must be nonnegative".into()));
        }
        let tr = w.trace();
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::Invariant(format!("weights have trace {tr}")));
        }
        Ok(Self::from_weights_unchecked(GhzWeights {
            n: w.n,
            lambda0_plus: w.lambda0_plus / tr,
            lambda0_minus: w.lambda0_minus / tr,
            lambdas: w.lambdas.iter().map(|x| x / tr).collect(),
        }))
    }

    fn from_weights_unchecked(w: GhzWeights) -> Self {
        RhoNParams {
            n: w.n,
            lambda0_plus: w.lambda0_plus,
            lambda0_minus: w.lambda0_minus,
            lambdas: w.lambdas,
        }
    }

    /// `I / 2^N`.
    pub fn fully_mixed(n: usize) -> Result<Self> {
        let w = 1.0 / (1u64 << n) as f64;
        Self::new(n, w, w, vec![w; lambda_count(n)?])
    }

    /// `|Ψ_0^+><Ψ_0^+|`.
    pub fn pure_ghz(n: usize) -> Result<Self> {
        Self::new(n, 1.0, 0.0, vec![0.0; lambda_count(n)?])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda0_plus(&self) -> f64 {
        self.lambda0_plus
    }

    pub fn lambda0_minus(&self) -> f64 {
        self.lambda0_minus
    }

    /// `λ_1 .. λ_{2^(N-1)-1}`.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `λ_k` for `k >= 1`.
    pub fn lambda(&self, k: SplitIndex) -> f64 {
        self.lambdas[k.0 - 1]
    }

    /// `Δ = λ_0^+ - λ_0^-`.
    pub fn delta(&self) -> f64 {
        self.lambda0_plus - self.lambda0_minus
    }

    pub fn weights(&self) -> GhzWeights {
        GhzWeights {
            n: self.n,
            lambda0_plus: self.lambda0_plus,
            lambda0_minus: self.lambda0_minus,
            lambdas: self.lambdas.clone(),
        }
    }
}

fn validate_shape(w: &GhzWeights) -> Result<()> {
    let count = lambda_count(w.n)?;
    if w.lambdas.len() != count {
        return Err(Error::DimensionMismatch {
            expected: count,
            found: w.lambdas.len(),
        });
    }
    if w.lambdas
        .iter()
        .chain([&w.lambda0_plus, &w.lambda0_minus])
        .any(|x| !x.is_finite())
    {
        return Err(Error::Invariant("non-finite weight".into()));
    }
    Ok(())
}

/// Assembles the GHZ-diagonal operator for arbitrary (possibly unnormalized)
/// weights.
pub fn ghz_diagonal_operator(w: &GhzWeights) -> Result<DensityMatrix> {
    validate_shape(w)?;
    check_qubit_cap(w.n)?;
    let dim = 1usize << w.n;
    let mut m = CMatrix::zeros(dim, dim);
    let (a, b) = ghz_components(w.n, 0);
    let avg = 0.5 * (w.lambda0_plus + w.lambda0_minus);
    let coh = 0.5 * w.delta();
    m[(a, a)] = Complex64::new(avg, 0.0);
    m[(b, b)] = Complex64::new(avg, 0.0);
    m[(a, b)] = Complex64::new(coh, 0.0);
    m[(b, a)] = Complex64::new(coh, 0.0);
    for (i, &lam) in w.lambdas.iter().enumerate() {
        let (a, b) = ghz_components(w.n, i + 1);
        m[(a, a)] = Complex64::new(lam, 0.0);
        m[(b, b)] = Complex64::new(lam, 0.0);
    }
    let normalized = (w.trace() - 1.0).abs() <= TRACE_TOL;
    Ok(DensityMatrix::from_parts(w.n, m, normalized))
}

pub fn rho_from_params(p: &RhoNParams) -> Result<DensityMatrix> {
    ghz_diagonal_operator(&p.weights())
}

/// Diagonal elements `<Ψ_j^+|ρ|Ψ_j^+>` and `<Ψ_j^-|ρ|Ψ_j^->` for every `j`.
pub fn ghz_overlaps(rho: &DensityMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rho.n_qubits();
    let count = lambda_count(n)?;
    let mut plus = Vec::with_capacity(count + 1);
    let mut minus = Vec::with_capacity(count + 1);
    for j in 0..=count {
        let (a, b) = ghz_components(n, j);
        let diag = rho.get(a, a).re + rho.get(b, b).re;
        let cross = rho.get(a, b).re + rho.get(b, a).re;
        plus.push(0.5 * (diag + cross));
        minus.push(0.5 * (diag - cross));
    }
    Ok((plus, minus))
}

/// Surviving invariants of the depolarization: `λ_0^±` and the pair means
/// `λ_j = (<Ψ_j^+|ρ|Ψ_j^+> + <Ψ_j^-|ρ|Ψ_j^->)/2`. No sign convention applied.
pub fn extract_weights(rho: &DensityMatrix) -> Result<GhzWeights> {
    let (plus, minus) = ghz_overlaps(rho)?;
    Ok(GhzWeights {
        n: rho.n_qubits(),
        lambda0_plus: plus[0],
        lambda0_minus: minus[0],
        lambdas: plus[1..]
            .iter()
            .zip(&minus[1..])
            .map(|(p, m)| 0.5 * (p + m))
            .collect(),
    })
}

pub fn params_from_state(rho: &DensityMatrix) -> Result<RhoNParams> {
    params_from_state_with_tol(rho, PARAM_TOL)
}

/// Extracts parameters from a unit-trace state and applies [`normalize_delta`].
pub fn params_from_state_with_tol(rho: &DensityMatrix, tol: f64) -> Result<RhoNParams> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > tol.max(TRACE_TOL) {
        return Err(Error::Invariant(format!(
            "state has trace {tr}; normalize it first"
        )));
    }
    let w = extract_weights(rho)?;
    let p = RhoNParams::with_tolerance(w.n, w.lambda0_plus, w.lambda0_minus, w.lambdas, tol)?;
    Ok(normalize_delta(&p))
}

/// Swaps `λ_0^±` when `λ_0^- > λ_0^+`, which is the effect of `σ_z` on `A_N`.
pub fn normalize_delta(p: &RhoNParams) -> RhoNParams {
    if p.lambda0_minus > p.lambda0_plus {
        RhoNParams {
            lambda0_plus: p.lambda0_minus,
            lambda0_minus: p.lambda0_plus,
            ..p.clone()
        }
    } else {
        p.clone()
    }
}

/// Relabels parties (`A_p` becomes `A_{perm[p]}`) by mapping each bipartite
/// split through the permutation and re-encoding its index.
pub fn permute_params(p: &RhoNParams, perm: &[usize]) -> Result<RhoNParams> {
    crate::qstate::validate_permutation(p.n, perm)?;
    let count = lambda_count(p.n)?;
    let mut lambdas = vec![0.0; count];
    for k in 1..=count {
        let split = lambda_index_to_split(p.n, SplitIndex(k))?;
        let moved = split_to_lambda_index(&split.permuted(perm)?)?;
        lambdas[moved.0 - 1] = p.lambdas[k - 1];
    }
    Ok(RhoNParams {
        lambdas,
        ..p.clone()
    })
}
