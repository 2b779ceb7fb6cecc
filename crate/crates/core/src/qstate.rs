//! Dense N-qubit operator arithmetic.
//!
//! Computational-basis indices put party `A_1` in the most significant bit,
//! so party `p` (0-based) owns bit `n - 1 - p` of every row/column index.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const DEFAULT_MAX_QUBITS: usize = 14;
/// Environment variable overriding [`DEFAULT_MAX_QUBITS`].
pub const MAX_QUBITS_ENV: &str = "ENTCLASS_MAX_QUBITS";

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
/// Projections whose success probability falls below this are rejected.
pub const MIN_PROBABILITY: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest register the dense routines will build.
pub fn max_qubits() -> usize {
    std::env::var(MAX_QUBITS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0 && v < 31)
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

pub fn check_qubit_cap(n: usize) -> Result<()> {
    let max = max_qubits();
    if n > max {
        return Err(Error::SizeCap { requested: n, max });
    }
    Ok(())
}

/// Bit of the computational index owned by `party` in an `n`-qubit register.
#[inline]
pub fn party_bit(n: usize, party: usize) -> usize {
    1 << (n - 1 - party)
}

/// A set of parties, stored as an `n`-bit mask with `A_1` most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitSubset {
    n: usize,
    mask: usize,
}

impl QubitSubset {
    /// Builds a subset from 0-based party indices.
    pub fn new(n: usize, parties: &[usize]) -> Result<Self> {
        let mut mask = 0;
        for &p in parties {
            if p >= n {
                return Err(Error::PartyOutOfRange { party: p, n });
            }
            mask |= party_bit(n, p);
        }
        Ok(QubitSubset { n, mask })
    }

    pub fn from_mask(n: usize, mask: usize) -> Result<Self> {
        if n == 0 || n >= usize::BITS as usize || mask >> n != 0 {
            return Err(Error::InvalidArgument(format!(
                "mask {mask:#b} does not fit {n} parties"
            )));
        }
        Ok(QubitSubset { n, mask })
    }

    pub fn single(n: usize, party: usize) -> Result<Self> {
        Self::new(n, &[party])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mask(&self) -> usize {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, party: usize) -> bool {
        party < self.n && self.mask & party_bit(self.n, party) != 0
    }

    /// Nonempty and not the whole party set.
    pub fn is_proper(&self) -> bool {
        self.mask != 0 && self.mask != (1 << self.n) - 1
    }

    pub fn complement(&self) -> Self {
        QubitSubset {
            n: self.n,
            mask: !self.mask & ((1 << self.n) - 1),
        }
    }

    /// Members as 0-based party indices, ascending.
    pub fn parties(&self) -> Vec<usize> {
        (0..self.n).filter(|&p| self.contains(p)).collect()
    }
}

/// Dense Hermitian operator on `n` qubits.
///
/// Normalized states have unit trace. Post-measurement operators carry the
/// `normalized == false` flag and a trace equal to the outcome probability.
/// Partial transposes are represented with this type as well, so positivity
/// is checked explicitly via [`DensityMatrix::check_psd`] rather than assumed.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    entries: CMatrix,
    normalized: bool,
}

impl DensityMatrix {
    /// Validates shape, Hermiticity and unit trace.
    pub fn from_matrix(n: usize, entries: CMatrix) -> Result<Self> {
        Self::from_matrix_with_tol(n, entries, TRACE_TOL)
    }

    pub fn from_matrix_with_tol(n: usize, entries: CMatrix, tol: f64) -> Result<Self> {
        let rho = Self::checked(n, entries, tol)?;
        let tr = rho.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::Invariant(format!("trace {tr} differs from 1")));
        }
        Ok(DensityMatrix {
            normalized: true,
            ..rho
        })
    }

    /// Accepts trace in (0, 1], as produced by a filtering measurement.
    pub fn from_unnormalized(n: usize, entries: CMatrix) -> Result<Self> {
        let rho = Self::checked(n, entries, TRACE_TOL)?;
        let tr = rho.trace();
        if !(tr > 0.0 && tr <= 1.0 + TRACE_TOL) {
            return Err(Error::Invariant(format!(
                "unnormalized trace {tr} outside (0, 1]"
            )));
        }
        Ok(rho)
    }

    fn checked(n: usize, entries: CMatrix, tol: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("zero qubits".into()));
        }
        check_qubit_cap(n)?;
        let dim = 1usize << n;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: entries.nrows().max(entries.ncols()),
            });
        }
        let rho = DensityMatrix {
            n,
            entries,
            normalized: false,
        };
        let scale = rho.max_abs_entry().max(1.0);
        let herm = rho.hermiticity_error();
        if herm > tol * scale {
            return Err(Error::Invariant(format!(
                "matrix is not Hermitian (deviation {herm:e})"
            )));
        }
        Ok(rho)
    }

    pub(crate) fn from_parts(n: usize, entries: CMatrix, normalized: bool) -> Self {
        debug_assert_eq!(entries.nrows(), 1 << n);
        DensityMatrix {
            n,
            entries,
            normalized,
        }
    }

    /// `|psi><psi|` for a normalized state vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let n = qubits_for_len(psi.len())?;
        check_qubit_cap(n)?;
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!(
                "state vector has squared norm {norm}"
            )));
        }
        let dim = psi.len();
        let m = CMatrix::from_fn(dim, dim, |r, c| psi[r] * psi[c].conj());
        Ok(Self::from_parts(n, m, true))
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_qubit_cap(n)?;
        let dim = 1usize << n;
        let m = CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
        Ok(Self::from_parts(n, m, true))
    }

    /// Projector onto the computational basis state `index`.
    pub fn computational(n: usize, index: usize) -> Result<Self> {
        check_qubit_cap(n)?;
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {n} qubits"
            )));
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(index, index)] = ONE;
        Ok(Self::from_parts(n, m, true))
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).sum()
    }

    /// Rescales to unit trace.
    pub fn normalize(&self) -> Result<Self> {
        let tr = self.trace();
        if tr < MIN_PROBABILITY {
            return Err(Error::ZeroProbability(tr));
        }
        let m = &self.entries / Complex64::new(tr, 0.0);
        Ok(Self::from_parts(self.n, m, true))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |rho - rho^dagger| entrywise.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.entries.nrows();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                let d = (self.entries[(r, c)] - self.entries[(c, r)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs_diff(&self.entries, &other.entries)
    }

    pub fn frobenius_distance(&self, other: &DensityMatrix) -> f64 {
        (&self.entries - &other.entries).norm()
    }

    pub fn purity(&self) -> f64 {
        let m = &self.entries;
        m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.entries)
    }

    /// Returns the smallest eigenvalue, or an error when it is below
    /// `-tol * max(1, spectral scale)`.
    pub fn check_psd(&self, tol: f64) -> Result<f64> {
        let eig = self.eigenvalues()?;
        let min = eig[0];
        let scale = eig.iter().fold(1.0f64, |a, &e| a.max(e.abs()));
        if min < -tol * scale {
            return Err(Error::Invariant(format!(
                "matrix is not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(min)
    }

    /// `U rho U^dagger` for a full-register operator `U`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.nrows(),
            });
        }
        let m = u * &self.entries * u.adjoint();
        Ok(self.with_entries(m))
    }

    fn with_entries(&self, m: CMatrix) -> Self {
        let normalized = self.normalized && {
            let tr: f64 = (0..m.nrows()).map(|i| m[(i, i)].re).sum();
            (tr - 1.0).abs() <= TRACE_TOL
        };
        Self::from_parts(self.n, m, normalized)
    }
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "vector length {len} is not a power of two >= 2"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let dim = m.nrows();
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let max_iter = 1000 * dim.max(8);
    let eig = SymmetricEigen::try_new(herm, f64::EPSILON, max_iter)
        .ok_or(Error::EigenNonConvergence(dim))?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNonConvergence(dim));
    }
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// `a ⊗ b`, with `a`'s qubits in the high-order bits.
pub fn tensor_product(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    let n = a.n + b.n;
    check_qubit_cap(n)?;
    let m = a.entries.kronecker(&b.entries);
    Ok(DensityMatrix::from_parts(
        n,
        m,
        a.normalized && b.normalized,
    ))
}

/// Transposes the row/column bits that belong to `subset`.
pub fn partial_transpose(rho: &DensityMatrix, subset: &QubitSubset) -> Result<DensityMatrix> {
    if subset.n != rho.n {
        return Err(Error::PartyOutOfRange {
            party: subset.n.max(rho.n) - 1,
            n: rho.n,
        });
    }
    let s = subset.mask;
    let dim = rho.dim();
    let src = &rho.entries;
    let m = CMatrix::from_fn(dim, dim, |r, c| {
        let r2 = (r & !s) | (c & s);
        let c2 = (c & !s) | (r & s);
        src[(r2, c2)]
    });
    Ok(DensityMatrix::from_parts(rho.n, m, rho.normalized))
}

/// Outcome of a partial-transpose positivity test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PptCheck {
    pub ppt: bool,
    pub min_eigenvalue: f64,
}

/// PPT iff the smallest eigenvalue of the partial transpose is `>= -tol`.
pub fn is_ppt(rho: &DensityMatrix, subset: &QubitSubset, tol: f64) -> Result<PptCheck> {
    let pt = partial_transpose(rho, subset)?;
    let eig = pt.eigenvalues()?;
    let min = eig[0];
    Ok(PptCheck {
        ppt: min >= -tol,
        min_eigenvalue: min,
    })
}

/// `<psi|rho|psi>` for a normalized `psi`.
pub fn overlap(rho: &DensityMatrix, psi: &[Complex64]) -> Result<f64> {
    if psi.len() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: psi.len(),
        });
    }
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidArgument(format!(
            "state vector has squared norm {norm}"
        )));
    }
    let mut acc = ZERO;
    for (r, pr) in psi.iter().enumerate() {
        if *pr == ZERO {
            continue;
        }
        let mut row = ZERO;
        for (c, pc) in psi.iter().enumerate() {
            if *pc != ZERO {
                row += rho.entries[(r, c)] * pc;
            }
        }
        acc += pr.conj() * row;
    }
    Ok(acc.re)
}

#[inline]
fn insert_bit(x: usize, pos: usize, bit: usize) -> usize {
    let low = x & ((1 << pos) - 1);
    let high = (x >> pos) << (pos + 1);
    high | (bit << pos) | low
}

/// Projects `party` onto the single-qubit state `ket`, leaving an unnormalized
/// operator on the remaining `n - 1` qubits whose trace is the success
/// probability.
pub fn project_local(
    rho: &DensityMatrix,
    party: usize,
    ket: [Complex64; 2],
) -> Result<DensityMatrix> {
    let n = rho.n;
    if party >= n {
        return Err(Error::PartyOutOfRange { party, n });
    }
    if n < 2 {
        return Err(Error::InvalidArgument(
            "cannot project the only qubit of a register".into(),
        ));
    }
    let norm = ket[0].norm_sqr() + ket[1].norm_sqr();
    if (norm - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidArgument(format!(
            "projection ket has squared norm {norm}"
        )));
    }
    let pos = n - 1 - party;
    let dim = 1usize << (n - 1);
    let src = &rho.entries;
    let m = CMatrix::from_fn(dim, dim, |r, c| {
        let mut acc = ZERO;
        for a in 0..2 {
            for b in 0..2 {
                acc += ket[a].conj()
                    * src[(insert_bit(r, pos, a), insert_bit(c, pos, b))]
                    * ket[b];
            }
        }
        acc
    });
    let out = DensityMatrix::from_parts(n - 1, m, false);
    let tr = out.trace();
    if tr < MIN_PROBABILITY {
        return Err(Error::ZeroProbability(tr));
    }
    Ok(out)
}

/// Traces out the parties in `traced`; the remaining qubits keep their order.
pub fn partial_trace(rho: &DensityMatrix, traced: &QubitSubset) -> Result<DensityMatrix> {
    if traced.n != rho.n {
        return Err(Error::DimensionMismatch {
            expected: rho.n,
            found: traced.n,
        });
    }
    if !traced.complement().is_proper() && traced.mask != 0 {
        return Err(Error::InvalidArgument(
            "cannot trace out every qubit".into(),
        ));
    }
    let n = rho.n;
    let kept: Vec<usize> = (0..n).filter(|&p| !traced.contains(p)).collect();
    let gone: Vec<usize> = traced.parties();
    let compose = |k: usize, t: usize| -> usize {
        let mut x = 0;
        for (i, &p) in kept.iter().enumerate() {
            if k >> (kept.len() - 1 - i) & 1 == 1 {
                x |= party_bit(n, p);
            }
        }
        for (i, &p) in gone.iter().enumerate() {
            if t >> (gone.len() - 1 - i) & 1 == 1 {
                x |= party_bit(n, p);
            }
        }
        x
    };
    let kd = 1usize << kept.len();
    let td = 1usize << gone.len();
    let src = &rho.entries;
    let m = CMatrix::from_fn(kd, kd, |r, c| {
        (0..td).map(|t| src[(compose(r, t), compose(c, t))]).sum()
    });
    Ok(DensityMatrix::from_parts(kept.len(), m, rho.normalized))
}

/// Left-multiplies `m` by an operator acting on `qubits` (listed most
/// significant first in `op`'s own index).
fn apply_left(m: &CMatrix, n: usize, qubits: &[usize], op: &CMatrix) -> CMatrix {
    let k = qubits.len();
    let sub = 1usize << k;
    let pos: Vec<usize> = qubits.iter().map(|&q| n - 1 - q).collect();
    let mask: usize = pos.iter().map(|&p| 1usize << p).sum();
    let dim = m.nrows();
    let mut out = CMatrix::zeros(dim, m.ncols());
    let mut idx = vec![0usize; sub];
    let mut gathered = vec![ZERO; sub];
    for base in (0..dim).filter(|b| b & mask == 0) {
        for (s, slot) in idx.iter_mut().enumerate() {
            let mut x = base;
            for (t, &p) in pos.iter().enumerate() {
                if s >> (k - 1 - t) & 1 == 1 {
                    x |= 1 << p;
                }
            }
            *slot = x;
        }
        for col in 0..m.ncols() {
            for s in 0..sub {
                gathered[s] = m[(idx[s], col)];
            }
            for (s_out, &row) in idx.iter().enumerate() {
                let mut acc = ZERO;
                for s in 0..sub {
                    let o = op[(s_out, s)];
                    if o != ZERO {
                        acc += o * gathered[s];
                    }
                }
                out[(row, col)] = acc;
            }
        }
    }
    out
}

/// `K rho K^dagger` with `K` acting on the listed qubits only.
///
/// `K` need not be unitary; the result is flagged normalized only when the
/// input was and the trace is still one.
pub fn apply_local_operator(
    rho: &DensityMatrix,
    qubits: &[usize],
    op: &CMatrix,
) -> Result<DensityMatrix> {
    let n = rho.n;
    let k = qubits.len();
    if k == 0 || op.nrows() != 1 << k || op.ncols() != 1 << k {
        return Err(Error::DimensionMismatch {
            expected: 1 << k,
            found: op.nrows(),
        });
    }
    let mut seen = 0usize;
    for &q in qubits {
        if q >= n {
            return Err(Error::PartyOutOfRange { party: q, n });
        }
        if seen & (1 << q) != 0 {
            return Err(Error::InvalidArgument(format!("qubit {q} listed twice")));
        }
        seen |= 1 << q;
    }
    let left = apply_left(&rho.entries, n, qubits, op);
    let both = apply_left(&left.adjoint(), n, qubits, op).adjoint();
    Ok(rho.with_entries(both))
}

/// Relabels qubits: the content of qubit `p` moves to position `perm[p]`.
pub fn permute_qubits(rho: &DensityMatrix, perm: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n;
    validate_permutation(n, perm)?;
    let dim = rho.dim();
    let map = |x: usize| -> usize {
        let mut y = 0;
        for (p, &q) in perm.iter().enumerate() {
            if x & party_bit(n, p) != 0 {
                y |= party_bit(n, q);
            }
        }
        y
    };
    let images: Vec<usize> = (0..dim).map(map).collect();
    let mut m = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            m[(images[r], images[c])] = rho.entries[(r, c)];
        }
    }
    Ok(DensityMatrix::from_parts(n, m, rho.normalized))
}

pub(crate) fn validate_permutation(n: usize, perm: &[usize]) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidArgument(format!(
            "permutation has {} entries for {n} parties",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &q in perm {
        if q >= n || seen[q] {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation of 0..{n}"
            )));
        }
        seen[q] = true;
    }
    Ok(())
}

/// Full-rank random state: `G G^dagger / tr` for a complex Ginibre matrix `G`.
pub fn random_density_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DensityMatrix> {
    check_qubit_cap(n)?;
    let dim = 1usize << n;
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr: f64 = (0..dim).map(|i| m[(i, i)].re).sum();
    Ok(DensityMatrix::from_parts(
        n,
        m / Complex64::new(tr, 0.0),
        true,
    ))
}

/// Gaussian-distributed unit vector of length `2^n`.
pub fn random_pure_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let dim = 1usize << n;
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Random element of U(2).
pub fn random_qubit_unitary<R: Rng + ?Sized>(rng: &mut R) -> CMatrix {
    use std::f64::consts::PI;
    let theta: f64 = rng.gen_range(0.0..PI / 2.0);
    let a: f64 = rng.gen_range(0.0..2.0 * PI);
    let b: f64 = rng.gen_range(0.0..2.0 * PI);
    let g: f64 = rng.gen_range(0.0..2.0 * PI);
    let ph = Complex64::from_polar(1.0, g);
    let u00 = Complex64::from_polar(theta.cos(), a);
    let u01 = Complex64::from_polar(theta.sin(), b);
    let u10 = -Complex64::from_polar(theta.sin(), -b);
    let u11 = Complex64::from_polar(theta.cos(), -a);
    CMatrix::from_row_slice(2, 2, &[ph * u00, ph * u01, ph * u10, ph * u11])
}

/// Tensor product of independent random single-qubit unitaries.
pub fn random_local_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let mut u = CMatrix::from_element(1, 1, ONE);
    for _ in 0..n {
        u = u.kronecker(&random_qubit_unitary(rng));
    }
    u
}

/// Single-qubit Pauli matrices used by the twirling rounds.
pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}
