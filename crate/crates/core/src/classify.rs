//! Separability and distillability of `ρ_N` from its bipartite PPT pattern,
//! hierarchic reports, and three-qubit class labels.

mod witness;

use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::depolarize::depolarize_channel;
use crate::error::{Error, Result};
use crate::ghz::{params_from_state_with_tol, RhoNParams};
use crate::qstate::{DensityMatrix, QubitSubset};
use crate::splits::{
    bipartite_coarsenings, enumerate_k_splits, lambda_count, lambda_index_to_split, Split,
    SplitIndex,
};

pub use witness::{
    witness_decomposition, ProductEnsemble, ProductTerm, Witness, WitnessKind, WITNESS_TOL,
};

/// Default tolerance on PPT margins.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default largest party count for the full k-split sweep.
pub const DEFAULT_SWEEP_CAP: usize = 10;

/// Analytic PPT verdict for one bipartite split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplitPpt {
    pub ppt: bool,
    /// `2 λ_k - |Δ|`.
    pub margin: f64,
    /// `|margin| <= tol`: the sharp condition is undecided in floating point.
    pub boundary: bool,
}

impl SplitPpt {
    fn from_margin(margin: f64, tol: f64) -> Self {
        SplitPpt {
            ppt: margin >= -tol,
            margin,
            boundary: margin.abs() <= tol,
        }
    }
}

fn check_n(p: &RhoNParams, n: usize) -> Result<()> {
    if p.n() != n {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: n,
        });
    }
    Ok(())
}

/// `2 λ_k - |Δ|`.
fn index_margin(p: &RhoNParams, k: SplitIndex) -> f64 {
    2.0 * p.lambda(k) - p.delta().abs()
}

pub fn split_margin(p: &RhoNParams, k: SplitIndex, tol: f64) -> SplitPpt {
    SplitPpt::from_margin(index_margin(p, k), tol)
}

/// PPT iff `|Δ| <= 2 λ_k + tol` for the split's index `k`.
pub fn is_split_ppt(p: &RhoNParams, split: &Split, tol: f64) -> Result<SplitPpt> {
    check_n(p, split.n())?;
    let k = crate::splits::split_to_lambda_index(split)?;
    Ok(split_margin(p, k, tol))
}

/// Separable with respect to `split` iff every bipartite split containing it
/// is PPT.
pub fn is_k_separable(p: &RhoNParams, split: &Split, tol: f64) -> Result<bool> {
    check_n(p, split.n())?;
    if split.k() < 2 {
        return Err(Error::InvalidSplit(format!("{split} has a single block")));
    }
    Ok(bipartite_coarsenings(split)
        .into_iter()
        .all(|k| split_margin(p, k, tol).ppt))
}

fn side_mask(k: SplitIndex) -> usize {
    k.0 << 1
}

/// Indices of bipartite splits that put `A_i` and `A_j` on different sides.
pub fn separating_indices(n: usize, i: usize, j: usize) -> Result<Vec<SplitIndex>> {
    check_pair(n, i, j)?;
    let (bi, bj) = (crate::qstate::party_bit(n, i), crate::qstate::party_bit(n, j));
    Ok((1..=lambda_count(n)?)
        .map(SplitIndex)
        .filter(|&k| {
            let s = side_mask(k);
            (s & bi == 0) != (s & bj == 0)
        })
        .collect())
}

/// Indices of bipartite splits that do not keep `subset` on one side.
pub fn cutting_indices(subset: &QubitSubset) -> Result<Vec<SplitIndex>> {
    let n = subset.n();
    if subset.len() < 2 {
        return Err(Error::InvalidArgument(
            "subset must contain at least two parties".into(),
        ));
    }
    let m = subset.mask();
    Ok((1..=lambda_count(n)?)
        .map(SplitIndex)
        .filter(|&k| {
            let s = side_mask(k);
            s & m != 0 && m & !s != 0
        })
        .collect())
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    for p in [i, j] {
        if p >= n {
            return Err(Error::PartyOutOfRange { party: p, n });
        }
    }
    if i == j {
        return Err(Error::InvalidArgument(format!(
            "pair needs two distinct parties, got {i} twice"
        )));
    }
    Ok(())
}

/// Strictly distillable: every listed split has `|Δ| > 2 λ_k + tol`.
fn all_npt(p: &RhoNParams, indices: &[SplitIndex], tol: f64) -> bool {
    indices.iter().all(|&k| index_margin(p, k) < -tol)
}

/// A maximally entangled pair between `A_i` and `A_j` can be distilled iff
/// every split separating them is NPT.
pub fn pair_distillable(p: &RhoNParams, i: usize, j: usize, tol: f64) -> Result<bool> {
    Ok(all_npt(p, &separating_indices(p.n(), i, j)?, tol))
}

/// A GHZ state among `subset` can be distilled iff every split cutting
/// through `subset` is NPT.
pub fn ghz_distillable(p: &RhoNParams, subset: &QubitSubset, tol: f64) -> Result<bool> {
    if subset.n() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: subset.n(),
        });
    }
    Ok(all_npt(p, &cutting_indices(subset)?, tol))
}

/// Three-qubit classes, named by which single-party splits are PPT.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ThreeQubitClass {
    /// Fully inseparable.
    Class1,
    /// Separable only in `A-(BC)`.
    Class2_1,
    /// Separable only in `B-(AC)`.
    Class2_2,
    /// Separable only in `C-(AB)`.
    Class2_3,
    /// Separable in `A-(BC)` and `B-(AC)`.
    Class3_1,
    /// Separable in `A-(BC)` and `C-(AB)`.
    Class3_2,
    /// Separable in `B-(AC)` and `C-(AB)`.
    Class3_3,
    /// Biseparable in every split but not fully separable. Empty for `ρ_3`.
    Class4,
    /// Fully separable.
    Class5,
}

impl ThreeQubitClass {
    pub fn label(self) -> &'static str {
        match self {
            ThreeQubitClass::Class1 => "1",
            ThreeQubitClass::Class2_1 => "2.1",
            ThreeQubitClass::Class2_2 => "2.2",
            ThreeQubitClass::Class2_3 => "2.3",
            ThreeQubitClass::Class3_1 => "3.1",
            ThreeQubitClass::Class3_2 => "3.2",
            ThreeQubitClass::Class3_3 => "3.3",
            ThreeQubitClass::Class4 => "4",
            ThreeQubitClass::Class5 => "5",
        }
    }

    /// From PPT flags of `A-(BC)`, `B-(AC)`, `C-(AB)`.
    pub fn from_ppt_pattern(a: bool, b: bool, c: bool) -> Self {
        match (a, b, c) {
            (false, false, false) => ThreeQubitClass::Class1,
            (true, false, false) => ThreeQubitClass::Class2_1,
            (false, true, false) => ThreeQubitClass::Class2_2,
            (false, false, true) => ThreeQubitClass::Class2_3,
            (true, true, false) => ThreeQubitClass::Class3_1,
            (true, false, true) => ThreeQubitClass::Class3_2,
            (false, true, true) => ThreeQubitClass::Class3_3,
            (true, true, true) => ThreeQubitClass::Class5,
        }
    }

    /// The two PPT parties (0-based) whose shared pair activates the bound
    /// entanglement, for classes 3.x.
    pub fn activation_pair(self) -> Option<[usize; 2]> {
        match self {
            ThreeQubitClass::Class3_1 => Some([0, 1]),
            ThreeQubitClass::Class3_2 => Some([0, 2]),
            ThreeQubitClass::Class3_3 => Some([1, 2]),
            _ => None,
        }
    }

    pub fn is_activatable(self) -> bool {
        self.activation_pair().is_some()
    }
}

impl fmt::Display for ThreeQubitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for ThreeQubitClass {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// Index of the split isolating party `p` (0-based) when `n = 3`.
fn single_party_index(n: usize, p: usize) -> SplitIndex {
    let bit = crate::qstate::party_bit(n, p);
    let full = (1usize << n) - 1;
    let side = if bit & 1 == 0 { bit } else { full ^ bit };
    SplitIndex(side >> 1)
}

pub fn three_qubit_class(p: &RhoNParams, tol: f64) -> Result<ThreeQubitClass> {
    if p.n() != 3 {
        return Err(Error::InvalidArgument(format!(
            "three-qubit classes need n = 3, got {}",
            p.n()
        )));
    }
    let ppt = |party| split_margin(p, single_party_index(3, party), tol).ppt;
    Ok(ThreeQubitClass::from_ppt_pattern(ppt(0), ppt(1), ppt(2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Provenance {
    /// The input is in `ρ_N` form; every verdict is exact.
    #[serde(rename = "exact-for-rhoN")]
    ExactForRhoN,
    /// Verdicts were computed for the depolarized input. Inseparability and
    /// distillability carry over to the input; separability does not.
    #[serde(rename = "sufficient-only-for-arbitrary")]
    SufficientOnlyForArbitrary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Separable,
    Inseparable,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BipartiteEntry {
    pub split: Split,
    pub lambda_index: SplitIndex,
    pub ppt: bool,
    pub margin: f64,
    pub boundary: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KSplitEntry {
    pub k: usize,
    pub split: Split,
    pub separable: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairEntry {
    /// 1-based party labels.
    pub parties: [usize; 2],
    pub distillable: bool,
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetEntry {
    /// 1-based party labels.
    pub parties: Vec<usize>,
    pub distillable: bool,
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassLabel {
    pub class: ThreeQubitClass,
    pub activatable: bool,
    /// 1-based labels of the pair whose entanglement activates the state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub activation_pair: Option<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub n_qubits: usize,
    pub delta: f64,
    pub tolerance: f64,
    pub max_level: usize,
    pub provenance: Provenance,
    pub bipartite: Vec<BipartiteEntry>,
    pub k_splits: Vec<KSplitEntry>,
    pub fully_separable: bool,
    pub fully_separable_verdict: Verdict,
    pub pair_distillable: Vec<PairEntry>,
    pub ghz_distillable: Vec<SubsetEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_label: Option<ClassLabel>,
}

impl ClassificationReport {
    pub fn bipartite_entry(&self, k: SplitIndex) -> Option<&BipartiteEntry> {
        self.bipartite.get(k.0.checked_sub(1)?)
    }

    /// 0-based pair lookup.
    pub fn pair(&self, i: usize, j: usize) -> Option<bool> {
        let (a, b) = (i.min(j) + 1, i.max(j) + 1);
        self.pair_distillable
            .iter()
            .find(|e| e.parties == [a, b])
            .map(|e| e.distillable)
    }

    /// 0-based subset lookup.
    pub fn ghz(&self, parties: &[usize]) -> Option<bool> {
        let mut labels: Vec<usize> = parties.iter().map(|p| p + 1).collect();
        labels.sort_unstable();
        self.ghz_distillable
            .iter()
            .find(|e| e.parties == labels)
            .map(|e| e.distillable)
    }

    pub fn k_split(&self, split: &Split) -> Option<&KSplitEntry> {
        self.k_splits.iter().find(|e| &e.split == split)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportOptions {
    pub tol: f64,
    /// Largest `k` for the k-split sweep; `None` sweeps up to `N`.
    pub max_level: Option<usize>,
    /// Largest `N` for which the k-split sweep and subset map are built.
    pub sweep_cap: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            tol: DEFAULT_TOL,
            max_level: None,
            sweep_cap: DEFAULT_SWEEP_CAP,
        }
    }
}

pub fn classification_report(p: &RhoNParams) -> Result<ClassificationReport> {
    classification_report_with(p, &ReportOptions::default())
}

pub fn classification_report_with(
    p: &RhoNParams,
    opts: &ReportOptions,
) -> Result<ClassificationReport> {
    build_report(p, opts, Provenance::ExactForRhoN)
}

fn build_report(
    p: &RhoNParams,
    opts: &ReportOptions,
    provenance: Provenance,
) -> Result<ClassificationReport> {
    let n = p.n();
    let tol = opts.tol;
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be >= 0")));
    }
    let max_level = opts.max_level.unwrap_or(n).min(n);
    if max_level < 2 {
        return Err(Error::InvalidArgument(format!(
            "max level {max_level} is below 2"
        )));
    }
    let sweep = max_level >= 3;
    if sweep && n > opts.sweep_cap {
        return Err(Error::SizeCap {
            requested: n,
            max: opts.sweep_cap,
        });
    }
    let exact = provenance == Provenance::ExactForRhoN;
    let verdict = |separable: bool| match (separable, exact) {
        (false, _) => Verdict::Inseparable,
        (true, true) => Verdict::Separable,
        (true, false) => Verdict::Unknown,
    };

    let count = lambda_count(n)?;
    let margins: Vec<SplitPpt> = (1..=count)
        .map(|k| split_margin(p, SplitIndex(k), tol))
        .collect();
    let bipartite = margins
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let k = SplitIndex(i + 1);
            Ok(BipartiteEntry {
                split: lambda_index_to_split(n, k)?,
                lambda_index: k,
                ppt: m.ppt,
                margin: m.margin,
                boundary: m.boundary,
                verdict: verdict(m.ppt),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let ppt_at = |k: SplitIndex| margins[k.0 - 1].ppt;
    let mut k_splits = Vec::new();
    if sweep {
        for k in 3..=max_level {
            let splits = enumerate_k_splits(n, k)?;
            let entries: Vec<KSplitEntry> = splits
                .into_par_iter()
                .map(|split| {
                    let separable = bipartite_coarsenings(&split).into_iter().all(ppt_at);
                    KSplitEntry {
                        k,
                        split,
                        separable,
                        verdict: verdict(separable),
                    }
                })
                .collect();
            k_splits.extend(entries);
        }
    }
    let fully_separable = margins.iter().all(|m| m.ppt);

    let strict = |indices: &[SplitIndex]| -> (bool, bool) {
        let distillable = indices.iter().all(|k| margins[k.0 - 1].margin < -tol);
        let boundary = indices.iter().any(|k| margins[k.0 - 1].boundary);
        (distillable, boundary)
    };
    let mut pair_distillable = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let (distillable, boundary) = strict(&separating_indices(n, i, j)?);
            pair_distillable.push(PairEntry {
                parties: [i + 1, j + 1],
                distillable,
                boundary,
            });
        }
    }

    let full = (1usize << n) - 1;
    let subset_masks: Vec<usize> = if n <= opts.sweep_cap {
        let mut masks: Vec<usize> = (1..=full).filter(|m| m.count_ones() >= 2).collect();
        masks.sort_by_key(|&m| {
            let parties = QubitSubset::from_mask(n, m).map(|s| s.parties()).unwrap_or_default();
            (parties.len(), parties)
        });
        masks
    } else {
        vec![full]
    };
    let ghz_distillable = subset_masks
        .into_par_iter()
        .map(|m| {
            let subset = QubitSubset::from_mask(n, m)?;
            let (distillable, boundary) = strict(&cutting_indices(&subset)?);
            Ok(SubsetEntry {
                parties: subset.parties().iter().map(|p| p + 1).collect(),
                distillable,
                boundary,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let class_label = if n == 3 {
        let class = three_qubit_class(p, tol)?;
        Some(ClassLabel {
            class,
            activatable: class.is_activatable(),
            activation_pair: class.activation_pair().map(|[a, b]| [a + 1, b + 1]),
        })
    } else {
        None
    };

    Ok(ClassificationReport {
        n_qubits: n,
        delta: p.delta(),
        tolerance: tol,
        max_level,
        provenance,
        bipartite,
        k_splits,
        fully_separable,
        fully_separable_verdict: verdict(fully_separable),
        pair_distillable,
        ghz_distillable,
        class_label,
    })
}

pub fn sufficient_report(rho: &DensityMatrix) -> Result<ClassificationReport> {
    sufficient_report_with(rho, &ReportOptions::default())
}

/// Report for an arbitrary state, computed on its depolarization.
///
/// When the input is already in `ρ_N` form (up to `tol`) the verdicts are
/// exact and the provenance says so.
pub fn sufficient_report_with(
    rho: &DensityMatrix,
    opts: &ReportOptions,
) -> Result<ClassificationReport> {
    let p = params_from_state_with_tol(rho, opts.tol.max(crate::ghz::PARAM_TOL))?;
    let in_family = depolarize_channel(rho)?.max_abs_diff(rho) <= opts.tol;
    let provenance = if in_family {
        Provenance::ExactForRhoN
    } else {
        Provenance::SufficientOnlyForArbitrary
    };
    build_report(&p, opts, provenance)
}
