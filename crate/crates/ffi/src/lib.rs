//! C ABI over the `entclass` library.
//!
//! Every function returns an [`EcStatus`] and writes results through out
//! pointers. On failure the message is available from
//! [`ec_last_error_message`] on the calling thread. Handles and strings
//! returned by the library are released with the matching `*_free` call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use entclass::classify::{
    classification_report_with, ghz_distillable, pair_distillable, split_margin,
    three_qubit_class, ReportOptions, ThreeQubitClass,
};
use entclass::depolarize::depolarize_channel;
use entclass::ghz::{params_from_state_with_tol, rho_from_params, PARAM_TOL};
use entclass::mixture::{ghz_mixture_params, separability_threshold, MixtureWeight};
use entclass::purify::{
    min_copies_to_distill, pair_fidelity_after_projection, purification_step, CopiesOutcome,
};
use entclass::qstate::{is_ppt, CMatrix, QubitSubset};
use entclass::splits::{partition_function, split_to_lambda_index, Split, SplitIndex};
use entclass::{DensityMatrix, Error, RhoNParams};
use num_complex::Complex64;

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvariantViolation = 3,
    SizeCap = 4,
    NotDistillable = 5,
    NumericalFailure = 6,
    LimitReached = 7,
    Panic = 8,
}

/// Three-qubit class; the value spells the label (`21` is class 2.1).
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EcThreeQubitClass {
    Class1 = 10,
    Class2_1 = 21,
    Class2_2 = 22,
    Class2_3 = 23,
    Class3_1 = 31,
    Class3_2 = 32,
    Class3_3 = 33,
    Class4 = 40,
    Class5 = 50,
}

impl From<ThreeQubitClass> for EcThreeQubitClass {
    fn from(c: ThreeQubitClass) -> Self {
        match c {
            ThreeQubitClass::Class1 => EcThreeQubitClass::Class1,
            ThreeQubitClass::Class2_1 => EcThreeQubitClass::Class2_1,
            ThreeQubitClass::Class2_2 => EcThreeQubitClass::Class2_2,
            ThreeQubitClass::Class2_3 => EcThreeQubitClass::Class2_3,
            ThreeQubitClass::Class3_1 => EcThreeQubitClass::Class3_1,
            ThreeQubitClass::Class3_2 => EcThreeQubitClass::Class3_2,
            ThreeQubitClass::Class3_3 => EcThreeQubitClass::Class3_3,
            ThreeQubitClass::Class4 => EcThreeQubitClass::Class4,
            ThreeQubitClass::Class5 => EcThreeQubitClass::Class5,
        }
    }
}

/// Opaque GHZ-diagonal parameter set.
pub struct EcParams(RhoNParams);

/// Opaque dense density matrix.
pub struct EcDensity(DensityMatrix);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

struct Failure(EcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::SizeCap { .. } => EcStatus::SizeCap,
            Error::Invariant(_) | Error::NotSeparable(_) | Error::ZeroProbability(_) => {
                EcStatus::InvariantViolation
            }
            Error::EigenNonConvergence(_) => EcStatus::NumericalFailure,
            Error::DimensionMismatch { .. }
            | Error::PartyOutOfRange { .. }
            | Error::InvalidSplit(_)
            | Error::InvalidArgument(_) => EcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn null(what: &str) -> Failure {
    Failure(EcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Outcome) -> EcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            EcStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {message}"));
            EcStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Outcome {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn array<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(data, len))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Failure(EcStatus::InvalidArgument, e.to_string()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ec_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds normalized parameters. `lambdas` holds `2^(n-1) - 1` weights.
///
/// # Safety
/// `lambdas` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_params_new(
    n: usize,
    lambda0_plus: f64,
    lambda0_minus: f64,
    lambdas: *const f64,
    len: usize,
    tol: f64,
    out: *mut *mut EcParams,
) -> EcStatus {
    guard(|| {
        let l = array(lambdas, len, "lambdas")?.to_vec();
        let p = RhoNParams::with_tolerance(n, lambda0_plus, lambda0_minus, l, tol.max(PARAM_TOL))?;
        write(out, Box::into_raw(Box::new(EcParams(p))), "out")
    })
}

/// GHZ state mixed with white noise at weight `x`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_params_mixture(n: usize, x: f64, out: *mut *mut EcParams) -> EcStatus {
    guard(|| {
        let p = ghz_mixture_params(n, MixtureWeight::new(x)?)?;
        write(out, Box::into_raw(Box::new(EcParams(p))), "out")
    })
}

/// # Safety
/// `p` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ec_params_free(p: *mut EcParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Party count and `Δ = λ_0^+ - λ_0^-`.
///
/// # Safety
/// `p` must be a live handle; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_params_info(
    p: *const EcParams,
    out_n: *mut usize,
    out_delta: *mut f64,
) -> EcStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        write(out_n, p.n(), "out_n")?;
        write(out_delta, p.delta(), "out_delta")
    })
}

/// Index `k` of the bipartite split with `side` (0-based parties) on one side.
///
/// # Safety
/// `side` must point to `len` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_lambda_index(
    n: usize,
    side: *const usize,
    len: usize,
    out: *mut usize,
) -> EcStatus {
    guard(|| {
        let subset = QubitSubset::new(n, array(side, len, "side")?)?;
        let k = split_to_lambda_index(&Split::bipartite(&subset)?)?;
        write(out, k.value(), "out")
    })
}

/// PPT flag and margin `2λ_k - |Δ|` of split `k`.
///
/// # Safety
/// `p` must be a live handle; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_split_ppt(
    p: *const EcParams,
    k: usize,
    tol: f64,
    out_ppt: *mut bool,
    out_margin: *mut f64,
) -> EcStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        let count = entclass::splits::lambda_count(p.n())?;
        if k == 0 || k > count {
            return Err(Failure(
                EcStatus::InvalidArgument,
                format!("split index {k} outside 1..={count}"),
            ));
        }
        let s = split_margin(p, SplitIndex(k), tol);
        write(out_ppt, s.ppt, "out_ppt")?;
        write(out_margin, s.margin, "out_margin")
    })
}

/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_pair_distillable(
    p: *const EcParams,
    i: usize,
    j: usize,
    tol: f64,
    out: *mut bool,
) -> EcStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        write(out, pair_distillable(p, i, j, tol)?, "out")
    })
}

/// # Safety
/// `parties` must point to `len` 0-based indices; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_ghz_distillable(
    p: *const EcParams,
    parties: *const usize,
    len: usize,
    tol: f64,
    out: *mut bool,
) -> EcStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        let subset = QubitSubset::new(p.n(), array(parties, len, "parties")?)?;
        write(out, ghz_distillable(p, &subset, tol)?, "out")
    })
}

/// Class of a three-party state.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_three_qubit_class(
    p: *const EcParams,
    tol: f64,
    out: *mut EcThreeQubitClass,
) -> EcStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        write(out, three_qubit_class(p, tol)?.into(), "out")
    })
}

/// Full classification report as JSON; release with [`ec_string_free`].
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_classify_json(
    p: *const EcParams,
    tol: f64,
    out: *mut *mut c_char,
) -> EcStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        let opts = ReportOptions {
            tol,
            ..ReportOptions::default()
        };
        let report = classification_report_with(p, &opts)?;
        let text = serde_json::to_string(&report)
            .map_err(|e| Failure(EcStatus::NumericalFailure, e.to_string()))?;
        write(out, into_c_string(text)?, "out")
    })
}

/// Smallest number of copies distilling the pair `(i, j)`.
///
/// Returns `NotDistillable` when a separating split is PPT and
/// `LimitReached` when no `M <= max_copies` works.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_min_copies(
    p: *const EcParams,
    i: usize,
    j: usize,
    tol: f64,
    max_copies: usize,
    out: *mut usize,
) -> EcStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        match min_copies_to_distill(p, i, j, tol, max_copies)? {
            CopiesOutcome::Copies(m) => write(out, m, "out"),
            CopiesOutcome::NotDistillable { violated } => {
                let names: Vec<String> = violated.iter().map(|s| s.to_string()).collect();
                Err(Failure(
                    EcStatus::NotDistillable,
                    format!("PPT across {}", names.join(", ")),
                ))
            }
            CopiesOutcome::LimitReached { max_copies } => Err(Failure(
                EcStatus::LimitReached,
                format!("no M <= {max_copies} distills the pair"),
            )),
        }
    })
}

/// Fidelity of the pair `(i, j)` with a Bell state after projecting every
/// other party onto `|+>`.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_pair_fidelity(
    p: *const EcParams,
    i: usize,
    j: usize,
    out: *mut f64,
) -> EcStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        write(out, pair_fidelity_after_projection(p, i, j)?, "out")
    })
}

/// One purification step on `copies` copies; returns a new handle.
///
/// # Safety
/// `p` must be a live handle; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_purify(
    p: *const EcParams,
    copies: usize,
    out: *mut *mut EcParams,
    out_success_probability: *mut f64,
) -> EcStatus {
    guard(|| {
        let p = &deref(p, "params")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let step = purification_step(p, copies)?;
        write(out_success_probability, step.success_probability, "out_success_probability")?;
        write(out, Box::into_raw(Box::new(EcParams(step.output))), "out")
    })
}

/// Dense matrix from row-major real and imaginary parts, `4^n` entries each.
///
/// # Safety
/// `re` and `im` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_density_new(
    n: usize,
    re: *const f64,
    im: *const f64,
    len: usize,
    tol: f64,
    out: *mut *mut EcDensity,
) -> EcStatus {
    guard(|| {
        entclass::qstate::check_qubit_cap(n)?;
        let dim = 1usize << n;
        if len != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: len,
            }
            .into());
        }
        let (re, im) = (array(re, len, "re")?, array(im, len, "im")?);
        let m = CMatrix::from_fn(dim, dim, |r, c| Complex64::new(re[r * dim + c], im[r * dim + c]));
        let rho = DensityMatrix::from_matrix_with_tol(n, m, tol)?;
        rho.check_psd(tol)?;
        write(out, Box::into_raw(Box::new(EcDensity(rho))), "out")
    })
}

/// Dense form of a parameter set.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_density_from_params(
    p: *const EcParams,
    out: *mut *mut EcDensity,
) -> EcStatus {
    guard(|| {
        let rho = rho_from_params(&deref(p, "params")?.0)?;
        write(out, Box::into_raw(Box::new(EcDensity(rho))), "out")
    })
}

/// # Safety
/// `d` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ec_density_free(d: *mut EcDensity) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Partial-transpose test on the parties in `side` (0-based).
///
/// # Safety
/// `d` must be a live handle; `side` must point to `len` entries; out
/// pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_density_is_ppt(
    d: *const EcDensity,
    side: *const usize,
    len: usize,
    tol: f64,
    out_ppt: *mut bool,
    out_min_eigenvalue: *mut f64,
) -> EcStatus {
    guard(|| {
        let rho = &deref(d, "density")?.0;
        let subset = QubitSubset::new(rho.n_qubits(), array(side, len, "side")?)?;
        let check = is_ppt(rho, &subset, tol)?;
        write(out_ppt, check.ppt, "out_ppt")?;
        write(out_min_eigenvalue, check.min_eigenvalue, "out_min_eigenvalue")
    })
}

/// Parameters of the exact depolarization of `d`.
///
/// # Safety
/// `d` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_density_depolarize(
    d: *const EcDensity,
    tol: f64,
    out: *mut *mut EcParams,
) -> EcStatus {
    guard(|| {
        let rho = &deref(d, "density")?.0;
        let image = depolarize_channel(rho)?;
        let p = params_from_state_with_tol(&image, tol.max(PARAM_TOL))?;
        write(out, Box::into_raw(Box::new(EcParams(p))), "out")
    })
}

/// Number of integer partitions of `n` as a decimal string.
///
/// # Safety
/// `out` must be writable; release the string with [`ec_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ec_partition_function(n: usize, out: *mut *mut c_char) -> EcStatus {
    guard(|| write(out, into_c_string(partition_function(n).to_string())?, "out"))
}

/// Separability threshold `numerator / denominator` of the noisy GHZ mixture.
///
/// # Safety
/// Out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ec_threshold(
    n: usize,
    out_numerator: *mut u64,
    out_denominator: *mut u64,
) -> EcStatus {
    guard(|| {
        let t = separability_threshold(n)?;
        write(out_numerator, t.numerator, "out_numerator")?;
        write(out_denominator, t.denominator, "out_denominator")
    })
}
