//! Command-line frontend: state files, reports and subcommands.

use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classify::{
    classification_report_with, sufficient_report_with, ClassificationReport, ReportOptions,
    DEFAULT_SWEEP_CAP, DEFAULT_TOL,
};
use crate::depolarize::{depolarize_channel, ghz_offdiagonal_residual};
use crate::error::Error;
use crate::ghz::{params_from_state_with_tol, RhoNParams};
use crate::mixture::{ghz_mixture_params, ghz_mixture_state, separability_threshold, MixtureWeight};
use crate::purify::{
    min_copies_to_distill, pair_fidelity_after_projection, purification_step, CopiesOutcome,
    PurificationStep, DEFAULT_MAX_COPIES,
};
use crate::qstate::{check_qubit_cap, CMatrix, DensityMatrix};
use crate::splits::{
    count_shape_configurations, enumerate_k_splits, integer_partitions, partition_function,
    stirling2,
};

pub const EXIT_GENERAL: u8 = 1;
pub const EXIT_SCHEMA: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;
pub const EXIT_SIZE_CAP: u8 = 4;
pub const EXIT_NOT_DISTILLABLE: u8 = 5;

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    fn schema(message: impl Into<String>) -> Self {
        Self::new(EXIT_SCHEMA, message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::SizeCap { .. } => EXIT_SIZE_CAP,
            Error::Invariant(_) | Error::ZeroProbability(_) | Error::NotSeparable(_) => {
                EXIT_INVARIANT
            }
            Error::DimensionMismatch { .. }
            | Error::PartyOutOfRange { .. }
            | Error::InvalidSplit(_)
            | Error::InvalidArgument(_) => EXIT_SCHEMA,
            Error::EigenNonConvergence(_) => EXIT_GENERAL,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::new(EXIT_GENERAL, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// On-disk state: GHZ-diagonal parameters or a dense density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateFile {
    RhoNParams {
        n: usize,
        lambda0_plus: f64,
        lambda0_minus: f64,
        lambdas: Vec<f64>,
    },
    DensityMatrix {
        n: usize,
        /// Row-major `[re, im]` pairs, `A_1` most significant.
        matrix: Vec<Vec<[f64; 2]>>,
    },
}

/// A validated state.
#[derive(Clone, Debug)]
pub enum LoadedState {
    Params(RhoNParams),
    Density(DensityMatrix),
}

impl StateFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::schema(format!("invalid state file: {e}")))
    }

    pub fn from_params(p: &RhoNParams) -> Self {
        StateFile::RhoNParams {
            n: p.n(),
            lambda0_plus: p.lambda0_plus(),
            lambda0_minus: p.lambda0_minus(),
            lambdas: p.lambdas().to_vec(),
        }
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        let m = rho.entries();
        StateFile::DensityMatrix {
            n: rho.n_qubits(),
            matrix: (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
                .collect(),
        }
    }

    /// Checks shape, normalization and positivity within `tol`.
    pub fn load(&self, tol: f64, renormalize: bool) -> CliResult<LoadedState> {
        match self {
            StateFile::RhoNParams {
                n,
                lambda0_plus,
                lambda0_minus,
                lambdas,
            } => {
                let expected = crate::splits::lambda_count(*n)?;
                if lambdas.len() != expected {
                    return Err(CliError::schema(format!(
                        "n = {n} needs {expected} lambdas, found {}",
                        lambdas.len()
                    )));
                }
                let p = if renormalize {
                    RhoNParams::from_unnormalized_weights(
                        *n,
                        *lambda0_plus,
                        *lambda0_minus,
                        lambdas.clone(),
                    )?
                } else {
                    RhoNParams::with_tolerance(
                        *n,
                        *lambda0_plus,
                        *lambda0_minus,
                        lambdas.clone(),
                        tol,
                    )?
                };
                Ok(LoadedState::Params(p))
            }
            StateFile::DensityMatrix { n, matrix } => {
                if *n == 0 {
                    return Err(CliError::schema("n must be at least 1"));
                }
                check_qubit_cap(*n)?;
                let dim = 1usize << n;
                if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
                    return Err(CliError::schema(format!(
                        "n = {n} needs a {dim}x{dim} matrix"
                    )));
                }
                let m = CMatrix::from_fn(dim, dim, |r, c| {
                    let [re, im] = matrix[r][c];
                    Complex64::new(re, im)
                });
                let rho = if renormalize {
                    DensityMatrix::from_unnormalized(*n, m)?.normalize()?
                } else {
                    DensityMatrix::from_matrix_with_tol(*n, m, tol)?
                };
                rho.check_psd(tol)?;
                Ok(LoadedState::Density(rho))
            }
        }
    }
}

/// Classification output with provenance of the run.
#[derive(Clone, Debug, Serialize)]
pub struct ReportFile {
    pub tool: &'static str,
    pub version: &'static str,
    pub input_sha256: String,
    pub tolerance: f64,
    pub report: ClassificationReport,
}

#[derive(Debug, Parser)]
#[command(name = "entclass", version, about = "Classify multi-qubit GHZ-diagonal states by separability and distillability")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Separability and distillability report for a state file.
    Classify(ClassifyArgs),
    /// Extract GHZ-diagonal parameters from a density matrix.
    Depolarize(DepolarizeArgs),
    /// Minimum copies and projected fidelity for pair distillation.
    Purify(PurifyArgs),
    /// Enumerate or count k-party splits and integer partitions.
    Partitions(PartitionsArgs),
    /// Separability threshold of the GHZ/white-noise mixture.
    Threshold(ThresholdArgs),
    /// Emit the GHZ/white-noise mixture as a state file.
    Mixture(MixtureArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// State file, or `-` for standard input.
    pub input: PathBuf,
    /// Tolerance for load checks and PPT margins.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Rescale unnormalized inputs to unit trace instead of rejecting them.
    #[arg(long)]
    pub renormalize: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Largest k in the k-split sweep (2 = bipartite only).
    #[arg(long)]
    pub max_level: Option<usize>,
    /// Largest party count for the full k-split sweep.
    #[arg(long, default_value_t = DEFAULT_SWEEP_CAP)]
    pub sweep_cap: usize,
    /// Emit JSON (default).
    #[arg(long, conflicts_with = "table")]
    pub json: bool,
    /// Emit a class table (three parties only).
    #[arg(long)]
    pub table: bool,
    /// Worker threads for the split sweep.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DepolarizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Also apply the exact channel and report the GHZ off-diagonal residual.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct PurifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Pair of parties, 1-based (default: the last two).
    #[arg(long, num_args = 2, value_names = ["I", "J"])]
    pub pair: Option<Vec<usize>>,
    /// Upper bound on the number of copies searched.
    #[arg(long = "max-M", default_value_t = DEFAULT_MAX_COPIES)]
    pub max_copies: usize,
}

#[derive(Debug, Args)]
pub struct PartitionsArgs {
    /// Number of parties.
    #[arg(long)]
    pub n: usize,
    /// Restrict to splits with exactly k blocks.
    #[arg(long)]
    pub k: Option<usize>,
    /// Print counts instead of listing splits.
    #[arg(long, conflicts_with = "pn")]
    pub count_only: bool,
    /// Print the number of integer partitions p(n).
    #[arg(long)]
    pub pn: bool,
    /// List block-size shapes with their split counts.
    #[arg(long, conflicts_with_all = ["pn", "count_only"])]
    pub shapes: bool,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Number of parties.
    #[arg(long)]
    pub n: usize,
    /// Emit the rational and its value as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct MixtureArgs {
    /// Number of parties.
    #[arg(long)]
    pub n: usize,
    /// Weight of the GHZ state, in [0, 1].
    #[arg(long)]
    pub x: f64,
    /// Emit the dense density matrix instead of parameters.
    #[arg(long)]
    pub density: bool,
}

fn read_input(path: &PathBuf) -> CliResult<Vec<u8>> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        std::fs::read(path)
            .map_err(|e| CliError::new(EXIT_GENERAL, format!("{}: {e}", path.display())))
    }
}

fn load_input(args: &InputArgs) -> CliResult<(Vec<u8>, LoadedState)> {
    if args.tol.is_nan() || args.tol < 0.0 {
        return Err(CliError::schema(format!("tolerance {} must be >= 0", args.tol)));
    }
    let bytes = read_input(&args.input)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::schema(format!("state file is not UTF-8: {e}")))?;
    let state = StateFile::parse(text)?.load(args.tol, args.renormalize)?;
    Ok((bytes, state))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::new(EXIT_GENERAL, e.to_string()))
}

fn party_name(p: usize) -> char {
    (b'A' + p as u8) as char
}

/// Three-party summary in the layout of the usual class table.
pub fn render_table(report: &ClassificationReport) -> Option<String> {
    let label = report.class_label.as_ref()?;
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} {:<5} {:>13}", "split", "PPT", "margin");
    for e in &report.bipartite {
        let mut ppt = if e.ppt { "yes" } else { "no" }.to_string();
        if e.boundary {
            ppt.push('*');
        }
        let _ = writeln!(out, "{:<10} {:<5} {:>13.6e}", e.split, ppt, e.margin);
    }
    let single = |p: usize| {
        report
            .bipartite
            .iter()
            .find(|e| e.split.block_parties().iter().any(|b| b[..] == [p]))
            .map(|e| e.ppt)
            .unwrap_or(false)
    };
    let positive: Vec<String> = (0..3)
        .filter(|&p| single(p))
        .map(|p| format!("T_{}", party_name(p)))
        .collect();
    let positive = match positive.len() {
        0 => "none".to_string(),
        3 => "all".to_string(),
        _ => positive.join(", "),
    };
    let _ = writeln!(out, "Positive operators: {positive}");
    let _ = writeln!(out, "Class: {}", label.class);
    let ghz = report.ghz(&[0, 1, 2]).unwrap_or(false);
    let pairs: Vec<String> = report
        .pair_distillable
        .iter()
        .filter(|e| e.distillable)
        .map(|e| {
            format!(
                "(Pair) |Phi+>_{}{}",
                party_name(e.parties[0] - 1),
                party_name(e.parties[1] - 1)
            )
        })
        .collect();
    let distill = if ghz {
        "(GHZ) |Psi_0+>_ABC".to_string()
    } else if let Some([a, b]) = label.activation_pair {
        format!(
            "Activate with |Phi+>_{}{}",
            party_name(a - 1),
            party_name(b - 1)
        )
    } else if pairs.is_empty() {
        "none".to_string()
    } else {
        pairs.join(", ")
    };
    let _ = writeln!(out, "Distillability: {distill}");
    let _ = writeln!(out, "GHZ distillable: {ghz}");
    let verdict = if report.fully_separable {
        "fully separable"
    } else {
        "entangled"
    };
    let _ = writeln!(out, "Verdict: {verdict}");
    let provenance = serde_json::to_value(report.provenance)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    let _ = writeln!(out, "Provenance: {provenance}");
    Some(out)
}

fn cmd_classify(args: &ClassifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let (bytes, state) = load_input(&args.input)?;
    let opts = ReportOptions {
        tol: args.input.tol,
        max_level: args.max_level,
        sweep_cap: args.sweep_cap,
    };
    let run = || match &state {
        LoadedState::Params(p) => classification_report_with(p, &opts),
        LoadedState::Density(rho) => sufficient_report_with(rho, &opts),
    };
    let report = match args.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::new(EXIT_GENERAL, e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    if args.table {
        if let Some(table) = render_table(&report) {
            out.write_all(table.as_bytes())?;
            return Ok(());
        }
        eprintln!("table output needs three parties; writing JSON");
    }
    let file = ReportFile {
        tool: "entclass",
        version: env!("CARGO_PKG_VERSION"),
        input_sha256: sha256_hex(&bytes),
        tolerance: args.input.tol,
        report,
    };
    out.write_all(to_json(&file)?.as_bytes())?;
    Ok(())
}

fn cmd_depolarize(args: &DepolarizeArgs, out: &mut dyn Write) -> CliResult<()> {
    let (_, state) = load_input(&args.input)?;
    let tol = args.input.tol.max(crate::ghz::PARAM_TOL);
    let params = match &state {
        LoadedState::Params(p) => crate::ghz::normalize_delta(p),
        LoadedState::Density(rho) => params_from_state_with_tol(rho, tol)?,
    };
    if args.verify {
        if let LoadedState::Density(rho) = &state {
            let before = ghz_offdiagonal_residual(rho)?;
            let after = ghz_offdiagonal_residual(&depolarize_channel(rho)?)?;
            eprintln!("GHZ off-diagonal residual: input {before:e}, after channel {after:e}");
        } else {
            eprintln!("GHZ off-diagonal residual: 0 (input is already GHZ-diagonal)");
        }
    }
    out.write_all(to_json(&StateFile::from_params(&params))?.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct PurifyReport {
    pair: [usize; 2],
    min_copies: usize,
    input_fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<PurificationStep>,
    success_probability: f64,
    fidelity: f64,
}

fn cmd_purify(args: &PurifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let (_, state) = load_input(&args.input)?;
    let p = match state {
        LoadedState::Params(p) => crate::ghz::normalize_delta(&p),
        LoadedState::Density(_) => {
            return Err(CliError::schema(
                "purify expects a rho_n_params state file (run depolarize first)",
            ))
        }
    };
    let n = p.n();
    let (i, j) = match args.pair.as_deref() {
        Some(&[a, b]) if a >= 1 && b >= 1 => (a - 1, b - 1),
        Some(_) => return Err(CliError::schema("--pair takes two 1-based party labels")),
        None => (n - 2, n - 1),
    };
    let tol = args.input.tol;
    let m = match min_copies_to_distill(&p, i, j, tol, args.max_copies)? {
        CopiesOutcome::Copies(m) => m,
        CopiesOutcome::NotDistillable { violated } => {
            let names: Vec<String> = violated.iter().map(|s| s.to_string()).collect();
            return Err(CliError::new(
                EXIT_NOT_DISTILLABLE,
                format!(
                    "pair (A{}, A{}) is not distillable: PPT across {}",
                    i + 1,
                    j + 1,
                    names.join(", ")
                ),
            ));
        }
        CopiesOutcome::LimitReached { max_copies } => {
            return Err(CliError::new(
                EXIT_GENERAL,
                format!("no M <= {max_copies} satisfies the distillation criterion"),
            ))
        }
    };
    let input_fidelity = pair_fidelity_after_projection(&p, i, j)?;
    let (step, fidelity, success) = if m >= 2 {
        let step = purification_step(&p, m)?;
        let f = pair_fidelity_after_projection(&step.output, i, j)?;
        let prob = step.success_probability;
        (Some(step), f, prob)
    } else {
        (None, input_fidelity, 1.0)
    };
    let report = PurifyReport {
        pair: [i + 1, j + 1],
        min_copies: m,
        input_fidelity,
        step,
        success_probability: success,
        fidelity,
    };
    out.write_all(to_json(&report)?.as_bytes())?;
    Ok(())
}

fn cmd_partitions(args: &PartitionsArgs, out: &mut dyn Write) -> CliResult<()> {
    let n = args.n;
    if args.pn {
        writeln!(out, "{}", partition_function(n))?;
        return Ok(());
    }
    if n == 0 {
        return Err(CliError::schema("--n must be at least 1"));
    }
    if let Some(k) = args.k {
        if k == 0 || k > n {
            return Err(CliError::schema(format!("--k must lie in 1..={n}")));
        }
    }
    let ks: Vec<usize> = match args.k {
        Some(k) => vec![k],
        None => (1..=n).collect(),
    };
    if args.count_only {
        let total = ks
            .iter()
            .fold(num_bigint::BigUint::from(0u32), |acc, &k| acc + stirling2(n, k));
        writeln!(out, "{total}")?;
        return Ok(());
    }
    if args.shapes {
        for shape in integer_partitions(n)
            .into_iter()
            .filter(|s| ks.contains(&s.k()))
        {
            writeln!(out, "{shape} {}", count_shape_configurations(&shape))?;
        }
        return Ok(());
    }
    for k in ks {
        for split in enumerate_k_splits(n, k)? {
            writeln!(out, "{split}")?;
        }
    }
    Ok(())
}

fn cmd_threshold(args: &ThresholdArgs, out: &mut dyn Write) -> CliResult<()> {
    let t = separability_threshold(args.n)?;
    if args.json {
        #[derive(Serialize)]
        struct Out {
            #[serde(flatten)]
            threshold: crate::mixture::Threshold,
            value: f64,
        }
        out.write_all(
            to_json(&Out {
                threshold: t,
                value: t.value(),
            })?
            .as_bytes(),
        )?;
    } else {
        writeln!(out, "{t}")?;
    }
    Ok(())
}

fn cmd_mixture(args: &MixtureArgs, out: &mut dyn Write) -> CliResult<()> {
    let x = MixtureWeight::new(args.x)?;
    let file = if args.density {
        StateFile::from_density(&ghz_mixture_state(args.n, x)?)
    } else {
        StateFile::from_params(&ghz_mixture_params(args.n, x)?)
    };
    out.write_all(to_json(&file)?.as_bytes())?;
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Classify(a) => cmd_classify(a, out),
        Command::Depolarize(a) => cmd_depolarize(a, out),
        Command::Purify(a) => cmd_purify(a, out),
        Command::Partitions(a) => cmd_partitions(a, out),
        Command::Threshold(a) => cmd_threshold(a, out),
        Command::Mixture(a) => cmd_mixture(a, out),
    }
}

/// Parses the process arguments, runs the command and maps errors to exit
/// codes.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("entclass: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
