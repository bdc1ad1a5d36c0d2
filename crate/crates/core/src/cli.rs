//! The `isolab` command line: one subcommand per pipeline stage, JSON in and
//! JSON out.
//!
//! Every report carries the tolerances and seed that produced it. Exit codes
//! are 0 when a verdict was produced, 2 for malformed input and 3 for
//! numerical aborts.

use crate::braid::{orbit_bfs, OrbitVerdict, RepTuple};
use crate::connection::{
    check_reduced, eul, is_mild, local_rh_residues, pdl_reduce, GermConnection, MildVerdict, ReducedConnection,
    Reduction,
};
use crate::error::{Error, Result};
use crate::garnier::{
    branch_probe, companion_extract, companion_monodromy, flow_with_trajectory, normalized_form, BasisCoefficients,
    BranchVerdict, CompanionMonodromy, FlowPath, GarnierConfig, PhasePoint, RationalPotential, TrajectorySample,
};
use crate::linalg::CMatrix;
use crate::tol::{Tolerances, DEFAULT_SEED};
use crate::C64;
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{Read, Write as _};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Default orbit cap.
pub const DEFAULT_ORBIT_CAP: usize = 10_000;
/// Default branch cap.
pub const DEFAULT_BRANCH_CAP: usize = 64;
pub const DEFAULT_DEPTH: usize = 10;

#[derive(Debug, Parser)]
#[command(name = "isolab", version, about = "Braid orbits, logarithmic connections and Garnier system numerics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Input JSON: a file path, `-` for stdin, or an inline JSON document.
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// Where to write the JSON report (stdout when omitted).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Tolerance overrides as JSON (inline or a file path); missing fields
    /// keep their defaults.
    #[arg(long, global = true)]
    pub tol: Option<String>,
    /// Orbit or branch cap.
    #[arg(long, global = true)]
    pub cap: Option<usize>,
    /// Maximal word length for `branch-probe`.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Seed for randomized internals.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write the `garnier-flow` trajectory as CSV to this path.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Pure-braid orbit of a tuple (RepTuple JSON).
    Orbit,
    /// Reduced normal form of a germ (GermConnection JSON).
    Reduce,
    /// Euler model of a germ, reducing it first when needed.
    Eul,
    /// Mildness verdict for a germ, reducing it first when needed.
    Mild,
    /// Normalized logarithms of commuting monodromies.
    LocalRh,
    /// Integrate the Garnier system along a path.
    GarnierFlow,
    /// Monodromy of the companion system at a phase point.
    Monodromy,
    /// Count branches of a solution under continuation around t-loops.
    BranchProbe,
    /// Normalized form followed by coefficient extraction.
    Roundtrip,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Orbit => "orbit",
            Command::Reduce => "reduce",
            Command::Eul => "eul",
            Command::Mild => "mild",
            Command::LocalRh => "local-rh",
            Command::GarnierFlow => "garnier-flow",
            Command::Monodromy => "monodromy",
            Command::BranchProbe => "branch-probe",
            Command::Roundtrip => "roundtrip",
        }
    }

    pub const ALL: [Command; 9] = [
        Command::Orbit,
        Command::Reduce,
        Command::Eul,
        Command::Mild,
        Command::LocalRh,
        Command::GarnierFlow,
        Command::Monodromy,
        Command::BranchProbe,
        Command::Roundtrip,
    ];

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Envelope shared by every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub command: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(flatten)]
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub error: ErrorRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceOutput {
    #[serde(flatten)]
    pub reduction: Reduction,
    /// Result of re-checking the output form.
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulOutput {
    /// Whether the input had to be brought to reduced form first.
    pub normalized: bool,
    pub reduced: ReducedConnection,
    #[serde(with = "crate::json::matrix")]
    pub euler: CMatrix,
    pub shift: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MildOutput {
    pub normalized: bool,
    #[serde(flatten)]
    pub verdict: MildVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRhInput {
    #[serde(with = "crate::json::matrix_vec")]
    pub monodromies: Vec<CMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRhOutput {
    #[serde(with = "crate::json::matrix_vec")]
    pub residues: Vec<CMatrix>,
}

/// Input of the Garnier subcommands. `path` is only read by
/// `garnier-flow`, `theta_n` only by `roundtrip`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarnierInput {
    pub config: GarnierConfig,
    pub phase: PhasePoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<FlowPath>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_complex")]
    pub theta_n: Option<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOutput {
    pub end: PhasePoint,
    pub steps: usize,
    pub arclength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripOutput {
    pub recovered: BasisCoefficients,
    /// Largest deviation of the recovered `(a, L, ν)` from the input data.
    pub max_error: f64,
}

mod opt_complex {
    use crate::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Option<C64>, s: S) -> Result<S::Ok, S::Error> {
        z.map(|z| [z.re, z.im]).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<C64>, D::Error> {
        Ok(Option::<[f64; 2]>::deserialize(d)?.map(|[re, im]| C64::new(re, im)))
    }
}

/// Settings shared by all subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub tol: Tolerances,
    pub seed: u64,
    pub cap: Option<usize>,
    pub depth: Option<usize>,
    pub csv: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            seed: DEFAULT_SEED,
            cap: None,
            depth: None,
            csv: None,
        }
    }
}

fn parse<T: DeserializeOwned>(input: &str) -> Result<T> {
    serde_json::from_str(input).map_err(|e| Error::Invalid(format!("malformed input: {e}")))
}

fn report<T: Serialize>(command: Command, opts: &RunOptions, cap: Option<usize>, depth: Option<usize>, result: T) -> Result<String> {
    let r = Report {
        command: command.name().to_string(),
        seed: opts.seed,
        tolerances: opts.tol,
        cap,
        depth,
        result,
    };
    Ok(serde_json::to_string(&r)?)
}

/// Brings a germ to reduced form unless it already is.
fn reduced_form(germ: GermConnection, tol: &Tolerances) -> Result<(ReducedConnection, bool)> {
    if check_reduced(&germ, tol)?.reduced {
        Ok((ReducedConnection::new(germ, tol)?, false))
    } else {
        Ok((pdl_reduce(&germ, tol)?.reduced, true))
    }
}

fn trajectory_csv(samples: &[TrajectorySample]) -> String {
    let mut out = String::from("arclength");
    if let Some(first) = samples.first() {
        for (name, len) in [("t", first.t.len()), ("lambda", first.lambda.len()), ("nu", first.nu.len())] {
            for i in 1..=len {
                let _ = write!(out, ",re_{name}_{i},im_{name}_{i}");
            }
        }
    }
    out.push('\n');
    for s in samples {
        let _ = write!(out, "{:e}", s.arclength);
        for z in s.t.iter().chain(&s.lambda).chain(&s.nu) {
            let _ = write!(out, ",{:e},{:e}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

/// Runs one subcommand on an input document and returns the JSON report.
pub fn dispatch(command: Command, input: &str, opts: &RunOptions) -> Result<String> {
    let tol = &opts.tol;
    match command {
        Command::Orbit => {
            let tuple: RepTuple = parse(input)?;
            let cap = opts.cap.unwrap_or(DEFAULT_ORBIT_CAP);
            let verdict: OrbitVerdict = orbit_bfs(&tuple, cap, tol, opts.seed)?;
            report(command, opts, Some(cap), None, verdict)
        }
        Command::Reduce => {
            let germ: GermConnection = parse(input)?;
            let reduction = pdl_reduce(&germ, tol)?;
            let verified = check_reduced(&reduction.reduced.germ, tol)?.reduced;
            report(command, opts, None, None, ReduceOutput { reduction, verified })
        }
        Command::Eul => {
            let germ: GermConnection = parse(input)?;
            let (reduced, normalized) = reduced_form(germ, tol)?;
            let out = EulOutput {
                normalized,
                euler: eul(&reduced, tol),
                shift: reduced.floor_shift(tol),
                reduced,
            };
            report(command, opts, None, None, out)
        }
        Command::Mild => {
            let germ: GermConnection = parse(input)?;
            let (reduced, normalized) = reduced_form(germ, tol)?;
            let verdict = is_mild(&reduced, tol)?;
            report(command, opts, None, None, MildOutput { normalized, verdict })
        }
        Command::LocalRh => {
            let req: LocalRhInput = parse(input)?;
            let residues = local_rh_residues(&req.monodromies, tol)?;
            report(command, opts, None, None, LocalRhOutput { residues })
        }
        Command::GarnierFlow => {
            let req: GarnierInput = parse(input)?;
            req.config.validate()?;
            let path = req
                .path
                .ok_or_else(|| Error::Invalid("garnier-flow needs a \"path\"".into()))?;
            let (end, samples) = flow_with_trajectory(&req.config, &req.phase, &path, tol)?;
            if let Some(csv) = &opts.csv {
                std::fs::write(csv, trajectory_csv(&samples))?;
            }
            let out = FlowOutput {
                end,
                steps: samples.len(),
                arclength: samples.last().map_or(0.0, |s| s.arclength),
            };
            report(command, opts, None, None, out)
        }
        Command::Monodromy => {
            let req: GarnierInput = parse(input)?;
            req.config.validate()?;
            req.phase.validate(&req.config, tol)?;
            let pot = RationalPotential::new(&req.config, &req.phase, tol)?;
            let mono: CompanionMonodromy = companion_monodromy(&pot, tol)?;
            report(command, opts, None, None, mono)
        }
        Command::BranchProbe => {
            let req: GarnierInput = parse(input)?;
            req.config.validate()?;
            let cap = opts.cap.unwrap_or(DEFAULT_BRANCH_CAP);
            let depth = opts.depth.unwrap_or(DEFAULT_DEPTH);
            let verdict: BranchVerdict = branch_probe(&req.config, &req.phase, depth, cap, tol)?;
            report(command, opts, Some(cap), Some(depth), verdict)
        }
        Command::Roundtrip => {
            let req: GarnierInput = parse(input)?;
            req.config.validate()?;
            let triple = normalized_form(&req.config, &req.phase, req.theta_n, tol)?;
            let recovered = companion_extract(&triple, tol)?;
            let pot = RationalPotential::new(&req.config, &req.phase, tol)?;
            let max_error = pot
                .a
                .iter()
                .zip(&recovered.a)
                .chain(pot.l.iter().zip(&recovered.l))
                .chain(pot.nu.iter().zip(&recovered.nu))
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            report(command, opts, None, None, RoundtripOutput { recovered, max_error })
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Dimension(_) => "dimension",
        Error::Invalid(_) => "invalid",
        Error::IndexOutOfRange { .. } => "index_out_of_range",
        Error::Singular { .. } => "singular",
        Error::BranchCut { .. } => "branch_cut",
        Error::IntertwinerNotConjugator => "intertwiner_not_conjugator",
        Error::NotCommuting { .. } => "not_commuting",
        Error::RaiseDegree { .. } => "raise_degree",
        Error::NotReduced(_) => "not_reduced",
        Error::Conditioning(_) => "conditioning",
        Error::Degeneracy { .. } => "degeneracy",
        Error::StepUnderflow { .. } => "step_underflow",
        Error::Inconsistent(_) => "inconsistent",
        Error::Json(_) => "json",
        Error::Io(_) => "io",
    }
}

/// Exit code for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

/// JSON record describing a failed run.
pub fn error_report(command: Command, opts: &RunOptions, e: &Error) -> String {
    let r = Report {
        command: command.name().to_string(),
        seed: opts.seed,
        tolerances: opts.tol,
        cap: opts.cap,
        depth: opts.depth,
        result: ErrorReport {
            error: ErrorRecord {
                kind: error_kind(e).to_string(),
                message: e.to_string(),
            },
        },
    };
    serde_json::to_string(&r).expect("error reports serialize")
}

/// Reads a JSON argument that is either inline, `-` for stdin, or a path.
fn read_document(arg: &str) -> Result<String> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Ok(arg.to_string());
    }
    if arg == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(arg).map_err(|e| Error::Io(format!("{arg}: {e}")))
}

fn options(cli: &Cli) -> Result<RunOptions> {
    let tol = match &cli.tol {
        Some(arg) => parse::<Tolerances>(&read_document(arg)?)?,
        None => Tolerances::default(),
    };
    Ok(RunOptions {
        tol,
        seed: cli.seed.unwrap_or(DEFAULT_SEED),
        cap: cli.cap,
        depth: cli.depth,
        csv: cli.csv.clone(),
    })
}

fn configure_threads() {
    if let Some(n) = std::env::var("ISOLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.output {
        Some(path) => std::fs::write(path, format!("{text}\n"))?,
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}

/// Entry point of the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let opts = match options(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("isolab: {e}");
            return EXIT_INVALID;
        }
    };
    let outcome = cli
        .input
        .as_deref()
        .ok_or_else(|| Error::Invalid("--input is required".into()))
        .and_then(read_document)
        .and_then(|doc| dispatch(cli.command, &doc, &opts));
    match outcome {
        Ok(text) => match emit(&cli, &text) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("isolab: {e}");
                EXIT_INVALID
            }
        },
        Err(e) => {
            eprintln!("isolab: {e}");
            let _ = emit(&cli, &error_report(cli.command, &opts, &e));
            exit_code(&e)
        }
    }
}
