//! Command-line front end.
//!
//! Every subcommand accepts `--config <path>` pointing at a flat JSON object
//! whose keys are flag names (`-` or `_` separated). Config values are
//! applied first and flags given on the command line override them.
//!
//! Exit codes: 0 success, 2 a fidelity or residual check failed, 64 usage or
//! invalid parameters, 65 regime violation, 70 internal error, 73 output
//! could not be written.
//!
//! `EITANGLE_SEED` is reserved for stochastic features and currently unused.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{build, catalog_fidelity, evolve_counterpart, scenario_time, CatalogState, StateLabel, CATALOG_K};
use crate::effective_model::evolve;
use crate::entanglement::{closed_form_concurrence, entanglement_entropy, generalized_concurrence, schmidt_spectrum};
use crate::fockspace::{coherent, normalize, tensor, Cutoffs, TruncatedMode, TwoModeState};
use crate::format::{csv_text, fmt_complex, fmt_f64, parse_complex};
use crate::full_model::{adiabatic_validation, EvolverConfig, FourModeCutoffs, ValidationConfig, ValidationReport};
use crate::revival::{coefficients, integer_k, verify_determining_identity, RationalTau, ZERO_CLAMP};
use crate::{Error, Result, C64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_REGIME: i32 = 65;
pub const EXIT_INTERNAL: i32 = 70;
pub const EXIT_CANT_CREATE: i32 = 73;

/// Catalog fidelities below `1 − FIDELITY_GATE` fail `reproduce`.
pub const FIDELITY_GATE: f64 = 1e-6;
/// Residuals at or above this fail `coeffs`.
pub const RESIDUAL_GATE: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "eitangle", version, about = "Atom-photon entanglement in a Lambda-EIT condensate")]
pub struct Cli {
    /// Worker threads (default: logical CPUs).
    #[arg(long, short = 'j', global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compare a catalog state with the evolution that produces it.
    #[command(args_override_self = true)]
    Reproduce(ReproduceArgs),
    /// Concurrence and entropy of the two-branch state over an amplitude grid.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Fractional-revival coefficient grid and its identity residual.
    #[command(args_override_self = true)]
    Coeffs(CoeffsArgs),
    /// Four-mode evolution against the effective two-mode model.
    #[command(args_override_self = true)]
    Validate(ValidateArgs),
    /// Write the amplitudes of a catalog or evolved state.
    #[command(args_override_self = true)]
    DumpState(DumpStateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Flat JSON file with default values for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    /// Catalog label, e.g. two_state_27.
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub beta: String,
    /// Photon cutoff, or `photon,atom`.
    #[arg(long)]
    pub cutoff: Option<String>,
    /// Evolve to this scaled time instead of the scenario's own.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<String>,
    /// Interaction parameter (default −1).
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Comma-separated values or `start:stop:count`.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub alpha: String,
    /// Comma-separated values or `start:stop:count`.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub beta: String,
    /// Fixed cutoffs; by default each point uses its own.
    #[arg(long)]
    pub cutoff: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct CoeffsArgs {
    #[arg(long, default_value_t = 1)]
    pub m: u64,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value = "-1", allow_hyphen_values = true)]
    pub k: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub beta: String,
    #[arg(long, default_value = "0.1", allow_hyphen_values = true)]
    pub g1: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub g2: String,
    /// Sets both detunings.
    #[arg(long, default_value_t = 50.0, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta2: Option<f64>,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda2: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda3: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda12: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda13: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda23: f64,
    /// `photon,b1,b2,b3`
    #[arg(long, default_value = "12,12,2,2")]
    pub cutoff: String,
    /// Final time (default 2π/λ₁).
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 65)]
    pub samples: usize,
    #[arg(long)]
    pub allow_off_resonance: bool,
    #[arg(long, default_value_t = 4000)]
    pub dense_limit: usize,
    #[arg(long, default_value_t = 200_000)]
    pub hard_limit: usize,
    /// Where to write the JSON summary (CSV mode; default stderr).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct DumpStateArgs {
    /// Catalog label; without it the evolved product state is written.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub beta: String,
    /// Scaled time, e.g. `0.3`, `pi/2`, `2pi/3`.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub tau: String,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub k: f64,
    #[arg(long)]
    pub cutoff: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

/// Failure of a subcommand with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::Domain(_) | Error::Precondition(_) => EXIT_USAGE,
            Error::Regime(_) => EXIT_REGIME,
            _ => EXIT_INTERNAL,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match parse(&argv) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_INTERNAL;
        }
    };
    match pool.install(|| dispatch(&cli.command)) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn clap_exit(e: clap::Error) -> i32 {
    let _ = e.print();
    match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
        _ => EXIT_USAGE,
    }
}

fn parse(argv: &[OsString]) -> std::result::Result<Cli, i32> {
    let Some(path) = config_path(argv) else {
        return Cli::try_parse_from(argv).map_err(clap_exit);
    };
    let tokens = match config_tokens(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return Err(EXIT_USAGE);
        }
    };
    let Some(at) = subcommand_position(argv) else {
        return Cli::try_parse_from(argv).map_err(clap_exit);
    };
    let mut merged: Vec<OsString> = argv[..=at].to_vec();
    merged.extend(tokens.into_iter().map(OsString::from));
    merged.extend(argv[at + 1..].iter().cloned());
    Cli::try_parse_from(&merged).map_err(clap_exit)
}

/// Value of the last `--config` flag, found before clap sees the arguments
/// so that the file can supply required flags.
fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut found = None;
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--" {
            break;
        }
        if a == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(v) = a.strip_prefix("--config=") {
            found = Some(PathBuf::from(v));
        }
    }
    found
}

fn subcommand_position(argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--jobs" || a == "-j" {
            i += 2;
        } else if a.starts_with("--jobs=") || (a.starts_with("-j") && a.len() > 2) {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

/// Turns a flat JSON object into `--flag value` tokens.
pub fn config_tokens(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let serde_json::Value::Object(map) = value else {
        return Err(Error::Parse(format!("{}: expected a JSON object", path.display())));
    };
    let mut tokens = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            return Err(Error::Parse("config files cannot nest".into()));
        }
        let scalar = |v: &serde_json::Value| -> Result<String> {
            match v {
                serde_json::Value::String(s) => Ok(s.clone()),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                _ => Err(Error::Parse(format!("config key {key:?} has an unsupported value"))),
            }
        };
        match &v {
            serde_json::Value::Bool(true) => tokens.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                let parts: Result<Vec<String>> = items.iter().map(scalar).collect();
                tokens.push(flag);
                tokens.push(parts?.join(","));
            }
            other => {
                tokens.push(flag);
                tokens.push(scalar(other)?);
            }
        }
    }
    Ok(tokens)
}

fn dispatch(cmd: &Command) -> CmdResult {
    match cmd {
        Command::Reproduce(a) => cmd_reproduce(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Coeffs(a) => cmd_coeffs(a),
        Command::Validate(a) => cmd_validate(a),
        Command::DumpState(a) => cmd_dump_state(a),
    }
}

fn emit(target: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    match target {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure { code: EXIT_CANT_CREATE, message: format!("cannot write {}: {e}", path.display()) }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure { code: EXIT_CANT_CREATE, message: format!("cannot write stdout: {e}") })
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> std::result::Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure { code: EXIT_INTERNAL, message: e.to_string() })?;
    s.push('\n');
    Ok(s)
}

fn parse_count(text: &str, what: &str) -> Result<usize> {
    text.trim().parse::<usize>().map_err(|_| Error::Parse(format!("invalid {what} {text:?}")))
}

/// `P` or `P,A`; a single value applies to both modes.
pub fn parse_cutoffs(text: &str) -> Result<Cutoffs> {
    let parts: Vec<&str> = text.split(',').collect();
    match parts.as_slice() {
        [p] => {
            let p = parse_count(p, "cutoff")?;
            Ok(Cutoffs::new(p, p))
        }
        [p, a] => Ok(Cutoffs::new(parse_count(p, "cutoff")?, parse_count(a, "cutoff")?)),
        _ => Err(Error::Parse(format!("invalid cutoff {text:?}"))),
    }
}

/// `photon,b1,b2,b3`
pub fn parse_four_mode_cutoffs(text: &str) -> Result<FourModeCutoffs> {
    let parts: Result<Vec<usize>> = text.split(',').map(|p| parse_count(p, "cutoff")).collect();
    match parts?.as_slice() {
        &[a, b, c, d] => Ok(FourModeCutoffs::new(a, b, c, d)),
        _ => Err(Error::Parse(format!("expected four cutoffs, got {text:?}"))),
    }
}

/// Comma-separated complex values, or `start:stop:count` evenly spaced on
/// the real line.
pub fn parse_grid(text: &str) -> Result<Vec<C64>> {
    let err = || Error::Parse(format!("invalid grid {text:?}"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, n] = parts.as_slice() else { return Err(err()) };
        let a: f64 = a.trim().parse().map_err(|_| err())?;
        let b: f64 = b.trim().parse().map_err(|_| err())?;
        let n = parse_count(n, "grid count")?;
        if n == 0 {
            return Err(err());
        }
        if n == 1 {
            return Ok(vec![C64::new(a, 0.0)]);
        }
        return Ok((0..n).map(|i| C64::new(a + (b - a) * i as f64 / (n - 1) as f64, 0.0)).collect());
    }
    let values: Result<Vec<C64>> = text.split(',').map(parse_complex).collect();
    let values = values?;
    if values.is_empty() {
        return Err(err());
    }
    Ok(values)
}

/// A real number, optionally written as a multiple or fraction of π:
/// `0.3`, `pi`, `-pi/2`, `2pi/3`, `2*pi/3`.
pub fn parse_tau(text: &str) -> Result<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || Error::Parse(format!("invalid time {text:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().map_err(|_| err())?),
        None => (s.clone(), 1.0),
    };
    let value = match num.strip_suffix("pi").or_else(|| num.strip_suffix('π')) {
        Some(coef) => {
            let coef = coef.strip_suffix('*').unwrap_or(coef);
            let c = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                _ => coef.parse::<f64>().map_err(|_| err())?,
            };
            c * std::f64::consts::PI
        }
        None => num.parse::<f64>().map_err(|_| err())?,
    };
    let v = value / den;
    if !v.is_finite() {
        return Err(err());
    }
    Ok(v)
}

fn parse_label(text: &str) -> std::result::Result<StateLabel, Failure> {
    text.parse::<StateLabel>().map_err(|_| {
        let known: Vec<&str> = StateLabel::ALL.iter().map(|l| l.as_str()).collect();
        usage(format!("unknown scenario {text:?}; expected one of: {}", known.join(", ")))
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct ReproduceRow {
    pub scenario: String,
    pub alpha: String,
    pub beta: String,
    pub tau: f64,
    pub k: f64,
    pub fidelity: f64,
    pub concurrence: Option<f64>,
    pub concurrence_method: Option<String>,
    pub entropy: Option<f64>,
}

pub fn reproduce_row(label: StateLabel, alpha: C64, beta: C64, cutoffs: Cutoffs) -> Result<ReproduceRow> {
    reproduce_row_at(label, alpha, beta, cutoffs, scenario_time(label), CATALOG_K as f64)
}

/// [`reproduce_row`] against the evolution at a chosen time and `K`.
pub fn reproduce_row_at(
    label: StateLabel,
    alpha: C64,
    beta: C64,
    cutoffs: Cutoffs,
    tau: f64,
    k: f64,
) -> Result<ReproduceRow> {
    let named = build(label, alpha, beta, cutoffs)?;
    let cp = evolve_counterpart(label, alpha, beta, cutoffs, tau, k)?;
    let fidelity = catalog_fidelity(&named, &cp)?;
    let (concurrence, method, entropy) = match &named.state {
        CatalogState::SingleMode(_) => (None, None, None),
        CatalogState::TwoMode(s) => {
            let s = normalize(s)?;
            let entropy = entanglement_entropy(&s)?;
            match label {
                StateLabel::TwoState27 | StateLabel::TwoState27Alt | StateLabel::Ys31 | StateLabel::Ys33 => {
                    (Some(closed_form_concurrence(alpha, beta)), Some("closed_form"), Some(entropy))
                }
                _ => (Some(generalized_concurrence(&s)?), Some("schmidt"), Some(entropy)),
            }
        }
    };
    Ok(ReproduceRow {
        scenario: label.as_str().to_string(),
        alpha: fmt_complex(alpha),
        beta: fmt_complex(beta),
        tau: cp.tau,
        k: cp.k,
        fidelity,
        concurrence,
        concurrence_method: method.map(str::to_string),
        entropy,
    })
}

fn cmd_reproduce(a: &ReproduceArgs) -> CmdResult {
    let label = parse_label(&a.scenario)?;
    let alpha = parse_complex(&a.alpha)?;
    let beta = parse_complex(&a.beta)?;
    let cutoffs = match &a.cutoff {
        Some(c) => parse_cutoffs(c)?,
        None => Cutoffs::for_amplitudes(alpha, beta),
    };
    let tau = a.tau.as_deref().map(parse_tau).transpose()?.unwrap_or_else(|| scenario_time(label));
    let row = reproduce_row_at(label, alpha, beta, cutoffs, tau, a.k.unwrap_or(CATALOG_K as f64))?;
    let text = match a.common.format {
        Format::Json => to_json(&row)?,
        Format::Csv => csv_text(
            None,
            &["scenario", "alpha", "beta", "tau", "k", "fidelity", "concurrence", "concurrence_method", "entropy"],
            [vec![
                row.scenario.clone(),
                row.alpha.clone(),
                row.beta.clone(),
                fmt_f64(row.tau),
                fmt_f64(row.k),
                fmt_f64(row.fidelity),
                opt(row.concurrence),
                row.concurrence_method.clone().unwrap_or_default(),
                opt(row.entropy),
            ]],
        )?,
    };
    emit(a.common.out.as_deref(), &text)?;
    if row.fidelity < 1.0 - FIDELITY_GATE {
        eprintln!("fidelity {} is below 1 - {FIDELITY_GATE:e}", fmt_f64(row.fidelity));
        return Ok(EXIT_CHECK_FAILED);
    }
    Ok(EXIT_OK)
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: String,
    pub beta: String,
    pub concurrence_closed: f64,
    pub concurrence_schmidt: f64,
    pub entropy: f64,
}

/// Closed-form and numerical entanglement of the state reached at τ = π/2,
/// K = −1 from `|α⟩|β⟩`.
pub fn sweep_row(alpha: C64, beta: C64, cutoffs: Option<Cutoffs>) -> Result<SweepRow> {
    let c = cutoffs.unwrap_or_else(|| Cutoffs::for_amplitudes(alpha, beta));
    let product = normalize(&tensor(&coherent(alpha, c.photon), &coherent(beta, c.atom)))?;
    let evolved = normalize(&evolve(&product, std::f64::consts::FRAC_PI_2, -1.0))?;
    let sp = schmidt_spectrum(&evolved)?;
    let schmidt = 2.0 * (sp[0] * sp.get(1).copied().unwrap_or(0.0)).sqrt();
    Ok(SweepRow {
        alpha: fmt_complex(alpha),
        beta: fmt_complex(beta),
        concurrence_closed: closed_form_concurrence(alpha, beta),
        concurrence_schmidt: schmidt,
        entropy: entanglement_entropy(&evolved)?,
    })
}

fn cmd_sweep(a: &SweepArgs) -> CmdResult {
    let alphas = parse_grid(&a.alpha)?;
    let betas = parse_grid(&a.beta)?;
    let cutoffs = a.cutoff.as_deref().map(parse_cutoffs).transpose()?;
    let points: Vec<(C64, C64)> = alphas.iter().flat_map(|&x| betas.iter().map(move |&y| (x, y))).collect();
    let rows: Result<Vec<SweepRow>> = points.par_iter().map(|&(x, y)| sweep_row(x, y, cutoffs)).collect();
    let rows = rows?;
    let text = match a.common.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => csv_text(
            None,
            &["alpha", "beta", "concurrence_closed", "concurrence_schmidt", "entropy"],
            rows.iter().map(|r| {
                vec![
                    r.alpha.clone(),
                    r.beta.clone(),
                    fmt_f64(r.concurrence_closed),
                    fmt_f64(r.concurrence_schmidt),
                    fmt_f64(r.entropy),
                ]
            }),
        )?,
    };
    emit(a.common.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct CoefficientEntry {
    pub r: usize,
    pub s: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub m: u64,
    pub n: u64,
    pub k: i64,
    pub residual: f64,
    pub coefficients: Vec<CoefficientEntry>,
}

/// Coefficient grid with real and imaginary parts below [`ZERO_CLAMP`]
/// written as zero.
pub fn coefficient_table(m: u64, n: u64, k: i64) -> Result<CoefficientTable> {
    if m == 0 || n == 0 || m.gcd(&n) != 1 {
        return Err(Error::Precondition(format!("M/N = {m}/{n} is not a reduced positive fraction")));
    }
    let tau = RationalTau::new(m, n)?;
    let grid = coefficients(tau, k)?;
    let residual = verify_determining_identity(&grid, tau, k)?;
    let size = grid.n();
    let mut entries = Vec::with_capacity(size * size);
    for r in 1..=size {
        for s in 1..=size {
            let c = grid.get(r, s);
            let clamp = |x: f64| if x.abs() < ZERO_CLAMP { 0.0 } else { x };
            entries.push(CoefficientEntry { r, s, re: clamp(c.re), im: clamp(c.im) });
        }
    }
    Ok(CoefficientTable { m, n, k, residual, coefficients: entries })
}

fn cmd_coeffs(a: &CoeffsArgs) -> CmdResult {
    let k_real: f64 = a.k.trim().parse().map_err(|_| usage(format!("invalid K {:?}", a.k)))?;
    let k = integer_k(k_real)?;
    let table = coefficient_table(a.m, a.n, k)?;
    let text = match a.common.format {
        Format::Json => to_json(&table)?,
        Format::Csv => csv_text(
            None,
            &["r", "s", "re", "im", "residual"],
            table
                .coefficients
                .iter()
                .map(|e| vec![e.r.to_string(), e.s.to_string(), fmt_f64(e.re), fmt_f64(e.im), fmt_f64(table.residual)]),
        )?,
    };
    emit(a.common.out.as_deref(), &text)?;
    if table.residual >= RESIDUAL_GATE {
        eprintln!("identity residual {} exceeds {RESIDUAL_GATE:e}", fmt_f64(table.residual));
        return Ok(EXIT_CHECK_FAILED);
    }
    Ok(EXIT_OK)
}

pub fn validation_config(a: &ValidateArgs) -> Result<ValidationConfig> {
    let mut params =
        crate::full_model::FullModelParams::ideal_eit(parse_complex(&a.g1)?, parse_complex(&a.g2)?, a.delta, a.lambda1);
    params.delta1 = a.delta1.unwrap_or(a.delta);
    params.delta2 = a.delta2.unwrap_or(a.delta);
    params.lambda = [a.lambda1, a.lambda2, a.lambda3];
    params.lambda_cross = [a.lambda12, a.lambda13, a.lambda23];
    if a.lambda1 == 0.0 {
        return Err(Error::Precondition("lambda1 must be nonzero".into()));
    }
    Ok(ValidationConfig {
        alpha: parse_complex(&a.alpha)?,
        beta: parse_complex(&a.beta)?,
        params,
        cutoffs: parse_four_mode_cutoffs(&a.cutoff)?,
        t_max: a.t_max.unwrap_or(2.0 * std::f64::consts::PI / a.lambda1.abs()),
        samples: a.samples,
        allow_off_resonance: a.allow_off_resonance,
        evolver: EvolverConfig { dense_limit: a.dense_limit, hard_limit: a.hard_limit, ..EvolverConfig::default() },
    })
}

pub fn validation_csv(report: &ValidationReport) -> Result<String> {
    csv_text(
        None,
        &["t", "fidelity", "leak_n2", "leak_n3", "norm"],
        report
            .samples
            .iter()
            .map(|x| vec![fmt_f64(x.t), fmt_f64(x.fidelity), fmt_f64(x.leak_n2), fmt_f64(x.leak_n3), fmt_f64(x.norm)]),
    )
}

fn cmd_validate(a: &ValidateArgs) -> CmdResult {
    let config = validation_config(a)?;
    let report = adiabatic_validation(&config)?;
    match a.common.format {
        Format::Json => emit(a.common.out.as_deref(), &to_json(&report)?)?,
        Format::Csv => {
            emit(a.common.out.as_deref(), &validation_csv(&report)?)?;
            let summary = to_json(&report.summary)?;
            match &a.summary {
                Some(path) => emit(Some(path), &summary)?,
                None => eprint!("{summary}"),
            }
        }
    }
    Ok(EXIT_OK)
}

fn single_mode_csv(m: &TruncatedMode) -> Result<String> {
    csv_text(
        Some(&format!("cutoff={}", m.cutoff())),
        &["n", "re", "im"],
        m.amplitudes().iter().enumerate().map(|(n, a)| vec![n.to_string(), fmt_f64(a.re), fmt_f64(a.im)]),
    )
}

#[derive(Serialize)]
struct DumpJson {
    photon_cutoff: Option<usize>,
    atom_cutoff: Option<usize>,
    cutoff: Option<usize>,
    /// `[n, m, re, im]` or `[n, re, im]`
    amplitudes: Vec<Vec<f64>>,
}

fn cmd_dump_state(a: &DumpStateArgs) -> CmdResult {
    let alpha = parse_complex(&a.alpha)?;
    let beta = parse_complex(&a.beta)?;
    let cutoffs = match &a.cutoff {
        Some(c) => parse_cutoffs(c)?,
        None => Cutoffs::for_amplitudes(alpha, beta),
    };
    let state = match &a.scenario {
        Some(label) => build(parse_label(label)?, alpha, beta, cutoffs)?.state,
        None => {
            let tau = parse_tau(&a.tau)?;
            let product = normalize(&tensor(&coherent(alpha, cutoffs.photon), &coherent(beta, cutoffs.atom)))?;
            CatalogState::TwoMode(evolve(&product, tau, a.k))
        }
    };
    let text = match (&state, a.common.format) {
        (CatalogState::TwoMode(s), Format::Csv) => {
            let mut buf = Vec::new();
            s.write_csv(&mut buf)?;
            String::from_utf8(buf).map_err(|e| Failure { code: EXIT_INTERNAL, message: e.to_string() })?
        }
        (CatalogState::SingleMode(m), Format::Csv) => single_mode_csv(m)?,
        (CatalogState::TwoMode(s), Format::Json) => to_json(&two_mode_json(s))?,
        (CatalogState::SingleMode(m), Format::Json) => to_json(&DumpJson {
            photon_cutoff: None,
            atom_cutoff: None,
            cutoff: Some(m.cutoff()),
            amplitudes: m.amplitudes().iter().enumerate().map(|(n, z)| vec![n as f64, z.re, z.im]).collect(),
        })?,
    };
    emit(a.common.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn two_mode_json(s: &TwoModeState) -> DumpJson {
    let mut amplitudes = Vec::new();
    for n in 0..=s.photon_cutoff() {
        for m in 0..=s.atom_cutoff() {
            let z = s.get(n, m);
            amplitudes.push(vec![n as f64, m as f64, z.re, z.im]);
        }
    }
    DumpJson { photon_cutoff: Some(s.photon_cutoff()), atom_cutoff: Some(s.atom_cutoff()), cutoff: None, amplitudes }
}
