//! Command-line front end for `qhall`.
//!
//! Every subcommand takes long options only. `--config FILE` reads
//! `key = value` lines naming the same options; flags given on the command
//! line win over the file.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod output;

pub use output::Echo;

#[derive(Debug, Parser)]
#[command(
    name = "qhall",
    version,
    about = "Quantum Hall topology on the Hofstadter lattice"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads for grid sweeps; outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// File of `key = value` lines for the subcommand's options.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band energies over the magnetic Brillouin zone.
    Spectrum(SpectrumArgs),
    /// Open gaps with their Diophantine labels and mid-gap energies.
    Gaps(GapsArgs),
    /// Chern number of one band, or of all bands below a gap.
    Chern(ChernArgs),
    /// Diophantine label of a gap, or the Hall conductance at a chemical potential.
    Label(LabelArgs),
    /// Phase diagram image and data.
    Butterfly(ButterflyArgs),
    /// Chern numbers and transition-phase winding of a spin in a field.
    Monopole(MonopoleArgs),
    /// Parallel-transport holonomy around a circle of latitude.
    Holonomy(HolonomyArgs),
    /// Transported quantity of a slowly driven spin against the curvature prediction.
    PumpCheck(PumpArgs),
    /// Finite-volume index of a Fermi projector.
    Index(IndexArgs),
    /// Index over a list of sizes or an ensemble of disorder seeds.
    IndexScan(IndexScanArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Gaps(_) => "gaps",
            Command::Chern(_) => "chern",
            Command::Label(_) => "label",
            Command::Butterfly(_) => "butterfly",
            Command::Monopole(_) => "monopole",
            Command::Holonomy(_) => "holonomy",
            Command::PumpCheck(_) => "pump-check",
            Command::Index(_) => "index",
            Command::IndexScan(_) => "index-scan",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FluxArgs {
    /// Flux numerator.
    #[arg(long, allow_hyphen_values = true)]
    pub p: i64,
    /// Flux denominator.
    #[arg(long)]
    pub q: i64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub flux: FluxArgs,
    /// Mesh points per direction.
    #[arg(long, default_value_t = 64)]
    pub nk: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GapsArgs {
    #[command(flatten)]
    pub flux: FluxArgs,
    #[arg(long, default_value_t = 64)]
    pub mesh: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group = clap::ArgGroup::new("selector").required(true).args(["band", "gap"]))]
pub struct ChernArgs {
    #[command(flatten)]
    pub flux: FluxArgs,
    /// Band number, 1 = lowest.
    #[arg(long)]
    pub band: Option<usize>,
    /// Gap number r: the r lowest bands are filled.
    #[arg(long)]
    pub gap: Option<usize>,
    #[arg(long, default_value_t = 32)]
    pub mesh: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    TightBinding,
    SplitLandau,
}

impl From<ModeArg> for qhall::butterfly::Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::TightBinding => qhall::butterfly::Mode::TightBinding,
            ModeArg::SplitLandau => qhall::butterfly::Mode::SplitLandau,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group = clap::ArgGroup::new("selector").required(true).args(["r", "mu"]))]
pub struct LabelArgs {
    /// Flux `p/q`; in split-landau mode, the flux ratio whose inverse is the tight-binding flux.
    #[command(flatten)]
    pub flux: FluxArgs,
    /// Gap number.
    #[arg(long)]
    pub r: Option<i64>,
    /// Chemical potential; exits with status 1 if it lies in a band.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::TightBinding)]
    pub mode: ModeArg,
    /// Mesh for gap detection when `--mu` is given.
    #[arg(long, default_value_t = 32)]
    pub mesh: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ButterflyArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::TightBinding)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 12)]
    pub qmax: i64,
    #[arg(long, default_value_t = 512)]
    pub mu_steps: usize,
    #[arg(long, default_value_t = -4.2, allow_hyphen_values = true)]
    pub mu_min: f64,
    #[arg(long, default_value_t = 4.2, allow_hyphen_values = true)]
    pub mu_max: f64,
    /// Lowest flux row (tight-binding flux, `Phi_0/Phi` in split-landau mode).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub flux_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub flux_max: f64,
    /// Momentum mesh for gap detection.
    #[arg(long, default_value_t = 32)]
    pub mesh: usize,
    /// Image width in pixels; defaults to the number of mu steps.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long, default_value_t = 512)]
    pub height: usize,
    /// PPM image.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// CSV of every cell.
    #[arg(long)]
    #[serde(skip)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MonopoleArgs {
    #[arg(long, default_value_t = 24)]
    pub n_theta: usize,
    #[arg(long, default_value_t = 48)]
    pub n_phi: usize,
    /// Latitude of the winding loop, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub latitude: f64,
    #[arg(long, default_value_t = 64)]
    pub winding_steps: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HolonomyArgs {
    /// Latitude, degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub latitude: f64,
    #[arg(long, default_value_t = 100_000)]
    pub steps: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PumpArgs {
    /// Angular speed of the field's polar angle.
    #[arg(long)]
    pub rate: f64,
    /// Azimuth of the field, held fixed, radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta0: f64,
    /// Fraction of a full cycle to drive.
    #[arg(long, default_value_t = 0.25)]
    pub fraction: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Open,
    Periodic,
}

impl From<BoundaryArg> for qhall::fredholm::Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Open => qhall::fredholm::Boundary::Open,
            BoundaryArg::Periodic => qhall::fredholm::Boundary::Periodic,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IndexArgs {
    /// Linear size of the sample.
    #[arg(long = "L")]
    pub l: usize,
    #[command(flatten)]
    pub flux: FluxArgs,
    /// Fermi energy.
    #[arg(long, allow_hyphen_values = true)]
    pub ef: f64,
    /// Width of the uniform on-site disorder.
    #[arg(long, default_value_t = 0.0)]
    pub disorder: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Open)]
    pub boundary: BoundaryArg,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IndexScanArgs {
    /// Comma-separated sizes, strictly ascending.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[command(flatten)]
    pub flux: FluxArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub ef: f64,
    #[arg(long, default_value_t = 0.0)]
    pub disorder: f64,
    /// First disorder seed.
    #[arg(long)]
    pub seed: u64,
    /// Number of consecutive seeds per size.
    #[arg(long, default_value_t = 1)]
    pub samples: u64,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Open)]
    pub boundary: BoundaryArg,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] qhall::Error),
    #[error("{0}")]
    Failed(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use qhall::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(
                E::ZeroDenominator
                | E::InvalidFlux(_)
                | E::InvalidMomentum { .. }
                | E::InvalidMesh(_)
                | E::InvalidArgument(_)
                | E::InvalidGapIndex { .. }
                | E::InvalidModel(_)
                | E::CenterOnSite { .. },
            ) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Parse `key = value` lines into long options. Blank lines and lines
/// starting with `#` are skipped; an empty value gives a bare flag.
pub fn config_to_args(text: &str) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected key = value", n + 1))
        })?;
        let key = key.trim();
        if key.is_empty() || key.starts_with('-') || key == "config" {
            return Err(CliError::Usage(format!(
                "config line {}: bad key {key:?}",
                n + 1
            )));
        }
        out.push(OsString::from(format!("--{key}")));
        let value = value.trim();
        if !value.is_empty() {
            out.push(OsString::from(value));
        }
    }
    Ok(out)
}

/// Splice config-file options in right after the subcommand so later
/// command-line flags override them.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let pos = argv.iter().position(|a| a == "--config");
    let inline = argv
        .iter()
        .position(|a| a.to_str().is_some_and(|s| s.starts_with("--config=")));
    let (idx, path, consumed) = match (pos, inline) {
        (Some(i), _) => match argv.get(i + 1) {
            Some(p) => (i, PathBuf::from(p), 2),
            None => return Err(CliError::Usage("--config needs a file".into())),
        },
        (None, Some(i)) => {
            let s = argv[i].to_str().unwrap_or_default();
            (i, PathBuf::from(&s["--config=".len()..]), 1)
        }
        (None, None) => return Ok(argv),
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let extra = config_to_args(&text)?;
    let mut rest: Vec<OsString> = argv[..idx].to_vec();
    rest.extend_from_slice(&argv[idx + consumed..]);
    // first token that is not an option or an option's value is the subcommand
    let mut sub = None;
    let mut i = 1;
    while i < rest.len() {
        let a = rest[i].to_string_lossy();
        if a == "--threads" {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            sub = Some(i);
            break;
        }
    }
    let Some(sub) = sub else {
        return Ok(rest);
    };
    let mut out = rest[..=sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&rest[sub + 1..]);
    Ok(out)
}

/// Run with `argv[0]` the program name; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    faer::set_global_parallelism(faer::Par::Seq);
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| commands::dispatch(&cli.command))
}
