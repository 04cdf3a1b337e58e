mod commands;
mod failure;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::failure::Failure;
use crate::manifest::{digest_file, write_atomic, RunManifest, MANIFEST_FILE};

#[derive(Parser, Debug)]
#[command(name = "arithdyn", version, about = "Arithmetic and complex dynamics of birational maps of projective space")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Map specification JSON (certify and density take a Hénon configuration).
    #[arg(long, global = true)]
    pub map: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Directory for artifacts and the run manifest.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Check the hypotheses of a birational pair.
    Validate(ValidateArgs),
    /// Effective degree sequence deg f^n.
    Degrees(DegreesArgs),
    /// p-adic algebraic stability certificate for a Hénon configuration.
    Certify(CertifyArgs),
    /// Growth inequalities along the backward indeterminacy orbit.
    Density(DensityArgs),
    /// Naive logarithmic height of a rational point.
    Height(HeightArgs),
    /// Canonical height estimates with tail bounds.
    Hcanonical(HcanonicalArgs),
    /// Scan for the constant in the Lee height inequality.
    Lee(LeeArgs),
    /// Check the h′ recursion on random orbit points.
    Hprime(HprimeArgs),
    /// Green function partial sums along an orbit.
    Green(GreenArgs),
    /// Energy condition partial sums.
    Energy(EnergyArgs),
    /// Grid approximation of the mixed measure on ℙ².
    Mugrid(MugridArgs),
    /// Numeric periodic points of period dividing n.
    Periodic(PeriodicArgs),
    /// Discrepancies between empirical periodic measures and a grid measure.
    Equidist(EquidistArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Degrees(_) => "degrees",
            Command::Certify(_) => "certify",
            Command::Density(_) => "density",
            Command::Height(_) => "height",
            Command::Hcanonical(_) => "hcanonical",
            Command::Lee(_) => "lee",
            Command::Hprime(_) => "hprime",
            Command::Green(_) => "green",
            Command::Energy(_) => "energy",
            Command::Mugrid(_) => "mugrid",
            Command::Periodic(_) => "periodic",
            Command::Equidist(_) => "equidist",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionArg {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HeightSideArg {
    Plus,
    Minus,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Forward,
    Backward,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    PointOrbitExact,
    DistanceProxy,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    Euclidean,
    Sup,
}

#[derive(Args, Debug, Serialize)]
pub struct ValidateArgs {}

#[derive(Args, Debug, Serialize)]
pub struct DegreesArgs {
    #[arg(long, default_value_t = 6)]
    pub max_n: usize,
    #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
    pub direction: DirectionArg,
    /// Random lines per gcd-degree estimate.
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct CertifyArgs {
    /// Overrides the prime in the configuration.
    #[arg(long)]
    pub prime: Option<u64>,
    #[arg(long, default_value_t = arithdyn::padic::DEFAULT_SANITY_N)]
    pub sanity_n: usize,
    /// Read a JSON array of configurations and certify each.
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct DensityArgs {
    #[arg(long)]
    pub prime: Option<u64>,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct HeightArgs {
    /// Homogeneous rational coordinates, e.g. "1/2,3,1".
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
}

#[derive(Args, Debug, Serialize)]
pub struct HcanonicalArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = HeightSideArg::Both)]
    pub side: HeightSideArg,
}

#[derive(Args, Debug, Serialize)]
pub struct LeeArgs {
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 100)]
    pub bound: i64,
}

#[derive(Args, Debug, Serialize)]
pub struct HprimeArgs {
    /// Constant of the Lee inequality; estimated with a Lee scan when absent.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub bound: i64,
    /// Sample size of the Lee scan used to estimate c.
    #[arg(long, default_value_t = 1000)]
    pub lee_count: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct GreenArgs {
    /// Real parts of the homogeneous coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    /// Imaginary parts of the homogeneous coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub point_im: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
    pub direction: DirectionArg,
}

#[derive(Args, Debug, Serialize)]
pub struct EnergyArgs {
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = SideArg::Both)]
    pub side: SideArg,
    #[arg(long, value_enum, default_value_t = MethodArg::PointOrbitExact)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Separation tolerance of the finite-evidence stability check.
    #[arg(long, default_value_t = 1e-8)]
    pub stability_tol: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct MugridArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// "lo,hi" for the cube, or eight numbers for (Re z, Im z, Re w, Im w).
    #[arg(long = "box", default_value = "-3,3", allow_hyphen_values = true)]
    pub bounds: String,
    #[arg(long, default_value_t = 40)]
    pub resolution: usize,
    #[arg(long, value_enum, default_value_t = NormArg::Euclidean)]
    pub norm: NormArg,
    #[arg(long, default_value_t = arithdyn::greenc::DEFAULT_MAX_CELLS)]
    pub max_cells: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct PeriodicArgs {
    #[arg(long)]
    pub n: usize,
    /// Newton starts; defaults to 50·d^n.
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 3.0)]
    pub box_radius: f64,
    #[arg(long, default_value_t = 200)]
    pub max_steps: usize,
    /// Attach the exact fixed points of the Hénon family with these "a,b".
    #[arg(long, allow_hyphen_values = true)]
    pub exact_henon: Option<String>,
    /// Largest denominator tried when recognizing rational points.
    #[arg(long, default_value_t = 1000)]
    pub max_den: i64,
}

#[derive(Args, Debug, Serialize)]
pub struct EquidistArgs {
    /// Periodic point set files written by `periodic`.
    #[arg(long, num_args = 1.., required = true)]
    pub sets: Vec<PathBuf>,
    /// Grid sidecar JSON written by `mugrid`; the cell data is read from the
    /// sibling .bin file.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    pub box_half_width: f64,
    /// Neighbourhood radius for the mass near the line at infinity.
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
}

/// What a subcommand produced: stdout text, artifacts, input files read,
/// and the exit code (nonzero for a reported validation failure).
pub struct Outcome {
    pub stdout: String,
    pub artifacts: manifest::Artifacts,
    pub inputs: Vec<PathBuf>,
    pub code: i32,
}

fn run(argv: Vec<String>) -> Result<i32, Failure> {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(0);
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            return Err(Failure::usage(line.to_string()));
        }
    };
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.workers)
        .build()
        .map_err(|e| Failure::usage(format!("worker pool: {e}")))?;
    let outcome = pool.install(|| commands::dispatch(&cli.global, &cli.command))?;
    print!("{}", outcome.stdout);
    if let Some(dir) = &cli.global.out {
        let outputs = outcome.artifacts.write_all(dir)?;
        let inputs = outcome
            .inputs
            .iter()
            .map(|p| digest_file(p))
            .collect::<Result<Vec<_>, _>>()?;
        let manifest = RunManifest {
            subcommand: cli.command.name().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            argv: argv.clone(),
            inputs,
            seed: cli.global.seed,
            workers: pool.current_num_threads(),
            parameters: serde_json::to_value(&cli.command).expect("serializable parameters"),
            outputs,
            wall_time_seconds: start.elapsed().as_secs_f64(),
            exit_code: outcome.code,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
        text.push('\n');
        write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    }
    Ok(outcome.code)
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.code as u8)
        }
    }
}
