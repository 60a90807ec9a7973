//! `ramsq` command-line front end.
//!
//! Figure datasets go out as CSV, the validation report as JSON. Output is
//! written to stdout or to `--out PATH`, in which case a run manifest lands at
//! `PATH.manifest.json`. Exit codes: 0 success, 1 validation failure,
//! 2 parameter or I/O error. `RAMSQ_THREADS` caps the worker pool.

pub mod datasets;
pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use ramsq_core::ensemble::SamplerMode;
use ramsq_core::MediumSpec;

use datasets::{
    Axis, CoeffsParams, Fig2Params, Fig3Params, Fig4Params, FigXrParams, RegionParams, RegionRows, RegionTable,
    LARGE_SQUEEZING_VARIANCE,
};
use output::{params_digest, render_csv, Sink};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_PARAM: i32 = 2;

pub const THREADS_ENV: &str = "RAMSQ_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", variant_name(.source))]
    Core {
        #[from]
        source: ramsq_core::Error,
    },
    #[error("{0}")]
    Param(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("validation failed: {}", .0.join(", "))]
    Validation(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            _ => EXIT_PARAM,
        }
    }
}

fn variant_name(e: &ramsq_core::Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
}

impl FromStr for Axis {
    type Err = String;

    /// `min:max:steps`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, steps] = parts[..] else {
            return Err(format!("grid `{s}` must be `min:max:steps`"));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("grid `{s}`: {e}"));
        let (min, max) = (num(min)?, num(max)?);
        let steps: usize = steps.trim().parse().map_err(|e| format!("grid `{s}`: {e}"))?;
        if !(min.is_finite() && max.is_finite()) || steps == 0 || min > max || (steps > 1 && min == max) {
            return Err(format!("grid `{s}` needs finite min < max and steps >= 1"));
        }
        Ok(Axis::new(min, max, steps))
    }
}

#[derive(Debug, Parser)]
#[command(name = "ramsq", version, about = "Squeezed-light noise through random amplifying media")]
pub struct Cli {
    /// Write output here instead of stdout, plus a `.manifest.json` alongside.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ensemble-averaged transmission, reflection and spontaneous coefficients.
    Coeffs(CoeffsArgs),
    /// Noise removed by shaping over (r, L/La) and (L/l, L/La).
    Fig2(Fig2Args),
    /// Rescaled fluctuations with and without shaping.
    Fig3(Fig3Args),
    /// All four quadrature variances vs r and vs L/La.
    Fig4(Fig4Args),
    /// Amplifying vs linear media, shaped vs unshaped, against shot noise.
    Figxr(FigXrArgs),
    /// Sub-shot-noise region: boundary curve, cell matrix or threshold table.
    SnlRegion(RegionArgs),
    /// Identity and Monte Carlo oracle suites; writes a JSON report.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CoeffsArgs {
    #[arg(long = "L-over-l")]
    pub thickness_ratio: f64,
    #[arg(long = "L-over-La")]
    pub gain_ratio: f64,
    #[arg(long, default_value_t = 1)]
    pub channels: i64,
}

/// Comma-separated panel letters.
fn panels(given: &[String], allowed: &[&str]) -> Result<Vec<String>, CliError> {
    for p in given {
        if !allowed.contains(&p.as_str()) {
            return Err(CliError::Param(format!("unknown panel `{p}` (expected one of {})", allowed.join(", "))));
        }
    }
    Ok(given.to_vec())
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct Fig2Args {
    #[arg(long, value_delimiter = ',', default_values_t = ["a".to_string(), "b".to_string()])]
    pub panels: Vec<String>,
    /// Fixed L/l of panel a.
    #[arg(long = "L-over-l", default_value_t = 6.0)]
    pub thickness_ratio: f64,
    /// Fixed r of panel b.
    #[arg(long = "squeeze-r", default_value_t = 1.5)]
    pub squeeze_r: f64,
    #[arg(long, value_name = "MIN:MAX:STEPS")]
    pub r_grid: Option<Axis>,
    #[arg(long, value_name = "MIN:MAX:STEPS")]
    pub gain_grid: Option<Axis>,
    #[arg(long, value_name = "MIN:MAX:STEPS")]
    pub thickness_grid: Option<Axis>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct Fig3Args {
    #[arg(long, value_delimiter = ',', default_values_t = ["a", "b", "c", "d"].map(String::from))]
    pub panels: Vec<String>,
    /// Curve parameter values: L/l for panels a and d, L/La for b, r for c.
    #[arg(long, value_delimiter = ',')]
    pub curves: Option<Vec<f64>>,
    #[arg(long, value_name = "MIN:MAX:STEPS")]
    pub r_grid: Option<Axis>,
    #[arg(long, value_name = "MIN:MAX:STEPS")]
    pub gain_grid: Option<Axis>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct Fig4Args {
    #[arg(long, value_delimiter = ',', default_values_t = ["a".to_string(), "b".to_string()])]
    pub panels: Vec<String>,
    #[arg(long = "L-over-l", default_value_t = 10.0)]
    pub thickness_ratio: f64,
    /// Fixed L/La of panel a.
    #[arg(long = "L-over-La", default_value_t = 2.5)]
    pub gain_ratio: f64,
    /// Fixed r of panel b.
    #[arg(long = "squeeze-r", default_value_t = 0.7)]
    pub squeeze_r: f64,
    #[arg(long, value_name = "MIN:MAX:STEPS")]
    pub r_grid: Option<Axis>,
    #[arg(long, value_name = "MIN:MAX:STEPS")]
    pub gain_grid: Option<Axis>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FigXrArgs {
    #[arg(long, value_delimiter = ',', default_values_t = ["a".to_string(), "b".to_string()])]
    pub panels: Vec<String>,
    /// Fixed L/l of panel a.
    #[arg(long = "L-over-l", default_value_t = 2.0)]
    pub thickness_ratio: f64,
    /// Gain of the amplifying series.
    #[arg(long = "L-over-La", default_value_t = 1.0)]
    pub gain_ratio: f64,
    /// Fixed r of panel b.
    #[arg(long = "squeeze-r", default_value_t = 1.0)]
    pub squeeze_r: f64,
    #[arg(long, value_name = "MIN:MAX:STEPS")]
    pub r_grid: Option<Axis>,
    #[arg(long, value_name = "MIN:MAX:STEPS")]
    pub thickness_grid: Option<Axis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableArg {
    Boundary,
    Matrix,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    /// e^{-2r} = 1e-8.
    LargeSqueezing,
    /// r = 0.
    Coherent,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RegionArgs {
    #[arg(long, value_enum, default_value_t = TableArg::Boundary)]
    pub table: TableArg,
    #[arg(long, value_enum, default_value_t = PresetArg::LargeSqueezing)]
    pub preset: PresetArg,
    /// Overrides the preset.
    #[arg(long = "squeeze-r")]
    pub squeeze_r: Option<f64>,
    #[arg(long, value_name = "MIN:MAX:STEPS")]
    pub thickness_grid: Option<Axis>,
    #[arg(long, value_name = "MIN:MAX:STEPS")]
    pub gain_grid: Option<Axis>,
    /// l/La values for the threshold table.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Mean,
    Exponential,
    Both,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub realizations: u64,
    #[arg(long, value_enum, default_value_t = SamplerArg::Both)]
    pub sampler: SamplerArg,
    #[arg(long, default_value_t = 4)]
    pub channels: i64,
    /// Negative control: perturbs V by 1e-6 before the identity checks.
    #[arg(long, hide = true)]
    pub corrupt_constraint: bool,
}

fn channels(n: i64) -> Result<usize, CliError> {
    usize::try_from(n)
        .ok()
        .filter(|&n| n >= 1)
        .ok_or(ramsq_core::Error::BadChannels(n).into())
}

fn squeeze(r: f64) -> Result<f64, CliError> {
    ramsq_core::InputState::squeezed(r)?;
    Ok(r)
}

fn thread_count() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Param(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

fn csv_command<P: serde::Serialize, R: serde::Serialize>(
    sink: &Sink,
    command: &str,
    params: &P,
    rows: &[R],
) -> Result<(), CliError> {
    let digest = params_digest(command, params)?;
    let bytes = render_csv(command, &digest, rows)?;
    sink.emit(command, params, None, &digest, &bytes)
}

fn execute(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    let sink = Sink {
        out: cli.out.as_deref(),
        argv,
    };
    match &cli.command {
        Command::Coeffs(a) => {
            let n = channels(a.channels)?;
            MediumSpec::new(a.thickness_ratio, a.gain_ratio, n)?;
            let p = CoeffsParams {
                thickness_ratio: a.thickness_ratio,
                gain_ratio: a.gain_ratio,
            };
            csv_command(&sink, "coeffs", &p, &datasets::coeffs(&p)?)
        }
        Command::Fig2(a) => {
            let d = Fig2Params::default();
            let p = Fig2Params {
                panels: panels(&a.panels, &["a", "b"])?,
                thickness_ratio: a.thickness_ratio,
                squeeze_r: squeeze(a.squeeze_r)?,
                squeeze_axis: a.r_grid.unwrap_or(d.squeeze_axis),
                gain_axis: a.gain_grid.unwrap_or(d.gain_axis),
                thickness_axis: a.thickness_grid.unwrap_or(d.thickness_axis),
            };
            csv_command(&sink, "fig2", &p, &datasets::fig2(&p)?)
        }
        Command::Fig3(a) => {
            let d = Fig3Params::default();
            let p = Fig3Params {
                panels: panels(&a.panels, &["a", "b", "c", "d"])?,
                curves: a.curves.clone(),
                squeeze_axis: a.r_grid.unwrap_or(d.squeeze_axis),
                gain_axis: a.gain_grid.unwrap_or(d.gain_axis),
            };
            csv_command(&sink, "fig3", &p, &datasets::fig3(&p)?)
        }
        Command::Fig4(a) => {
            let d = Fig4Params::default();
            let p = Fig4Params {
                panels: panels(&a.panels, &["a", "b"])?,
                thickness_ratio: a.thickness_ratio,
                gain_ratio: a.gain_ratio,
                squeeze_r: squeeze(a.squeeze_r)?,
                squeeze_axis: a.r_grid.unwrap_or(d.squeeze_axis),
                gain_axis: a.gain_grid.unwrap_or(d.gain_axis),
            };
            csv_command(&sink, "fig4", &p, &datasets::fig4(&p)?)
        }
        Command::Figxr(a) => {
            let d = FigXrParams::default();
            let p = FigXrParams {
                panels: panels(&a.panels, &["a", "b"])?,
                gain_ratio: a.gain_ratio,
                thickness_ratio: a.thickness_ratio,
                squeeze_r: squeeze(a.squeeze_r)?,
                squeeze_axis: a.r_grid.unwrap_or(d.squeeze_axis),
                thickness_axis: a.thickness_grid.unwrap_or(d.thickness_axis),
            };
            csv_command(&sink, "figxr", &p, &datasets::figxr(&p)?)
        }
        Command::SnlRegion(a) => {
            let d = RegionParams::default();
            let (squeezed_variance, preset) = match (a.squeeze_r, a.preset) {
                (Some(r), _) => ((-2.0 * squeeze(r)?).exp(), None),
                (None, PresetArg::LargeSqueezing) => (LARGE_SQUEEZING_VARIANCE, Some("large-squeezing")),
                (None, PresetArg::Coherent) => (1.0, Some("coherent")),
            };
            let p = RegionParams {
                table: match a.table {
                    TableArg::Boundary => RegionTable::Boundary,
                    TableArg::Matrix => RegionTable::Matrix,
                    TableArg::Threshold => RegionTable::Threshold,
                },
                squeezed_variance,
                preset: preset.map(String::from),
                thickness_axis: a.thickness_grid.unwrap_or(d.thickness_axis),
                gain_axis: a.gain_grid.unwrap_or(d.gain_axis),
                ratios: a.ratios.clone().unwrap_or(d.ratios),
            };
            match datasets::snl_region(&p)? {
                RegionRows::Boundary(rows) => csv_command(&sink, "snl-region", &p, &rows),
                RegionRows::Matrix(rows) => csv_command(&sink, "snl-region", &p, &rows),
                RegionRows::Threshold(rows) => csv_command(&sink, "snl-region", &p, &rows),
            }
        }
        Command::Validate(a) => {
            let p = validate::ValidateParams {
                seed: a.seed,
                realizations: a.realizations,
                samplers: match a.sampler {
                    SamplerArg::Mean => vec![SamplerMode::MeanMagnitudes],
                    SamplerArg::Exponential => vec![SamplerMode::ExponentialMagnitudes],
                    SamplerArg::Both => vec![SamplerMode::MeanMagnitudes, SamplerMode::ExponentialMagnitudes],
                },
                channels: channels(a.channels)?,
                corrupt_constraint: a.corrupt_constraint,
            };
            let report = validate::run(&p)?;
            let digest = params_digest("validate", &p)?;
            let mut bytes = serde_json::to_vec_pretty(&report)?;
            bytes.push(b'\n');
            sink.emit("validate", &p, Some(p.seed), &digest, &bytes)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let failed = report.failed();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Validation(failed.into_iter().map(String::from).collect()))
            }
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARAM } else { EXIT_OK };
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();

    let result = thread_count().and_then(|threads| {
        if let Some(n) = threads {
            // Ignored if a pool already exists in this process.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        execute(&cli, &argv)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
