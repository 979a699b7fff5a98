//! Command-line front end. Every run resolves its flags into a [`RunConfig`],
//! writes it to `manifest.json`, then executes it; `replay` executes a saved one.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, BiorthogonalBasis, DEFAULT_GRID_EXPONENT, MIN_GRID_EXPONENT};
use crate::estimator::{estimate, EstimatorConfig, ThresholdMode};
use crate::output::write_grid_csv;
use crate::risk::{self, GridSpec, Method, RiskReport, SweepSettings, DEFAULT_RISK_STEP};
use crate::sample::Sample;
use crate::signals::{SignalSpec, TestSignal};

pub const MANIFEST_FORMAT: &str = "wavedens-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_OUT_DIR: &str = "wavedens-out";

#[derive(Debug, Parser)]
#[command(name = "wavedens", version, about = "Adaptive wavelet thresholding density estimation")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "WAVEDENS_OUT", default_value = DEFAULT_OUT_DIR)]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a density from a one-column CSV sample.
    Estimate(EstimateArgs),
    /// n·MISE of the γ-scaled practical rule over a grid of γ.
    Calibrate(CalibrateArgs),
    /// Compare methods over the support (g_d) or tail (h_k) families.
    Bench(BenchArgs),
    /// Draw a sample from a test signal and write it as CSV.
    Sample(SampleArgs),
    /// Write the tabulated reconstruction functions of a basis.
    BasisCache(BasisCacheArgs),
    /// Re-run the configuration stored in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Practical,
    PracticalGamma,
    Theoretical,
}

#[derive(Debug, Args)]
pub struct ModeFlags {
    #[arg(long, value_enum, default_value = "practical")]
    pub mode: ModeArg,
    /// γ for practical-gamma and theoretical modes.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Level constant c of the theoretical rule.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Log-level constant c' of the theoretical rule.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub c_prime: f64,
}

impl ModeFlags {
    fn resolve(&self) -> anyhow::Result<ThresholdMode> {
        let mode = match (self.mode, self.gamma) {
            (ModeArg::Practical, None) => ThresholdMode::Practical,
            (ModeArg::Practical, Some(_)) => {
                bail!("--gamma needs --mode practical-gamma or --mode theoretical")
            }
            (ModeArg::PracticalGamma, Some(gamma)) => ThresholdMode::PracticalGamma { gamma },
            (ModeArg::Theoretical, Some(gamma)) => ThresholdMode::Theoretical {
                gamma,
                c: self.c,
                c_prime: self.c_prime,
            },
            (_, None) => bail!("--mode {:?} needs --gamma", self.mode),
        };
        mode.validate()?;
        Ok(mode)
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "spline")]
    pub basis: BasisKind,
    #[command(flatten)]
    pub mode: ModeFlags,
    /// Override the finest level j0.
    #[arg(long)]
    pub j0: Option<i32>,
    /// Divide every observation by this factor first.
    #[arg(long)]
    pub rescale: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_hi: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_RISK_STEP)]
    pub grid_step: f64,
    /// Tabulation grid `2^-G` for the spline reconstruction functions.
    #[arg(long, default_value_t = DEFAULT_GRID_EXPONENT)]
    pub grid_exponent: u32,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// uniform, gauss[:mean,sd], g_d:d, h_k:k or bumps.
    #[arg(long, default_value = "uniform")]
    pub signal: String,
    #[arg(long)]
    pub basis: Option<BasisKind>,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    /// `lo:hi:step` or a comma-separated list.
    #[arg(long, default_value = "0.25:2:0.25")]
    pub gammas: String,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_GRID_EXPONENT)]
    pub grid_exponent: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Support,
    Tail,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub sweep: SweepKind,
    /// Comma-separated d (support) or k (tail) values.
    #[arg(long)]
    pub values: Option<String>,
    #[arg(long, default_value = "S,H,S*,K")]
    pub methods: String,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_GRID_EXPONENT)]
    pub grid_exponent: u32,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub signal: String,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BasisCacheArgs {
    #[arg(long, default_value = "spline")]
    pub basis: BasisKind,
    #[arg(long, default_value_t = DEFAULT_GRID_EXPONENT)]
    pub grid_exponent: u32,
}

/// Fully resolved parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Estimate {
        input: PathBuf,
        basis: BasisKind,
        grid_exponent: u32,
        mode: ThresholdMode,
        j0: Option<i32>,
        rescale: Option<f64>,
        grid_lo: Option<f64>,
        grid_hi: Option<f64>,
        grid_step: f64,
    },
    Calibrate {
        signal: SignalSpec,
        basis: BasisKind,
        gammas: Vec<f64>,
        settings: SweepSettings,
    },
    Bench {
        sweep: SweepKind,
        values: Vec<f64>,
        methods: Vec<Method>,
        settings: SweepSettings,
    },
    Sample {
        signal: SignalSpec,
        n: usize,
        seed: u64,
    },
    BasisCache {
        basis: BasisKind,
        grid_exponent: u32,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: String,
    pub output_dir: PathBuf,
    pub config: RunConfig,
}

/// `uniform`, `gauss` (mean 0.5, sd 0.25) or `gauss:mean,sd`, `g_d:d`, `h_k:k`, `bumps`.
pub fn parse_signal(text: &str) -> anyhow::Result<SignalSpec> {
    let (name, args) = match text.split_once(':') {
        Some((name, args)) => (name.trim(), Some(args)),
        None => (text.trim(), None),
    };
    let numbers = |want: usize| -> anyhow::Result<Vec<f64>> {
        let args = args.with_context(|| format!("signal {name} needs {want} parameter(s)"))?;
        let v = parse_list(args)?;
        if v.len() != want {
            bail!("signal {name} needs {want} parameter(s), got {}", v.len());
        }
        Ok(v)
    };
    let spec = match name {
        "uniform" => SignalSpec::Uniform01,
        "bumps" => SignalSpec::Bumps,
        "gauss" if args.is_none() => SignalSpec::Gauss { mean: 0.5, sd: 0.25 },
        "gauss" => {
            let v = numbers(2)?;
            SignalSpec::Gauss { mean: v[0], sd: v[1] }
        }
        "g_d" => SignalSpec::MixtureGd { d: numbers(1)?[0] },
        "h_k" => SignalSpec::MixtureHk { k: numbers(1)?[0] },
        other => bail!("unknown signal {other:?}; expected uniform, gauss, g_d:<d>, h_k:<k> or bumps"),
    };
    if args.is_some() && matches!(spec, SignalSpec::Uniform01 | SignalSpec::Bumps) {
        bail!("signal {name} takes no parameters");
    }
    Ok(spec)
}

fn parse_list(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("not a number: {t:?}")))
        .collect()
}

/// `lo:hi:step` (inclusive of `hi`) or a comma-separated list.
pub fn parse_gamma_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [single] => parse_list(single)?,
        [lo, hi, step] => {
            let (lo, hi, step): (f64, f64, f64) = (lo.trim().parse()?, hi.trim().parse()?, step.trim().parse()?);
            if !(step > 0.0) || hi < lo {
                bail!("gamma range needs lo <= hi and step > 0");
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| lo + i as f64 * step).collect()
        }
        _ => bail!("gamma grid must be lo:hi:step or a comma-separated list"),
    };
    if values.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        bail!("gammas must be positive");
    }
    Ok(values)
}

fn check_grid_exponent(g: u32) -> anyhow::Result<()> {
    if g < MIN_GRID_EXPONENT {
        bail!("--grid-exponent must be at least {MIN_GRID_EXPONENT}");
    }
    Ok(())
}

impl Command {
    /// Turns flags into a resolved configuration, filling in defaults.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        Ok(match self {
            Command::Estimate(a) => {
                check_grid_exponent(a.grid_exponent)?;
                RunConfig::Estimate {
                    input: a.input.clone(),
                    basis: a.basis,
                    grid_exponent: a.grid_exponent,
                    mode: a.mode.resolve()?,
                    j0: a.j0,
                    rescale: a.rescale,
                    grid_lo: a.grid_lo,
                    grid_hi: a.grid_hi,
                    grid_step: a.grid_step,
                }
            }
            Command::Calibrate(a) => {
                check_grid_exponent(a.grid_exponent)?;
                let signal = parse_signal(&a.signal)?;
                let basis = a.basis.unwrap_or(match signal {
                    SignalSpec::Uniform01 => BasisKind::Haar,
                    _ => BasisKind::Spline,
                });
                RunConfig::Calibrate {
                    signal,
                    basis,
                    gammas: parse_gamma_grid(&a.gammas)?,
                    settings: SweepSettings {
                        n: a.n,
                        replications: a.reps,
                        master_seed: a.seed,
                        grid_exponent: a.grid_exponent,
                    },
                }
            }
            Command::Bench(a) => {
                check_grid_exponent(a.grid_exponent)?;
                let values = match &a.values {
                    Some(v) => parse_list(v)?,
                    None => match a.sweep {
                        SweepKind::Support => vec![10.0, 30.0, 50.0, 70.0],
                        SweepKind::Tail => vec![2.0, 4.0, 8.0, 16.0],
                    },
                };
                let methods = a
                    .methods
                    .split(',')
                    .map(Method::from_code)
                    .collect::<Result<Vec<_>, _>>()?;
                RunConfig::Bench {
                    sweep: a.sweep,
                    values,
                    methods,
                    settings: SweepSettings {
                        n: a.n,
                        replications: a.reps,
                        master_seed: a.seed,
                        grid_exponent: a.grid_exponent,
                    },
                }
            }
            Command::Sample(a) => RunConfig::Sample {
                signal: parse_signal(&a.signal)?,
                n: a.n,
                seed: a.seed,
            },
            Command::BasisCache(a) => {
                check_grid_exponent(a.grid_exponent)?;
                RunConfig::BasisCache {
                    basis: a.basis,
                    grid_exponent: a.grid_exponent,
                }
            }
            Command::Replay { .. } => bail!("replay has no configuration of its own"),
        })
    }
}

/// Parses `args`, runs the command and returns a one-line summary.
pub fn run<I, T>(args: I) -> anyhow::Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    match &cli.command {
        Command::Replay { manifest } => {
            let file = File::open(manifest).with_context(|| format!("opening {}", manifest.display()))?;
            let m: Manifest = serde_json::from_reader(BufReader::new(file))
                .with_context(|| format!("reading {}", manifest.display()))?;
            if m.format != MANIFEST_FORMAT {
                bail!("unsupported manifest format {:?}", m.format);
            }
            execute(&m.config, &cli.out)
        }
        command => execute(&command.resolve()?, &cli.out),
    }
}

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_manifest(config: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        output_dir: out.to_path_buf(),
        config: config.clone(),
    };
    let mut w = create(out, MANIFEST_FILE)?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Runs `config`, writing `manifest.json` and the command's outputs into `out`.
pub fn execute(config: &RunConfig, out: &Path) -> anyhow::Result<String> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_manifest(config, out)?;
    match config {
        RunConfig::Estimate {
            input,
            basis,
            grid_exponent,
            mode,
            j0,
            rescale,
            grid_lo,
            grid_hi,
            grid_step,
        } => {
            let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
            let mut sample =
                Sample::read_csv(BufReader::new(file)).with_context(|| format!("reading {}", input.display()))?;
            if let Some(factor) = rescale {
                sample = sample.rescaled(*factor)?;
            }
            let basis = Arc::new(BiorthogonalBasis::build(*basis, *grid_exponent)?);
            let mut cfg = EstimatorConfig::new(basis, *mode);
            cfg.j0_override = *j0;
            let est = estimate(&sample, &cfg)?;
            let (hull_lo, hull_hi) = est
                .support_hull()
                .map_or((sample.min(), sample.max()), |(a, b)| (a.min(sample.min()), b.max(sample.max())));
            let grid = match (grid_lo, grid_hi) {
                (None, None) => GridSpec::covering(hull_lo, hull_hi, *grid_step)?,
                (lo, hi) => GridSpec::new(lo.unwrap_or(hull_lo), hi.unwrap_or(hull_hi), *grid_step)?,
            };
            let nodes = grid.nodes();
            let values = est.evaluate(&nodes);
            let mut w = create(out, "estimate.json")?;
            writeln!(w, "{}", est.to_json()?)?;
            w.flush()?;
            let mut w = create(out, "grid.csv")?;
            write_grid_csv(&mut w, &nodes, &values)?;
            w.flush()?;
            Ok(format!(
                "n={} j0={} kept={} integral={:.6}",
                est.n,
                est.j0,
                est.kept.len(),
                est.integral(10)
            ))
        }
        RunConfig::Calibrate {
            signal,
            basis,
            gammas,
            settings,
        } => {
            let signal = TestSignal::new(*signal)?;
            let reports = risk::calibration_sweep(&signal, *basis, gammas, settings)?;
            write_reports(out, &reports)?;
            let mut w = create(out, "calibration.csv")?;
            writeln!(w, "gamma,n_mise")?;
            for r in &reports {
                writeln!(w, "{},{}", r.parameter.unwrap_or(f64::NAN), r.n_mise())?;
            }
            w.flush()?;
            Ok(format!("{} gamma values, {} replications each", reports.len(), settings.replications))
        }
        RunConfig::Bench {
            sweep,
            values,
            methods,
            settings,
        } => {
            let reports = match sweep {
                SweepKind::Support => risk::support_sweep(values, methods, settings)?,
                SweepKind::Tail => risk::tail_sweep(values, methods, settings)?,
            };
            write_reports(out, &reports)?;
            let mut w = create(out, "quartiles.csv")?;
            risk::write_quartiles_csv(&mut w, &reports)?;
            w.flush()?;
            Ok(format!("{} reports, {} replications each", reports.len(), settings.replications))
        }
        RunConfig::Sample { signal, n, seed } => {
            let sample = TestSignal::new(*signal)?.sample(*seed, *n)?;
            let mut w = create(out, "sample.csv")?;
            sample.write_csv(&mut w)?;
            w.flush()?;
            Ok(format!("{} draws from {}", n, signal))
        }
        RunConfig::BasisCache { basis, grid_exponent } => {
            let b = BiorthogonalBasis::build(*basis, *grid_exponent)?;
            let name = format!("basis-{basis}.cache");
            let mut w = create(out, &name)?;
            b.write_cache(&mut w)?;
            w.flush()?;
            Ok(format!("wrote {name}"))
        }
    }
}

fn write_reports(out: &Path, reports: &[RiskReport]) -> anyhow::Result<()> {
    let mut w = create(out, "replications.csv")?;
    risk::write_replications_csv(&mut w, reports)?;
    w.flush()?;
    let mut w = create(out, "plot.csv")?;
    risk::write_plot_csv(&mut w, reports)?;
    w.flush()?;
    let mut w = create(out, "summary.json")?;
    serde_json::to_writer_pretty(&mut w, reports)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
