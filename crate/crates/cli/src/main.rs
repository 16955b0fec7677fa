//! `bmo-splines` command-line front end.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use bmo_splines::bspline::{decompose, reconstruct, SplineDecomposition};
use bmo_splines::calibration::{calibrate, BERNSTEIN_N_GRID};
use bmo_splines::constants::frozen;
use bmo_splines::corpus::{resolve, Smoothness};
use bmo_splines::funcspace::{read_samples_csv, GridSamples};
use bmo_splines::norms::{besov_norm_e, besov_norm_modulus, besov_norm_q, bmo_norm, bmo_qk_norm};
use bmo_splines::nterm::{
    bernstein_experiment, counterexample_growth, jackson_rate_experiment, GqBenchReport, RateReport,
    DEFAULT_EPS_GRID, DEFAULT_N_GRID,
};
use bmo_splines::{Func, MultilevelPartition};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::config::{CommonArgs, Config, Defaults};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] bmo_splines::Error),
    #[error("{0}")]
    Io(String),
    #[error("{} check(s) failed", .0.len())]
    Assertion(Vec<Check>),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Assertion(_) => 1,
            _ => 2,
        }
    }
}

/// One embedded assertion of an experiment command.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, expected: impl Into<String>, actual: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), expected: expected.into(), actual: actual.into(), pass }
    }
}

#[derive(Parser)]
#[command(name = "bmo-splines", version, about = "Multilevel spline decompositions, BMO/Besov norms and n-term rates")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Source {
    /// Builtin corpus id.
    #[arg(long = "fn", conflicts_with = "csv")]
    func: Option<String>,
    /// CSV file with header `x,value`.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum Variant {
    Bmo,
    BmoQk,
    BesovE,
    BesovQ,
    BesovMod,
}

#[derive(Subcommand)]
enum Command {
    /// Multilevel decomposition of a function, written as JSON.
    Decompose {
        #[command(flatten)]
        source: Source,
    },
    /// Rebuild the spline of a decomposition file.
    Reconstruct {
        /// Decomposition JSON.
        #[arg(long)]
        input: PathBuf,
        /// Compare against the source function and fail above `--tol`.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        source: Source,
    },
    /// One norm of a function, as JSON on stdout.
    Norm {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum)]
        variant: Variant,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Greedy n-term BMO rates of a function.
    Rates {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        alpha: Option<f64>,
        /// Also write an SVG log-log plot.
        #[arg(long)]
        svg: bool,
    },
    /// Bernstein ratios of random n-term splines.
    Bernstein {
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        svg: bool,
    },
    /// Growth of the Besov norm of smoothed indicators.
    Counterexample {
        /// Ramp widths; defaults to 2^-3 .. 2^-9.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Greedy against exhaustive n-term approximation in g^q.
    GqBench {
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Re-measure the frozen equivalence constants.
    Calibrate,
}

fn defaults(levels: usize, q: f64, n_grid: &[usize]) -> Defaults {
    Defaults { k: 2, levels, q, n_grid: n_grid.to_vec() }
}

fn load_source(source: &Source, p: &MultilevelPartition) -> Result<(String, Arc<dyn Func>, Option<Smoothness>), CliError> {
    match (&source.func, &source.csv) {
        (Some(id), _) => {
            let c = resolve(id, p)?;
            Ok((id.clone(), c.func, Some(c.entry.smoothness)))
        }
        (None, Some(path)) => {
            let f = read_samples_csv(path)?;
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
            Ok((name, Arc::new(f), None))
        }
        (None, None) => Err(CliError::Usage("one of --fn or --csv is required".into())),
    }
}

fn source_params(source: &Source) -> Result<serde_json::Value, CliError> {
    Ok(match (&source.func, &source.csv) {
        (Some(id), _) => json!({ "fn": id }),
        (None, Some(path)) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let digest = <sha2::Sha256 as sha2::Digest>::digest(&bytes);
            let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
            json!({ "csv": hex })
        }
        (None, None) => return Err(CliError::Usage("one of --fn or --csv is required".into())),
    })
}

/// Write `contents` to `dir/name` through a temporary file in the same
/// directory.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    use std::io::Write;
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value serializes"));
}

fn alpha_for(alpha: Option<f64>, smoothness: Option<Smoothness>) -> Result<f64, CliError> {
    match (alpha, smoothness) {
        (Some(a), _) => Ok(a),
        (None, Some(Smoothness::Alpha(a))) => Ok(a),
        (None, Some(Smoothness::Smooth)) => Ok(1.0),
        _ => Err(CliError::Usage("--alpha is required for this function".into())),
    }
}

fn emit_report(out: &Path, stem: &str, report: &RateReport, svg: bool) -> Result<(), CliError> {
    write_atomic(out, &format!("{stem}.csv"), &report.to_csv())?;
    write_atomic(out, &format!("{stem}.json"), &report.to_json()?)?;
    if svg {
        write_atomic(out, &format!("{stem}.svg"), &report.to_svg())?;
    }
    Ok(())
}

fn finish(checks: Vec<Check>) -> Result<(), CliError> {
    if checks.iter().all(|c| c.pass) {
        Ok(())
    } else {
        Err(CliError::Assertion(checks.into_iter().filter(|c| !c.pass).collect()))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = &cli.common;
    match cli.command {
        Command::Decompose { source } => {
            let c = Config::resolve(common, None, defaults(10, 2.0, &DEFAULT_N_GRID))?;
            let p = c.build_partition()?;
            let (name, f, _) = load_source(&source, &p)?;
            let mut dec = decompose(&f, &p, c.q)?;
            dec.config_hash = Some(c.hash("decompose", &source_params(&source)?));
            let path = write_atomic(&c.out, &format!("decomposition_{name}.json"), &dec.to_json()?)?;
            let counts: Vec<usize> = (0..=p.max_level()).map(|m| dec.level(m).len()).collect();
            print_json(&json!({
                "file": path,
                "config_hash": dec.config_hash,
                "per_level": counts,
                "total": dec.count(),
            }));
            Ok(())
        }
        Command::Reconstruct { input, check, tol, source } => {
            let c = Config::resolve(common, None, defaults(10, 2.0, &DEFAULT_N_GRID))?;
            let p = c.build_partition()?;
            let text = std::fs::read_to_string(&input).map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
            let dec = SplineDecomposition::from_json(&text, &p)?;
            let spline = reconstruct(&dec, &p)?;
            let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let path = write_atomic(&c.out, &format!("{stem}_spline.json"), &serde_json::to_string_pretty(&spline).expect("spline serializes"))?;
            if !check {
                print_json(&json!({ "file": path }));
                return Ok(());
            }
            let (_, f, _) = load_source(&source, &p)?;
            let s = GridSamples::new(&f, p.rule());
            let err = s.x.iter().zip(&s.v).fold(0.0f64, |a, (&x, &v)| a.max((v - spline.value(x)).abs()));
            print_json(&json!({ "file": path, "sup_error": err, "tol": tol }));
            finish(vec![Check::new("round-trip sup error", format!("<= {tol:e}"), format!("{err:e}"), err <= tol)])
        }
        Command::Norm { source, variant, alpha } => {
            let c = Config::resolve(common, alpha, defaults(10, 2.0, &DEFAULT_N_GRID))?;
            let p = c.build_partition()?;
            let (_, f, _) = load_source(&source, &p)?;
            let needs_alpha = || c.alpha.ok_or_else(|| CliError::Usage("--alpha is required for Besov variants".into()));
            let mut argmax = None;
            let (alpha, q, value) = match variant {
                Variant::Bmo => {
                    let b = bmo_norm(&f, &p, c.q)?;
                    argmax = b.argmax;
                    (None, c.q, b.value)
                }
                Variant::BmoQk => (None, c.q, bmo_qk_norm(&f, &p, c.q, c.k)?),
                Variant::BesovE => (Some(needs_alpha()?), c.q, besov_norm_e(&f, &p, needs_alpha()?, c.k, c.q)?.value),
                Variant::BesovQ => {
                    let dec = decompose(&f, &p, c.q)?;
                    (Some(needs_alpha()?), c.q, besov_norm_q(&dec, needs_alpha()?)?.value)
                }
                Variant::BesovMod => {
                    let b = besov_norm_modulus(&f, &p, needs_alpha()?, c.k)?;
                    (Some(b.alpha), b.q, b.value)
                }
            };
            let mut out = json!({
                "variant": variant,
                "alpha": alpha,
                "q": q,
                "k": c.k,
                "value": value,
                "config_hash": c.hash("norm", &json!({ "source": source_params(&source)?, "variant": variant })),
            });
            if let Some(a) = argmax {
                out["argmax"] = json!([a.lo, a.hi]);
            }
            print_json(&out);
            Ok(())
        }
        Command::Rates { source, alpha, svg } => {
            let probe = Config::resolve(common, alpha, defaults(10, 2.0, &DEFAULT_N_GRID))?;
            let p = probe.build_partition()?;
            let (name, f, smooth) = load_source(&source, &p)?;
            let alpha = alpha_for(probe.alpha, smooth)?;
            let c = Config { alpha: Some(alpha), ..probe };
            let mut report = jackson_rate_experiment(&f, &p, alpha, c.k, c.q, &c.n_grid)?;
            report.config_hash = Some(c.hash("rates", &source_params(&source)?));
            emit_report(&c.out, &format!("rates_{name}"), &report, svg)?;
            let slope = report.slope();
            let bound = -alpha + 0.15;
            let frozen_c = frozen().jackson_normalized * frozen().headroom;
            print_json(&json!({
                "function": name,
                "alpha": alpha,
                "slope": slope,
                "intercept": report.fit.map(|f| f.intercept),
                "max_normalized": report.max_normalized(),
                "config_hash": report.config_hash,
            }));
            finish(vec![
                Check::new(
                    "slope",
                    format!("<= {bound:.4}"),
                    slope.map_or("undefined".into(), |s| format!("{s:.4}")),
                    slope.is_some_and(|s| s <= bound),
                ),
                Check::new(
                    "normalized error",
                    format!("<= {frozen_c:.4}"),
                    format!("{:.4}", report.max_normalized()),
                    report.max_normalized() <= frozen_c,
                ),
            ])
        }
        Command::Bernstein { trials, alpha, svg } => {
            let c = Config::resolve(common, alpha, defaults(8, 2.0, &BERNSTEIN_N_GRID))?;
            let alpha = c.alpha.unwrap_or(0.5);
            let c = Config { alpha: Some(alpha), ..c };
            let ks: Vec<usize> = if common.k.is_some() { vec![c.k] } else { vec![3, 2] };
            let mut checks = Vec::new();
            let mut summary = Vec::new();
            for k in ks {
                let ck = Config { k, ..c.clone() };
                let p = ck.build_partition()?;
                let mut report = bernstein_experiment(&p, alpha, ck.q, trials, &ck.n_grid, ck.seed)?;
                report.config_hash = Some(ck.hash("bernstein", &json!({ "trials": trials })));
                emit_report(&ck.out, &format!("bernstein_k{k}"), &report, svg)?;
                let slope = report.slope();
                summary.push(json!({ "k": k, "slope": slope, "config_hash": report.config_hash }));
                checks.push(Check::new(
                    format!("k={k} slope"),
                    "within [-0.15, 0.15]",
                    slope.map_or("undefined".into(), |s| format!("{s:.4}")),
                    slope.is_some_and(|s| s.abs() <= 0.15),
                ));
            }
            print_json(&json!(summary));
            finish(checks)
        }
        Command::Counterexample { eps } => {
            let c = Config::resolve(common, Some(1.0), defaults(10, 1.0, &DEFAULT_N_GRID))?;
            let eps = eps.unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec());
            let p = c.build_partition()?;
            let mut report = counterexample_growth(&p, &eps)?;
            report.config_hash = Some(c.hash("counterexample", &json!({ "eps": eps })));
            write_atomic(&c.out, "counterexample.csv", &report.to_csv())?;
            write_atomic(&c.out, "counterexample.json", &report.to_json()?)?;
            print_json(&json!({ "fit": report.fit, "increasing": report.increasing, "config_hash": report.config_hash }));
            let slope = report.fit.map(|f| f.slope);
            let r2 = report.fit.map(|f| f.r_squared);
            finish(vec![
                Check::new("slope", "> 0", format!("{slope:?}"), slope.is_some_and(|s| s > 0.0)),
                Check::new("r_squared", ">= 0.9", format!("{r2:?}"), r2.is_some_and(|r| r >= 0.9)),
                Check::new("strictly increasing", "true", report.increasing.to_string(), report.increasing),
            ])
        }
        Command::GqBench { depth, trials } => {
            let c = Config::resolve(common, None, defaults(10, 1.0, &DEFAULT_N_GRID))?;
            let mut report = GqBenchReport::run(depth, trials, c.seed, c.q)?;
            report.config_hash = Some(c.hash("gq-bench", &json!({ "depth": depth, "trials": trials })));
            write_atomic(&c.out, "gq_bench.csv", &report.to_csv())?;
            write_atomic(&c.out, "gq_bench.json", &report.to_json()?)?;
            let factor = frozen().greedy_oracle_factor;
            print_json(&json!({ "max_ratio": report.max_ratio, "factor": factor, "config_hash": report.config_hash }));
            finish(vec![Check::new(
                "greedy / oracle",
                format!("<= {factor}"),
                format!("{:.4}", report.max_ratio),
                report.max_ratio <= factor,
            )])
        }
        Command::Calibrate => {
            let c = Config::resolve(common, None, defaults(10, 2.0, &DEFAULT_N_GRID))?;
            let mut constants = calibrate()?;
            constants.config_hash = Some(c.hash("calibrate", &json!({})));
            let path = write_atomic(&c.out, "constants_v1.json", &(constants.to_json()? + "\n"))?;
            print_json(&json!({ "file": path }));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::Assertion(failed) = &e {
                eprintln!("assertion failure:");
                for c in failed {
                    eprintln!("  {}", c.name);
                    eprintln!("  - expected {}", c.expected);
                    eprintln!("  + actual   {}", c.actual);
                }
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
