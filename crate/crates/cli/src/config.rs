use std::path::{Path, PathBuf};

use bmo_splines::{Interval, MultilevelPartition};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    Dyadic,
    Perturbed,
}

/// Settings shared by every subcommand. Each flag overrides the matching
/// field of `--config`; `BMO_SPLINES_SEED` sits between the two.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// JSON file with any of the fields below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Spline order (degree + 1).
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Finest level.
    #[arg(long = "L", global = true)]
    pub levels: Option<usize>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    #[arg(long, global = true, env = "BMO_SPLINES_SEED")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub partition: Option<PartitionKind>,
    #[arg(long, global = true)]
    pub jitter: Option<f64>,
    /// Window endpoints `a,b`.
    #[arg(long, global = true, value_delimiter = ',', num_args = 2)]
    pub window: Option<Vec<f64>>,
    /// Comma-separated list of n values.
    #[arg(long = "n-grid", global = true, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
}

/// Contents of a `--config` file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub window: Option<[f64; 2]>,
    pub k: Option<usize>,
    #[serde(rename = "L")]
    pub levels: Option<usize>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub n_grid: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub partition: Option<PartitionKind>,
    pub jitter: Option<f64>,
}

/// Fully resolved configuration; its canonical JSON is what gets hashed.
#[derive(Clone, Debug, Serialize)]
pub struct Config {
    pub window: [f64; 2],
    pub k: usize,
    #[serde(rename = "L")]
    pub levels: usize,
    pub q: f64,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub n_grid: Vec<usize>,
    #[serde(skip)]
    pub out: PathBuf,
    pub partition: PartitionKind,
    pub jitter: f64,
}

/// Per-command fallbacks for fields left unset.
pub struct Defaults {
    pub k: usize,
    pub levels: usize,
    pub q: f64,
    pub n_grid: Vec<usize>,
}

impl Config {
    pub fn resolve(args: &CommonArgs, alpha: Option<f64>, d: Defaults) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };
        let window = match (&args.window, file.window) {
            (Some(w), _) => [w[0], w[1]],
            (None, Some(w)) => w,
            (None, None) => [-1.0, 2.0],
        };
        let c = Self {
            window,
            k: args.k.or(file.k).unwrap_or(d.k),
            levels: args.levels.or(file.levels).unwrap_or(d.levels),
            q: args.q.or(file.q).unwrap_or(d.q),
            alpha: alpha.or(file.alpha),
            seed: args.seed.or(file.seed).unwrap_or(1),
            n_grid: args.n_grid.clone().or(file.n_grid).unwrap_or(d.n_grid),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            partition: args.partition.or(file.partition).unwrap_or(PartitionKind::Dyadic),
            jitter: args.jitter.or(file.jitter).unwrap_or(0.0),
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(self.window[0] < self.window[1]) || !self.window.iter().all(|v| v.is_finite()) {
            return usage(format!("window [{}, {}] must be finite with a < b", self.window[0], self.window[1]));
        }
        if !(self.q >= 1.0) {
            return usage(format!("q must be at least 1, got {}", self.q));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return usage(format!("alpha must be positive, got {a}"));
            }
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return usage("n-grid must be a nonempty strictly increasing list of positive integers".into());
        }
        if self.partition == PartitionKind::Dyadic && self.jitter != 0.0 {
            return usage("--jitter applies only to --partition perturbed".into());
        }
        Ok(())
    }

    pub fn build_partition(&self) -> Result<MultilevelPartition, CliError> {
        let w = Interval::new(self.window[0], self.window[1]);
        Ok(match self.partition {
            PartitionKind::Dyadic => MultilevelPartition::build_dyadic(w, self.levels, self.k)?,
            PartitionKind::Perturbed => {
                MultilevelPartition::build_perturbed(w, self.levels, self.k, self.jitter, self.seed)?
            }
        })
    }

    /// First 16 hex digits of SHA-256 over the command name, this config and
    /// the command's own parameters.
    pub fn hash(&self, command: &str, params: &serde_json::Value) -> String {
        let body = serde_json::json!({ "command": command, "config": self, "params": params });
        let digest = Sha256::digest(body.to_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}
