use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use lamkit_core::stats::{Direction, Metric};
use lamkit_core::train::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "lamkit", version, about = "Fit, linearise, evaluate and compare additive risk models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Nnlr,
    Arm1,
    Arm2,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Nnlr => ModelKind::Nnlr,
            KindArg::Arm1 => ModelKind::Arm1,
            KindArg::Arm2 => ModelKind::Arm2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    HigherBetter,
    LowerBetter,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::HigherBetter => Direction::HigherBetter,
            DirectionArg::LowerBetter => Direction::LowerBetter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Auc,
    Ece,
    Mce,
    Certainty,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Auc => Metric::Auc,
            MetricArg::Ece => Metric::Ece,
            MetricArg::Mce => Metric::Mce,
            MetricArg::Certainty => Metric::Certainty,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate the optimal half-width numerically and compare it with the
    /// rational constant used by the library.
    Alpha {
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a logistic additive model and write it as a JSON model document.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Recorded in the manifest; fitting itself is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ridge penalty on the slopes.
        #[arg(long, default_value_t = 0.0)]
        ridge: f64,
        /// Minimum samples per bin (default: 1% of rows).
        #[arg(long)]
        min_leaf: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replace the logistic link of a model file by the clipped linear one.
    Linearise {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stratified k-fold evaluation; writes one CSV row per classifier and fold.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Model families to train on each fold (each also reported linearised).
        #[arg(long = "kind", value_enum)]
        kinds: Vec<KindArg>,
        /// Fitted model files scored on every held-out fold, as `path` or `id=path`.
        #[arg(long = "model")]
        models: Vec<String>,
        /// Skip the linearised counterpart of trained families.
        #[arg(long)]
        no_lam: bool,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        ridge: f64,
        #[arg(long)]
        min_leaf: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average per-fold metric CSVs into a classifier × dataset score matrix.
    Pivot {
        #[arg(long = "metrics", required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "auc")]
        metric: MetricArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Omnibus and pairwise comparison of a score matrix.
    Compare {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, value_enum, default_value = "higher-better")]
        direction: DirectionArg,
        #[arg(long, default_value_t = 0.05)]
        alpha_level: f64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trinomial preference test for `N_A` wins, `N_B` losses and `N_0` ties.
    Trinomial {
        n_a: u64,
        n_b: u64,
        n_0: u64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a synthetic logistic dataset and write it with a matching config.
    Synth {
        /// True coefficients, comma separated; one feature per entry.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        coefficients: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        bias: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `normal`, or `uniform:LOW:HIGH`.
        #[arg(long, default_value = "normal")]
        distribution: String,
        /// Group the features round-robin into this many subscales.
        #[arg(long)]
        subscales: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config_out: PathBuf,
    },
}
