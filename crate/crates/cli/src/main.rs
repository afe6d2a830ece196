//! `explore`: command-line front end. Rows and numeric column references are
//! 1-based on the command line and 0-based in every JSON file.

mod commands;
mod parse;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "explore", version, about = "Tile-constrained permutation models and most-informative projections")]
pub struct Cli {
    /// Seed for sessions and experiments.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Std-ratio threshold for turning a selection into a tile.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Relative eigenvalue floor for the whitening step.
    #[arg(long, global = true)]
    pub floor: Option<f64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// JSON manifest listing kept, dropped and categorical columns.
    #[arg(long, requires = "data")]
    pub manifest: Option<PathBuf>,
    /// Built-in dataset instead of a CSV: `districts` or `toy`.
    #[arg(long)]
    pub synthetic: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SessionArg {
    /// Session document to read and update.
    #[arg(long, default_value = "session.json")]
    pub session: PathBuf,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RowArgs {
    /// 1-based rows and ranges, e.g. `1-65,70`, or `all`.
    #[arg(long, conflicts_with = "filter")]
    pub rows: Option<String>,
    /// Side-column filter `COLUMN=LEVEL[,LEVEL]`; repeat to intersect.
    #[arg(long = "where", value_name = "COLUMN=LEVELS")]
    pub filter: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load data and start a session document.
    Load {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        session: SessionArg,
        /// Keep a random subset of this many rows.
        #[arg(long)]
        subsample: Option<usize>,
    },
    /// Set the hypothesis pair: focus rows, columns and column groups.
    Hypothesize {
        #[command(flatten)]
        session: SessionArg,
        #[command(flatten)]
        rows: RowArgs,
        /// Columns by name or 1-based index, comma separated, or `all`.
        #[arg(long)]
        cols: Option<String>,
        /// `singletons`, `single`, or groups like `A,B;C,D`.
        #[arg(long)]
        partition: Option<String>,
        /// Hypothesis as a JSON file; other flags are ignored.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Compute the most informative view and write it as JSON, CSV and SVG.
    View {
        #[command(flatten)]
        session: SessionArg,
        /// Sample overlays per hypothesis side.
        #[arg(long, default_value_t = 1)]
        samples: usize,
        /// Output file stem.
        #[arg(long, default_value = "view")]
        name: String,
    },
    /// Report std ratios and cross-tabulations for a selection.
    Select {
        #[command(flatten)]
        session: SessionArg,
        #[command(flatten)]
        rows: RowArgs,
        /// Output file stem.
        #[arg(long, default_value = "selection")]
        name: String,
    },
    /// Add a tile built from a selection to the session.
    Tile {
        #[command(flatten)]
        session: SessionArg,
        #[command(flatten)]
        rows: RowArgs,
        /// Label recorded in the session history.
        #[arg(long)]
        label: Option<String>,
    },
    /// Gain of each pair's optimal direction under every pair.
    Gains {
        #[command(flatten)]
        session: SessionArg,
        /// JSON file `{"pairs": [...], "external": [...]}`.
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Draw permuted datasets from one side of the hypothesis pair.
    Sample {
        #[command(flatten)]
        session: SessionArg,
        /// Hypothesis side, 1 or 2.
        #[arg(long, default_value_t = 1)]
        side: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Covariance matrices of the hypothesis pair.
    Cov {
        #[command(subcommand)]
        action: CovAction,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Base directory for `csv_ref` paths and persisted sessions.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Persist session histories under `<data-dir>/sessions`.
        #[arg(long, requires = "data_dir")]
        persist: bool,
        /// Static UI bundle served under `/ui`.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        /// Allowed CORS origin; any when unset.
        #[arg(long)]
        cors_origin: Option<String>,
    },
    /// Reproducible experiments writing CSV, JSON and SVG.
    Experiment {
        #[command(subcommand)]
        kind: Experiment,
    },
}

#[derive(Subcommand, Debug)]
pub enum CovAction {
    /// Write sigma1.csv and sigma2.csv.
    Dump {
        #[command(flatten)]
        session: SessionArg,
    },
}

#[derive(Subcommand, Debug)]
pub enum Experiment {
    /// Gain loss of directions found on perturbed data.
    Stability {
        #[command(flatten)]
        data: DataArgs,
        /// Grid as JSON; defaults to sigma {0,1,10} x delta_n {0,200}.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Median running times over a grid of sizes.
    Scaling {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Sizes like `1000x10,10000x10`.
        #[arg(long)]
        sizes: Option<String>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Gain table over hypothesis pairs.
    Gainmatrix {
        #[arg(long)]
        config: PathBuf,
        /// Use a built-in dataset instead of the one the config names.
        #[arg(long)]
        synthetic: Option<String>,
    },
    /// Scripted exploration sessions.
    Walkthrough {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        synthetic: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = commands::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
