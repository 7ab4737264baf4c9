//! Gap-filling for multi-station daily streamflow records.
//!
//! River gauge records are routinely interrupted by sensor failures and
//! outages, while global forecast products for the same reaches are gap-free
//! but systematically biased. This crate reconstructs the missing
//! observations by learning a bias-correction transfer from forecast to
//! gauge on a training period, and benchmarks that against classical
//! complete-data imputation under simulated missingness.
//!
//! Six methods are implemented behind one harness:
//!
//! * `qm` — quantile mapping between empirical CDFs, per station,
//! * `enet` — multi-output elastic net on all stations' forecasts,
//! * `gp` — multi-output Gaussian process with a shared squared-exponential
//!   kernel, exact inference via Cholesky,
//! * `knn` — k-nearest-neighbour regression on complete in-situ rows,
//! * `rf` — random-forest regression on complete in-situ rows,
//! * `gess-lookup` — the raw forecast value, verbatim.
//!
//! Skill is scored with KGE, NSE, and RMSE at the hidden cells only.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --release --example quickstart            # synth → impute → score
//! cargo run --release --example generate_dataset      # write insitu/forecast CSVs
//! cargo run --release --example missingness_protocol  # seeded masks
//! cargo run --release --example skill_metrics         # KGE / NSE / RMSE
//! cargo run --release --example quantile_mapping      # per-station transfer
//! cargo run --release --example elastic_net           # coordinate descent + CV
//! cargo run --release --example gaussian_process      # exact GP inference
//! cargo run --release --example knn_forest_baselines  # complete-data baselines
//! cargo run --release --example full_benchmark        # methods × rates × seeds
//! ```
//!
//! The thin `streamfill` binary exposes the same pipeline as `synth`,
//! `evaluate`, `impute`, and `report` subcommands; see the README.

pub mod baselines;
pub mod csvio;
pub mod date;
pub mod enet;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod metrics;
pub mod plan;
pub mod qm;
pub mod report;
pub mod rng;
pub mod series;
pub mod stats;
pub mod svg;
pub mod synthdata;

mod linalg;
mod parallel;

pub use date::Date;
pub use error::{Error, Result};
pub use series::{
    align, apply_mask, simulate_missingness, simulate_missingness_with, split_chronological,
    AlignedDataset, MaskMechanism, MissingnessMask, SeriesMatrix,
};
