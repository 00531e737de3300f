//! Regret benchmarks on Gaussian-process utility landscapes.

mod env;
mod experiment;
mod export;
mod landscape;

pub use env::{normal_cdf, DuelEnvironment};
pub use experiment::{
    aggregate, derive_seed, run_experiment, run_trial, ExperimentSpec, RegretCurve, RegretTrace,
};
pub use export::{curves_to_csv, curves_to_svg, export_results, ExportPaths, CSV_HEADER};
pub use landscape::{sample_gp_utility, GpSampler, UtilityField};
