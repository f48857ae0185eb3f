//! Orchestration for the Thirring scattering experiments: configuration,
//! the simulate/analyze pipeline and its artifacts.

// Negated float comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod summary;

use std::fs;
use std::path::Path;

use log::info;

pub use config::RunConfig;
pub use error::CliError;
pub use summary::RunSummary;

pub fn cmd_simulate(config: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    pipeline::simulate(&cfg, out)?;
    Ok(())
}

/// Recomputes the analysis from the artifacts in `out` and writes
/// series.csv, profiles.csv, fprofile.csv and summary.json.
pub fn cmd_analyze(out: &Path) -> Result<RunSummary, CliError> {
    let a = pipeline::load_artifacts(out)?;
    let hgrid = a.config.hyper_grid()?;
    let analysis = pipeline::analyze_samples(&a.config, &hgrid, &a.states)?;
    analysis.write_series_and_profiles(out)?;
    analysis.write_fprofile(out)?;
    let summary = RunSummary::new(&a.record, &analysis, &a.exterior);
    let json = summary.to_json(&a.config);
    fs::write(out.join(artifacts::SUMMARY), serde_json::to_string_pretty(&json).expect("json") + "\n")?;
    for (name, ok) in summary.flags() {
        info!("{name}: {}", if ok { "pass" } else { "fail" });
    }
    Ok(summary)
}

/// Validates the configuration before touching `out`, then simulates and analyzes.
pub fn cmd_all(config: &Path, out: &Path) -> Result<RunSummary, CliError> {
    let cfg = RunConfig::load(config)?;
    pipeline::simulate(&cfg, out)?;
    cmd_analyze(out)
}
