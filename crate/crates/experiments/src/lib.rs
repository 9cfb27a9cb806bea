//! Scenario registry, runners, artifacts and verification rules behind the
//! `aftsim` command-line tool.

pub mod artifacts;
pub mod error;
pub mod run;
pub mod scenario;
pub mod verify;

use std::path::{Path, PathBuf};

pub use artifacts::{read_artifacts, write_artifacts, Artifacts, Manifest};
pub use error::{CliError, CliResult};
pub use run::run_scenario;
pub use scenario::{Exhibit, Scenario, ScenarioFile};
pub use verify::{verify_artifacts, verify_dir, Check, Report};

/// Runs a scenario and writes its artifacts under `out`. Returns the scenario directory.
pub fn run_and_write(s: &Scenario, out: &Path, threads: Option<usize>) -> CliResult<PathBuf> {
    let artifacts = aft_core::parallel::with_threads(threads, || run_scenario(s))?;
    write_artifacts(out, s, &artifacts)
}
