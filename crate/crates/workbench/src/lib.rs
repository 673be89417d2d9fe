//! File formats, plots and run orchestration around [`ftvc_core`].
//!
//! - [`scenario`]: the declarative scenario file format.
//! - [`table`]: fixed-schema CSV logs.
//! - [`plot`]: SVG time-series and trajectory figures.

use std::path::{Path, PathBuf};

use ftvc_core::sim::{compute_metrics, run_scenario, Metrics, RunLog, Scenario};

mod error;
pub mod plot;
pub mod scenario;
pub mod table;

pub use error::{Error, Result};

/// Actuator names in actuator-vector order, as used in CSV headers and
/// event tables.
pub const ACTUATOR_COLUMNS: [&str; 12] =
    ["d_fl", "d_fr", "d_rl", "d_rr", "T_fl", "T_fr", "T_rl", "T_rr", "fz_fl", "fz_fr", "fz_rl", "fz_rr"];

/// Result of [`run_to_dir`].
#[derive(Debug)]
pub struct RunOutput {
    pub log: RunLog,
    pub metrics: Metrics,
    pub csv: PathBuf,
    pub svgs: Vec<PathBuf>,
}

/// Runs `sc` and writes `<name>_<controller>.csv` (plus two SVG figures
/// when `svg` is set) into `dir`, creating it if needed.
pub fn run_to_dir(sc: &Scenario, dir: &Path, svg: bool) -> Result<RunOutput> {
    let log = run_scenario(sc)?;
    let metrics = compute_metrics(&log);
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = format!("{}_{}", sc.name, sc.controller.name());
    let csv = dir.join(format!("{stem}.csv"));
    table::Table::from_log(&log).save(&csv)?;
    let mut svgs = Vec::new();
    if svg {
        let series = dir.join(format!("{stem}_series.svg"));
        plot::time_series(&log, &series)?;
        let path = dir.join(format!("{stem}_trajectory.svg"));
        plot::trajectory(&[(sc.controller.name(), &log)], sc.obstacle_x, &path)?;
        svgs.extend([series, path]);
    }
    Ok(RunOutput { log, metrics, csv, svgs })
}
