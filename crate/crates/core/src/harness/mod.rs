//! Scenario runner: configuration, the simulation loop, the estimator cost
//! benchmark and offline scoring.

mod bench;
mod config;
mod io;
mod run;

use std::path::Path;

pub use bench::{bench_estimator_cost, cost_csv, loglog_slope, CostRow};
pub use config::{load_config, parse_config, BenchConfig, ScenarioConfig};
pub use io::{read_snapshots, snapshot_path, timepoint_label, write_atomic, write_snapshot};
pub use run::{
    generate_environment, prepare_environment, run_scenario, score_file, CutoffEvent, EstimationTiming,
    PositionRecord, RunRecord,
};

use crate::error::{Error, Result};
use crate::geometry::build_geometry;
use crate::scoring::{relevance_masks, LossAccumulator, ScoreReport, Timepoint};

/// Scores externally produced information-model snapshots against
/// ground-truth snapshots. Every timepoint in `info_dir` must also be in
/// `env_dir`; they are scored in label order.
pub fn score_offline(env_dir: &Path, info_dir: &Path, config: &ScenarioConfig) -> Result<ScoreReport> {
    let truth = read_snapshots(env_dir)?;
    let info = read_snapshots(info_dir)?;
    if info.is_empty() {
        return Err(Error::Format {
            what: "snapshot directory",
            message: format!("{} holds no snapshots", info_dir.display()),
        });
    }
    let geometry = build_geometry(config.geometry.as_str())?;
    let mut acc = LossAccumulator::new(relevance_masks(&geometry), config.score.clone());
    for (label, estimate) in &info {
        let t = truth.get(label).ok_or_else(|| Error::Format {
            what: "snapshot directory",
            message: format!("{} has no ground truth for timepoint `{label}`", env_dir.display()),
        })?;
        acc.add(Timepoint {
            truth: t.each_ref(),
            estimate: estimate.each_ref(),
        })?;
    }
    acc.finish()
}
