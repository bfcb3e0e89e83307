//! The scenario loop.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;

use super::config::ScenarioConfig;
use super::io::{timepoint_label, write_atomic, write_snapshot};
use crate::environment::{init_environment, EnvironmentTensor};
use crate::error::{Error, Result};
use crate::estimators::{estimate, AdaptiveDiskParams, Deadline, EstimatorConfig, InformationModel};
use crate::geometry::{build_geometry, Geometry};
use crate::planners::{build_planner, Planner, PlannerBudget, PlannerContext};
use crate::scoring::{diagnostic_loss, loss_series_csv, relevance_masks, LossAccumulator, LossPoint, ScoreReport, Timepoint};
use crate::world::{observations_csv, Move, Observation, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PositionRecord {
    pub timestep: u64,
    pub robot_id: usize,
    pub x: usize,
    pub y: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationTiming {
    /// Timesteps completed when the estimation ran.
    pub timestep: u64,
    pub observations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffEvent {
    pub timestep: u64,
    pub elapsed: f64,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config_hash: String,
    pub positions: Vec<PositionRecord>,
    pub observations: Vec<Observation>,
    pub loss_series: Vec<LossPoint>,
    /// Official loss over the end-of-day timepoints; absent without robots.
    pub report: Option<ScoreReport>,
    pub timings: Vec<EstimationTiming>,
    pub cutoff: Option<CutoffEvent>,
    pub warnings: Vec<String>,
}

impl RunRecord {
    pub fn final_loss(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.total_loss)
    }
}

/// Model scored before the first successful estimation.
fn fallback_model(g: &Geometry, estimator: &EstimatorConfig) -> InformationModel {
    let value = match estimator {
        EstimatorConfig::AdaptiveDisk(p) => p.default_value,
        EstimatorConfig::Gp(_) => AdaptiveDiskParams::default().default_value,
    };
    InformationModel::constant(g.name(), g.width(), g.height(), value)
}

/// Builds the environment of day `warmup_days`.
pub fn prepare_environment(config: &ScenarioConfig) -> Result<EnvironmentTensor> {
    let geometry = Arc::new(build_geometry(config.geometry.as_str())?);
    let mut env = init_environment(geometry, &config.environment)?;
    for _ in 0..config.warmup_days {
        env.advance_day(&config.environment);
    }
    Ok(env)
}

/// Exports the ground truth of `config.days` consecutive days, without
/// robots.
pub fn generate_environment(config: &ScenarioConfig, out: &Path) -> Result<u32> {
    let mut env = prepare_environment(config)?;
    let dir = out.join("env");
    for i in 0..config.days {
        let fields = env.fields();
        write_snapshot(&dir, &timepoint_label(env.day()), fields.each_ref())?;
        if i + 1 < config.days {
            env.advance_day(&config.environment);
        }
    }
    Ok(config.days)
}

/// Runs one scenario. When `out` is given, every artifact is written there.
pub fn run_scenario(config: &ScenarioConfig, out: Option<&Path>) -> Result<RunRecord> {
    if config.steps_per_day == 0 || config.robot_count() == 0 {
        if let Some(out) = out {
            generate_environment(config, out)?;
        }
        let record = RunRecord {
            config_hash: config.hash.clone(),
            positions: Vec::new(),
            observations: Vec::new(),
            loss_series: Vec::new(),
            report: None,
            timings: Vec::new(),
            cutoff: None,
            warnings: Vec::new(),
        };
        if let Some(out) = out {
            write_run_outputs(config, &record, out)?;
        }
        return Ok(record);
    }

    let env = prepare_environment(config)?;
    let geometry = Arc::clone(env.geometry());
    let mut world = World::new(env, config.environment.clone(), &config.robot_starts, config.steps_per_day)?;
    let planner_seed = config.planner_seed;
    let mut planners: Vec<Box<dyn Planner>> = config
        .planners
        .iter()
        .enumerate()
        .map(|(id, &kind)| build_planner(kind, &geometry, config.score.weights, planner_seed, id))
        .collect::<Result<_>>()?;
    let masks = relevance_masks(&geometry);
    let mut official = LossAccumulator::new(masks.clone(), config.score.clone());

    let total = config.total_steps();
    // The last observation happens before the last move, so a robot makes
    // one move fewer than it observes.
    let move_budget = (total - 1) as usize;
    let cutoff = Duration::from_secs_f64(config.feasibility_cutoff);
    let mut model: Option<InformationModel> = None;
    let mut estimating = true;
    let mut record = RunRecord {
        config_hash: config.hash.clone(),
        positions: Vec::with_capacity(total as usize * config.robot_count()),
        observations: Vec::new(),
        loss_series: Vec::new(),
        report: None,
        timings: Vec::new(),
        cutoff: None,
        warnings: Vec::new(),
    };

    for step in 0..total {
        let moves: Vec<Move> = planners
            .iter_mut()
            .zip(world.robots())
            .map(|(planner, robot)| {
                planner.next_move(&PlannerContext {
                    robot_id: robot.id,
                    position: robot.position,
                    geometry: &geometry,
                    budget: PlannerBudget {
                        total_steps: move_budget,
                        steps_used: step as usize,
                    },
                    model: model.as_ref(),
                })
            })
            .collect();
        for o in world.observe_and_move(&moves)? {
            record.positions.push(PositionRecord {
                timestep: o.timestep,
                robot_id: o.robot_id,
                x: o.x,
                y: o.y,
            });
        }

        let done = step + 1;
        let end_of_day = world.clock().timestep + 1 == config.steps_per_day;
        if estimating && (done % u64::from(config.estimator_stride) == 0 || end_of_day) {
            let deadline = Deadline::after(cutoff);
            match estimate(
                world.observations(),
                &config.estimator,
                geometry.name(),
                geometry.width(),
                geometry.height(),
                &deadline,
            ) {
                Ok((m, elapsed)) => {
                    record.timings.push(EstimationTiming {
                        timestep: done,
                        observations: m.observations,
                        seconds: elapsed.as_secs_f64(),
                    });
                    let truth = world.env().fields();
                    let point = diagnostic_loss(
                        done,
                        Timepoint {
                            truth: truth.each_ref(),
                            estimate: m.values.each_ref(),
                        },
                        &masks,
                        &config.score,
                    )?;
                    record.loss_series.push(point);
                    model = Some(m);
                }
                Err(Error::Cutoff { elapsed, .. }) => {
                    record.cutoff = Some(CutoffEvent { timestep: done, elapsed });
                    record.warnings.push(format!(
                        "timestep {done}: estimation exceeded the {} s feasibility cutoff; estimation stopped",
                        config.feasibility_cutoff
                    ));
                    estimating = false;
                }
                Err(e @ Error::Estimator { .. }) => {
                    record.warnings.push(format!("timestep {done}: {e}; keeping the previous model"));
                }
                Err(e) => return Err(e),
            }
        }

        if end_of_day {
            let truth = world.env().fields();
            let fallback;
            let current = match &model {
                Some(m) => m,
                None => {
                    fallback = fallback_model(&geometry, &config.estimator);
                    &fallback
                }
            };
            official.add(Timepoint {
                truth: truth.each_ref(),
                estimate: current.values.each_ref(),
            })?;
            if let (Some(out), true) = (out, config.export_snapshots) {
                let label = timepoint_label(world.env().day());
                write_snapshot(&out.join("env"), &label, truth.each_ref())?;
                write_snapshot(&out.join("info"), &label, current.values.each_ref())?;
            }
        }
        world.finish_step()?;
    }

    record.report = Some(official.finish()?);
    record.observations = world.observations().to_vec();
    record.warnings.extend(world.warnings().iter().cloned());
    if let Some(out) = out {
        write_run_outputs(config, &record, out)?;
    }
    Ok(record)
}

#[derive(Serialize)]
struct RunInfo<'a> {
    config_hash: &'a str,
    seed: u64,
    geometry: &'a str,
    estimator: &'a str,
    estimator_stride: u32,
    planners: Vec<&'a str>,
    robots: usize,
    steps_per_day: u32,
    days: u32,
    warmup_days: u32,
}

#[derive(Serialize)]
struct ScoreFile<'a> {
    run: RunInfo<'a>,
    report: &'a ScoreReport,
}

#[derive(Serialize)]
struct RecordFile<'a> {
    run: RunInfo<'a>,
    final_loss: Option<f64>,
    estimations: usize,
    feasibility_cutoff: f64,
    cutoff_timestep: Option<u64>,
    cutoff_elapsed: Option<f64>,
    warnings: &'a [String],
}

fn run_info(config: &ScenarioConfig) -> RunInfo<'_> {
    RunInfo {
        config_hash: &config.hash,
        seed: config.seed,
        geometry: config.geometry.as_str(),
        estimator: config.estimator.id(),
        estimator_stride: config.estimator_stride,
        planners: config.planners.iter().map(|p| p.as_str()).collect(),
        robots: config.robot_count(),
        steps_per_day: config.steps_per_day,
        days: config.days,
        warmup_days: config.warmup_days,
    }
}

/// Score report as written to `score.toml`.
pub fn score_file(config: &ScenarioConfig, report: &ScoreReport) -> String {
    toml::to_string(&ScoreFile {
        run: run_info(config),
        report,
    })
    .expect("score file serializes")
}

fn write_run_outputs(config: &ScenarioConfig, record: &RunRecord, out: &Path) -> Result<()> {
    let mut positions = String::from("timestep,robot_id,x,y\n");
    for p in &record.positions {
        let _ = writeln!(positions, "{},{},{},{}", p.timestep, p.robot_id, p.x, p.y);
    }
    write_atomic(&out.join("positions.csv"), positions.as_bytes())?;
    write_atomic(&out.join("observations.csv"), observations_csv(&record.observations).as_bytes())?;
    write_atomic(&out.join("loss.csv"), loss_series_csv(&record.loss_series).as_bytes())?;

    let mut timings = String::from("timestep,estimator,n_obs,seconds\n");
    for t in &record.timings {
        let _ = writeln!(timings, "{},{},{},{}", t.timestep, config.estimator.id(), t.observations, t.seconds);
    }
    write_atomic(&out.join("timings.csv"), timings.as_bytes())?;

    if let Some(report) = &record.report {
        write_atomic(&out.join("score.toml"), score_file(config, report).as_bytes())?;
    }
    let rec = RecordFile {
        run: run_info(config),
        final_loss: record.final_loss(),
        estimations: record.timings.len(),
        feasibility_cutoff: config.feasibility_cutoff,
        cutoff_timestep: record.cutoff.map(|c| c.timestep),
        cutoff_elapsed: record.cutoff.map(|c| c.elapsed),
        warnings: &record.warnings,
    };
    write_atomic(&out.join("record.toml"), toml::to_string(&rec).expect("record serializes").as_bytes())
}
