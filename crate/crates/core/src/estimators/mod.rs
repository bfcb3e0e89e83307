//! Estimators rebuild an information model from the observation log.

mod adaptive_disk;
mod gp;
mod linalg;

use std::time::{Duration, Instant};

pub use adaptive_disk::{disk_radius, estimate_adaptive_disk, AdaptiveDiskParams};
pub use gp::{gp_fit, log_marginal_likelihood, log_marginal_likelihood_grad, FittedGp, GpParams, Hyper};

use crate::environment::Measurement;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng;
use crate::world::Observation;

/// Cells evaluated per work unit when filling a grid.
pub(crate) const PREDICTION_BLOCK: usize = 1 << 16;

/// Wall-clock limit for one estimation.
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    start: Instant,
    limit: Option<Duration>,
}

impl Deadline {
    pub fn none() -> Self {
        Deadline {
            start: Instant::now(),
            limit: None,
        }
    }

    pub fn after(limit: Duration) -> Self {
        Deadline {
            start: Instant::now(),
            limit: Some(limit),
        }
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    /// Fails with [`Error::Cutoff`] once the limit has passed.
    pub fn check(&self, estimator: &str) -> Result<()> {
        match self.limit {
            Some(limit) if self.start.elapsed() > limit => Err(Error::Cutoff {
                estimator: estimator.to_string(),
                elapsed: self.start.elapsed().as_secs_f64(),
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorConfig {
    AdaptiveDisk(AdaptiveDiskParams),
    Gp(GpParams),
}

impl EstimatorConfig {
    pub fn id(&self) -> &'static str {
        match self {
            EstimatorConfig::AdaptiveDisk(_) => "adaptive-disk",
            EstimatorConfig::Gp(_) => "gp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EstimatorConfig::AdaptiveDisk(p) => p.validate(),
            EstimatorConfig::Gp(p) => p.validate(),
        }
    }
}

/// The estimator's reconstruction of one time slice of the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationModel {
    pub geometry: String,
    pub values: [Grid<f32>; 3],
    /// Posterior variance, for estimators that provide one.
    pub uncertainty: [Option<Grid<f32>>; 3],
    pub estimator: String,
    pub observations: usize,
}

impl InformationModel {
    /// A model holding `value[m]` everywhere.
    pub fn constant(geometry: &str, width: usize, height: usize, value: [f64; 3]) -> Self {
        InformationModel {
            geometry: geometry.to_string(),
            values: value.map(|v| Grid::filled(width, height, v as f32)),
            uncertainty: [None, None, None],
            estimator: "constant".into(),
            observations: 0,
        }
    }

    pub fn field(&self, m: Measurement) -> &Grid<f32> {
        &self.values[m.index()]
    }

    pub fn width(&self) -> usize {
        self.values[0].width()
    }

    pub fn height(&self) -> usize {
        self.values[0].height()
    }
}

fn estimate_one(
    obs: &[Observation],
    m: Measurement,
    config: &EstimatorConfig,
    width: usize,
    height: usize,
    deadline: &Deadline,
) -> Result<(Grid<f32>, Option<Grid<f32>>)> {
    match config {
        EstimatorConfig::AdaptiveDisk(p) => {
            estimate_adaptive_disk(obs, m, width, height, p, deadline).map(|g| (g, None))
        }
        EstimatorConfig::Gp(p) => {
            if obs.is_empty() {
                let prior = Grid::filled(width, height, p.init.signal_variance as f32);
                return Ok((Grid::filled(width, height, 0.0), Some(prior)));
            }
            let points: Vec<[f64; 2]> = obs.iter().map(|o| [o.x as f64, o.y as f64]).collect();
            let targets: Vec<f64> = obs.iter().map(|o| o.values[m.index()]).collect();
            let params = GpParams {
                seed: rng::derive_seed(p.seed, m.as_str()),
                ..p.clone()
            };
            let fitted = gp_fit(&points, &targets, &params, deadline)?;
            let (mean, var) = fitted.predict_grid(width, height, deadline)?;
            Ok((mean, Some(var)))
        }
    }
}

/// Runs the configured estimator on every measurement. Returns the model
/// and the wall-clock time spent.
pub fn estimate(
    obs: &[Observation],
    config: &EstimatorConfig,
    geometry: &str,
    width: usize,
    height: usize,
    deadline: &Deadline,
) -> Result<(InformationModel, Duration)> {
    let start = Instant::now();
    let id = config.id();
    let mut values = Vec::with_capacity(3);
    let mut uncertainty = Vec::with_capacity(3);
    for m in Measurement::ALL {
        let (v, u) = estimate_one(obs, m, config, width, height, deadline).map_err(|e| match e {
            Error::Estimator { message, .. } => Error::Estimator {
                estimator: id.to_string(),
                message: format!("{m}: {message}"),
            },
            Error::Cutoff { elapsed, .. } => Error::Cutoff {
                estimator: id.to_string(),
                elapsed,
            },
            other => other,
        })?;
        values.push(v);
        uncertainty.push(u);
    }
    let model = InformationModel {
        geometry: geometry.to_string(),
        values: values.try_into().expect("three fields"),
        uncertainty: uncertainty.try_into().expect("three fields"),
        estimator: id.to_string(),
        observations: obs.len(),
    };
    Ok((model, start.elapsed()))
}
