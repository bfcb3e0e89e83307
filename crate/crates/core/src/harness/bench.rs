//! Wall-clock cost of the estimators as the observation count grows.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Duration;

use rand::Rng;

use super::config::{BenchConfig, ScenarioConfig};
use crate::environment::init_environment;
use crate::error::{Error, Result};
use crate::estimators::{estimate, Deadline, EstimatorConfig};
use crate::geometry::{build_geometry, GeometryName};
use crate::rng;
use crate::world::Observation;

#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub geometry: GeometryName,
    pub estimator: String,
    pub n_obs: usize,
    /// Fastest of the repeats; for a cutoff, the time at which the
    /// estimation was abandoned.
    pub seconds: f64,
    pub cutoff_hit: bool,
}

/// `n` observations at uniformly random cells, read from `env`.
fn random_observations(env: &crate::EnvironmentTensor, n: usize, seed: u64) -> Vec<Observation> {
    let mut rng = rng::stream(seed, &format!("bench/observations/{n}"));
    let (w, h) = (env.width(), env.height());
    (0..n)
        .map(|i| {
            let (x, y) = (rng.gen_range(0..w), rng.gen_range(0..h));
            Observation {
                robot_id: 0,
                x,
                y,
                timestep: i as u64,
                day: env.day(),
                values: env.read_point(x, y),
            }
        })
        .collect()
}

/// Times one full estimation (all three fields), repeating fast ones.
/// Returns `(seconds, cutoff_hit)`.
fn time_estimation(
    obs: &[Observation],
    estimator: &EstimatorConfig,
    geometry: GeometryName,
    width: usize,
    height: usize,
    cutoff: Duration,
    bench: &BenchConfig,
) -> Result<(f64, bool)> {
    let mut best = f64::INFINITY;
    let mut spent = 0.0;
    for _ in 0..bench.max_repeats {
        let deadline = Deadline::after(cutoff);
        match estimate(obs, estimator, geometry.as_str(), width, height, &deadline) {
            Ok((_, elapsed)) => {
                let s = elapsed.as_secs_f64();
                best = best.min(s);
                spent += s;
                if s > cutoff.as_secs_f64() {
                    return Ok((s, true));
                }
            }
            Err(Error::Cutoff { elapsed, .. }) => return Ok((elapsed, true)),
            Err(e) => return Err(e),
        }
        if spent >= bench.min_seconds {
            break;
        }
    }
    Ok((best, false))
}

/// Runs the cost benchmark described by `config.bench`. For each geometry
/// and estimator the observation count escalates until one estimation
/// exceeds the feasibility cutoff; larger counts are not tested.
pub fn bench_estimator_cost(config: &ScenarioConfig, mut progress: impl FnMut(&CostRow)) -> Result<Vec<CostRow>> {
    let bench = config
        .bench
        .as_ref()
        .ok_or_else(|| Error::config("bench-cost needs a [bench] table"))?;
    let cutoff = Duration::from_secs_f64(config.feasibility_cutoff);
    let mut rows = Vec::new();
    for &geometry in &bench.geometries {
        let g = Arc::new(build_geometry(geometry.as_str())?);
        let env = init_environment(Arc::clone(&g), &config.environment)?;
        for estimator in &bench.estimators {
            for &n in &bench.observation_counts {
                let obs = random_observations(&env, n, config.seed);
                let (seconds, cutoff_hit) =
                    time_estimation(&obs, estimator, geometry, g.width(), g.height(), cutoff, bench)?;
                let row = CostRow {
                    geometry,
                    estimator: estimator.id().to_string(),
                    n_obs: n,
                    seconds,
                    cutoff_hit,
                };
                progress(&row);
                rows.push(row);
                if cutoff_hit {
                    break;
                }
            }
        }
    }
    Ok(rows)
}

/// CSV with header `geometry,estimator,n_obs,seconds,cutoff_hit`.
pub fn cost_csv(rows: &[CostRow]) -> String {
    let mut out = String::from("geometry,estimator,n_obs,seconds,cutoff_hit\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.geometry, r.estimator, r.n_obs, r.seconds, r.cutoff_hit);
    }
    out
}

/// Least-squares slope of `ln(seconds)` against `ln(n)`. `None` with fewer
/// than two distinct counts.
pub fn loglog_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, s)| *n > 0 && *s > 0.0)
        .map(|&(n, s)| ((n as f64).ln(), s.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
