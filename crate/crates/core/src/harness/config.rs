//! TOML scenario configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::environment::{EnvironmentParams, EpidemicParams, HumidityParams, Kernel, Measurement};
use crate::error::{Error, Result};
use crate::estimators::{AdaptiveDiskParams, EstimatorConfig, GpParams, Hyper};
use crate::geometry::GeometryName;
use crate::planners::PlannerKind;
use crate::rng;
use crate::scoring::{Asymmetry, ScoreConfig};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    geometry: Option<String>,
    steps_per_day: Option<u32>,
    days: Option<u32>,
    warmup_days: Option<u32>,
    estimator_stride: Option<u32>,
    feasibility_cutoff: Option<f64>,
    output_dir: Option<PathBuf>,
    export_snapshots: Option<bool>,
    planner: Option<String>,
    planners: Option<Vec<String>>,
    planner_seed: Option<u64>,
    estimator: Option<String>,
    #[serde(default)]
    robots: RawRobots,
    #[serde(default)]
    adaptive_disk: RawAdaptiveDisk,
    #[serde(default)]
    gp: RawGp,
    #[serde(default)]
    environment: RawEnvironment,
    #[serde(default)]
    score: RawScore,
    bench: Option<RawBench>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobots {
    count: Option<usize>,
    starts: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerMeasurement {
    tylcv: Option<f64>,
    ccr: Option<f64>,
    humidity: Option<f64>,
}

impl PerMeasurement {
    fn apply(&self, target: &mut [f64; 3]) {
        for (i, v) in [self.tylcv, self.ccr, self.humidity].into_iter().enumerate() {
            if let Some(v) = v {
                target[i] = v;
            }
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdaptiveDisk {
    r_min: Option<u32>,
    #[serde(default)]
    default_value: PerMeasurement,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGp {
    length_scale: Option<f64>,
    length_scale_bounds: Option<[f64; 2]>,
    signal_variance: Option<f64>,
    signal_variance_bounds: Option<[f64; 2]>,
    noise_variance: Option<f64>,
    noise_variance_bounds: Option<[f64; 2]>,
    restarts: Option<usize>,
    jitter: Option<f64>,
    max_iterations: Option<usize>,
    optimize: Option<bool>,
    center_targets: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEpidemic {
    p_total: Option<f64>,
    infect_duration: Option<u32>,
    seeds: Option<usize>,
    kernel_radius: Option<usize>,
    kernel: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHumidity {
    evaporation_rate: Option<f64>,
    shower_period: Option<u32>,
    showers_per_event: Option<usize>,
    shower_amplitude: Option<f64>,
    h: Option<f64>,
    w: Option<f64>,
    initial: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvironment {
    #[serde(default)]
    tylcv: RawEpidemic,
    #[serde(default)]
    ccr: RawEpidemic,
    #[serde(default)]
    humidity: RawHumidity,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAsymmetry {
    c_minus: Option<f64>,
    c_plus: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScore {
    #[serde(default)]
    weights: PerMeasurement,
    #[serde(default)]
    tylcv: RawAsymmetry,
    #[serde(default)]
    ccr: RawAsymmetry,
    #[serde(default)]
    humidity: RawAsymmetry,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBench {
    geometries: Option<Vec<String>>,
    estimators: Option<Vec<String>>,
    observation_counts: Option<Vec<usize>>,
    min_seconds: Option<f64>,
    max_repeats: Option<usize>,
}

/// Settings of the estimator cost benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub geometries: Vec<GeometryName>,
    pub estimators: Vec<EstimatorConfig>,
    /// Ascending.
    pub observation_counts: Vec<usize>,
    /// Fast estimations are repeated until this much time has accumulated;
    /// the fastest repeat is reported.
    pub min_seconds: f64,
    pub max_repeats: usize,
}

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub geometry: GeometryName,
    pub steps_per_day: u32,
    pub days: u32,
    /// Days the environment evolves before robots start.
    pub warmup_days: u32,
    pub estimator_stride: u32,
    pub feasibility_cutoff: f64,
    pub output_dir: Option<PathBuf>,
    pub export_snapshots: bool,
    pub robot_starts: Vec<(usize, usize)>,
    pub planners: Vec<PlannerKind>,
    /// Seed of the randomized planners; derived from `seed` unless set.
    pub planner_seed: u64,
    pub estimator: EstimatorConfig,
    pub environment: EnvironmentParams,
    pub score: ScoreConfig,
    pub bench: Option<BenchConfig>,
    /// SHA-256 of the configuration text and effective seed.
    pub hash: String,
}

impl ScenarioConfig {
    pub fn total_steps(&self) -> u64 {
        u64::from(self.steps_per_day) * u64::from(self.days)
    }

    pub fn robot_count(&self) -> usize {
        self.robot_starts.len()
    }
}

fn bounds(b: Option<[f64; 2]>, default: (f64, f64)) -> (f64, f64) {
    b.map_or(default, |[lo, hi]| (lo, hi))
}

fn epidemic(raw: &RawEpidemic, mut p: EpidemicParams, m: Measurement) -> Result<EpidemicParams> {
    if let Some(v) = raw.p_total {
        p.p_total = v;
    }
    if let Some(v) = raw.infect_duration {
        p.infect_duration = v;
    }
    if let Some(v) = raw.seeds {
        p.seeds = v;
    }
    match (&raw.kernel, raw.kernel_radius) {
        (Some(_), Some(_)) => {
            return Err(Error::config(format!(
                "environment.{m}: give either `kernel` or `kernel_radius`, not both"
            )))
        }
        (Some(rows), None) => {
            p.kernel = Kernel::from_rows(rows).map_err(|e| Error::config(format!("environment.{m}.kernel: {e}")))?
        }
        (None, Some(r)) => {
            p.kernel = Kernel::inverse_square(r)
                .map_err(|e| Error::config(format!("environment.{m}.kernel_radius: {e}")))?
        }
        (None, None) => {}
    }
    p.validate().map_err(|e| Error::config(format!("environment.{m}: {e}")))?;
    Ok(p)
}

fn resolve_estimator(name: &str, raw: &RawConfig, seed: u64) -> Result<EstimatorConfig> {
    let config = match name {
        "adaptive-disk" => {
            let mut p = AdaptiveDiskParams::default();
            if let Some(r) = raw.adaptive_disk.r_min {
                p.r_min = r;
            }
            raw.adaptive_disk.default_value.apply(&mut p.default_value);
            EstimatorConfig::AdaptiveDisk(p)
        }
        "gp" => {
            let g = &raw.gp;
            let d = GpParams::default();
            EstimatorConfig::Gp(GpParams {
                init: Hyper {
                    length_scale: g.length_scale.unwrap_or(d.init.length_scale),
                    signal_variance: g.signal_variance.unwrap_or(d.init.signal_variance),
                    noise_variance: g.noise_variance.unwrap_or(d.init.noise_variance),
                },
                length_scale_bounds: bounds(g.length_scale_bounds, d.length_scale_bounds),
                signal_variance_bounds: bounds(g.signal_variance_bounds, d.signal_variance_bounds),
                noise_variance_bounds: bounds(g.noise_variance_bounds, d.noise_variance_bounds),
                restarts: g.restarts.unwrap_or(d.restarts),
                jitter: g.jitter.unwrap_or(d.jitter),
                max_iterations: g.max_iterations.unwrap_or(d.max_iterations),
                optimize: g.optimize.unwrap_or(d.optimize),
                center_targets: g.center_targets.unwrap_or(d.center_targets),
                seed: rng::derive_seed(seed, "estimator/gp"),
            })
        }
        other => {
            return Err(Error::config(format!(
                "unknown estimator `{other}` (expected adaptive-disk or gp)"
            )))
        }
    };
    config.validate()?;
    Ok(config)
}

/// Parses and validates a configuration. `seed_override` replaces the
/// file's seed (which is otherwise mandatory).
pub fn parse_config(text: &str, seed_override: Option<u64>) -> Result<ScenarioConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
    let seed = seed_override
        .or(raw.seed)
        .ok_or_else(|| Error::config("`seed` is required"))?;

    let geometry: GeometryName = raw
        .geometry
        .as_deref()
        .ok_or_else(|| Error::config("`geometry` is required"))?
        .parse()?;
    let steps_per_day = raw.steps_per_day.unwrap_or(0);
    let days = raw.days.unwrap_or(1);
    let estimator_stride = raw.estimator_stride.unwrap_or(1);
    if estimator_stride == 0 {
        return Err(Error::config("estimator_stride must be >= 1"));
    }
    let feasibility_cutoff = raw.feasibility_cutoff.unwrap_or(10.0);
    if !(feasibility_cutoff > 0.0) {
        return Err(Error::config("feasibility_cutoff must be > 0 seconds"));
    }

    let robot_starts: Vec<(usize, usize)> = match (&raw.robots.starts, raw.robots.count) {
        (Some(starts), count) => {
            if count.is_some_and(|c| c != starts.len()) {
                return Err(Error::config(format!(
                    "robots.count = {} but {} starts given",
                    count.unwrap_or_default(),
                    starts.len()
                )));
            }
            starts.iter().map(|&[x, y]| (x, y)).collect()
        }
        (None, count) => vec![(0, 0); count.unwrap_or(if steps_per_day > 0 { 1 } else { 0 })],
    };

    let planners: Vec<PlannerKind> = match (&raw.planners, &raw.planner) {
        (Some(_), Some(_)) => return Err(Error::config("give either `planner` or `planners`, not both")),
        (Some(list), None) => {
            if list.len() != robot_starts.len() {
                return Err(Error::config(format!(
                    "{} planners for {} robots",
                    list.len(),
                    robot_starts.len()
                )));
            }
            list.iter().map(|s| s.parse()).collect::<Result<_>>()?
        }
        (None, Some(name)) => vec![name.parse()?; robot_starts.len()],
        (None, None) if robot_starts.is_empty() => Vec::new(),
        (None, None) => return Err(Error::config("`planner` is required when robots are present")),
    };

    let estimator = resolve_estimator(raw.estimator.as_deref().unwrap_or("adaptive-disk"), &raw, seed)?;

    let mut environment = EnvironmentParams::from_seed(seed);
    environment.tylcv = epidemic(&raw.environment.tylcv, environment.tylcv, Measurement::Tylcv)?;
    environment.ccr = epidemic(&raw.environment.ccr, environment.ccr, Measurement::Ccr)?;
    let h = &raw.environment.humidity;
    let hp: &mut HumidityParams = &mut environment.humidity;
    hp.evaporation_rate = h.evaporation_rate.unwrap_or(hp.evaporation_rate);
    hp.shower_period = h.shower_period.unwrap_or(hp.shower_period);
    hp.showers_per_event = h.showers_per_event.unwrap_or(hp.showers_per_event);
    hp.shower_amplitude = h.shower_amplitude.unwrap_or(hp.shower_amplitude);
    hp.h = h.h.unwrap_or(hp.h);
    hp.w = h.w.unwrap_or(hp.w);
    hp.initial = h.initial.unwrap_or(hp.initial);
    environment
        .humidity
        .validate()
        .map_err(|e| Error::config(format!("environment.humidity: {e}")))?;

    let mut score = ScoreConfig::default();
    raw.score.weights.apply(&mut score.weights);
    for (i, a) in [&raw.score.tylcv, &raw.score.ccr, &raw.score.humidity].into_iter().enumerate() {
        let cur = score.asymmetry[i];
        score.asymmetry[i] = Asymmetry {
            c_minus: a.c_minus.unwrap_or(cur.c_minus),
            c_plus: a.c_plus.unwrap_or(cur.c_plus),
        };
    }
    score.validate()?;

    let bench = match &raw.bench {
        None => None,
        Some(b) => {
            let geometries = b
                .geometries
                .clone()
                .unwrap_or_else(|| vec![geometry.as_str().to_string()])
                .iter()
                .map(|g| g.parse())
                .collect::<Result<Vec<GeometryName>>>()?;
            let estimators = b
                .estimators
                .clone()
                .unwrap_or_else(|| vec!["adaptive-disk".into(), "gp".into()])
                .iter()
                .map(|e| resolve_estimator(e, &raw, seed))
                .collect::<Result<Vec<_>>>()?;
            let observation_counts = b
                .observation_counts
                .clone()
                .unwrap_or_else(|| vec![25, 50, 100, 200, 400, 800]);
            if observation_counts.is_empty() || observation_counts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config("bench.observation_counts must be non-empty and strictly ascending"));
            }
            let min_seconds = b.min_seconds.unwrap_or(0.2);
            if !(min_seconds >= 0.0) {
                return Err(Error::config("bench.min_seconds must be >= 0"));
            }
            Some(BenchConfig {
                geometries,
                estimators,
                observation_counts,
                min_seconds,
                max_repeats: b.max_repeats.unwrap_or(50).max(1),
            })
        }
    };

    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher.update(seed.to_le_bytes());
    let hash = hex::encode(hasher.finalize());

    Ok(ScenarioConfig {
        seed,
        geometry,
        steps_per_day,
        days,
        warmup_days: raw.warmup_days.unwrap_or(0),
        estimator_stride,
        feasibility_cutoff,
        output_dir: raw.output_dir,
        export_snapshots: raw.export_snapshots.unwrap_or(true),
        robot_starts,
        planners,
        planner_seed: raw.planner_seed.unwrap_or_else(|| rng::derive_seed(seed, "planners")),
        estimator,
        environment,
        score,
        bench,
        hash,
    })
}

/// Reads and parses a configuration file. Relative `output_dir` values are
/// resolved against the file's directory.
pub fn load_config(path: &Path, seed_override: Option<u64>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config file {}: {e}", path.display())))?;
    let mut config = parse_config(&text, seed_override)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    if let Some(dir) = &config.output_dir {
        if dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            config.output_dir = Some(base.join(dir));
        }
    }
    Ok(config)
}
