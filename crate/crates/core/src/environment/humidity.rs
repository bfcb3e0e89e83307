//! Soil humidity: constant evaporation plus periodic Gaussian showers.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng;

/// Showers are evaluated out to this many standard deviations; beyond it the
/// increment is below f32 resolution for any amplitude <= 1.
const SHOWER_CUTOFF_SIGMAS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct HumidityParams {
    /// Humidity lost per day.
    pub evaporation_rate: f64,
    /// Showers fall on days where `day % shower_period == 0`.
    pub shower_period: u32,
    pub showers_per_event: usize,
    /// Peak increment of one shower.
    pub shower_amplitude: f64,
    /// Effective shower extent along x, in cells. The standard deviation
    /// along x is `h / 8`.
    pub h: f64,
    /// Effective shower extent along y; standard deviation `w / 8`.
    pub w: f64,
    /// Uniform humidity on day 0.
    pub initial: f64,
    pub rng_seed: u64,
}

impl HumidityParams {
    pub fn new(rng_seed: u64) -> Self {
        HumidityParams {
            evaporation_rate: 0.04,
            shower_period: 3,
            showers_per_event: 3,
            shower_amplitude: 0.7,
            h: 40.0,
            w: 40.0,
            initial: 0.5,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.evaporation_rate,
            self.shower_amplitude,
            self.h,
            self.w,
            self.initial,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("humidity parameters must be finite"));
        }
        if self.evaporation_rate < 0.0 {
            return Err(Error::config("evaporation_rate must be >= 0"));
        }
        if self.shower_amplitude < 0.0 {
            return Err(Error::config("shower_amplitude must be >= 0"));
        }
        if self.shower_period == 0 {
            return Err(Error::config("shower_period must be at least 1 day"));
        }
        if self.h <= 0.0 || self.w <= 0.0 {
            return Err(Error::config("shower extents h and w must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.initial) {
            return Err(Error::config("initial humidity must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Adds one Gaussian bump centered at `(mu_x, mu_y)` with covariance
/// `diag((h/8)^2, (w/8)^2)`, scaled so its peak equals `amplitude`.
/// Values are not clamped here.
pub fn add_shower(field: &mut Grid<f32>, mu_x: f64, mu_y: f64, params: &HumidityParams) {
    let (sx, sy) = (params.h / 8.0, params.w / 8.0);
    let amplitude = params.shower_amplitude;
    if amplitude == 0.0 {
        return;
    }
    let span = |mu: f64, sigma: f64, len: usize| {
        let lo = (mu - SHOWER_CUTOFF_SIGMAS * sigma).ceil().max(0.0) as usize;
        let hi = ((mu + SHOWER_CUTOFF_SIGMAS * sigma).floor().max(-1.0) + 1.0).min(len as f64) as usize;
        lo..hi.max(lo)
    };
    let xs = span(mu_x, sx, field.width());
    let ys = span(mu_y, sy, field.height());
    // The density is separable; precompute the x factors once.
    let fx: Vec<f64> = xs
        .clone()
        .map(|x| {
            let d = (x as f64 - mu_x) / sx;
            (-0.5 * d * d).exp()
        })
        .collect();
    for y in ys {
        let d = (y as f64 - mu_y) / sy;
        let fy = amplitude * (-0.5 * d * d).exp();
        let start = field.index(xs.start, y);
        let row = &mut field.as_mut_slice()[start..start + fx.len()];
        for (cell, f) in row.iter_mut().zip(&fx) {
            *cell = (f64::from(*cell) + fy * f) as f32;
        }
    }
}

/// One day of humidity dynamics on `day` (the day being completed).
pub fn step_humidity(field: &mut Grid<f32>, params: &HumidityParams, day: u32) {
    let evap = params.evaporation_rate;
    for v in field.as_mut_slice() {
        *v = (f64::from(*v) - evap).clamp(0.0, 1.0) as f32;
    }
    if !day.is_multiple_of(params.shower_period) || params.showers_per_event == 0 {
        return;
    }
    let mut rng = rng::stream(params.rng_seed, &format!("humidity/showers/{day}"));
    let (w, h) = (field.width() as f64, field.height() as f64);
    for _ in 0..params.showers_per_event {
        let mu_x = rng.gen::<f64>() * w;
        let mu_y = rng.gen::<f64>() * h;
        add_shower(field, mu_x, mu_y, params);
    }
    for v in field.as_mut_slice() {
        *v = v.clamp(0.0, 1.0);
    }
}
