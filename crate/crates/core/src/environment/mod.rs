//! Ground-truth environment: two SIRV disease layers and a humidity field.

mod epidemic;
mod humidity;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use epidemic::{CellState, Census, EpidemicLayer, EpidemicParams, Kernel};
pub use humidity::{add_shower, step_humidity, HumidityParams};

use crate::error::{Error, Result};
use crate::geometry::{susceptibility_mask, CropKind, Geometry};
use crate::grid::Grid;
use crate::rng;

/// The three measured quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measurement {
    /// Tomato yellow leaf curl virus, on tomatoes.
    Tylcv,
    /// Charcoal rot, on strawberries.
    Ccr,
    /// Soil humidity.
    Humidity,
}

impl Measurement {
    pub const ALL: [Measurement; 3] = [Measurement::Tylcv, Measurement::Ccr, Measurement::Humidity];
    pub const DISEASES: [Measurement; 2] = [Measurement::Tylcv, Measurement::Ccr];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Measurement::Tylcv => "tylcv",
            Measurement::Ccr => "ccr",
            Measurement::Humidity => "humidity",
        }
    }

    pub fn is_disease(self) -> bool {
        self.host_crop().is_some()
    }

    /// The crop a disease lives on.
    pub fn host_crop(self) -> Option<CropKind> {
        match self {
            Measurement::Tylcv => Some(CropKind::Tomato),
            Measurement::Ccr => Some(CropKind::Strawberry),
            Measurement::Humidity => None,
        }
    }
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measurement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measurement::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown measurement `{s}`")))
    }
}

/// Parameters of every environment model.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentParams {
    pub tylcv: EpidemicParams,
    pub ccr: EpidemicParams,
    pub humidity: HumidityParams,
}

impl EnvironmentParams {
    /// Default models, each on its own stream derived from `seed`.
    pub fn from_seed(seed: u64) -> Self {
        EnvironmentParams {
            tylcv: EpidemicParams::tylcv(rng::derive_seed(seed, "env/tylcv")),
            ccr: EpidemicParams::ccr(rng::derive_seed(seed, "env/ccr")),
            humidity: HumidityParams::new(rng::derive_seed(seed, "env/humidity")),
        }
    }

    pub fn epidemic(&self, m: Measurement) -> &EpidemicParams {
        match m {
            Measurement::Tylcv => &self.tylcv,
            Measurement::Ccr => &self.ccr,
            Measurement::Humidity => panic!("humidity has no epidemic parameters"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tylcv.validate()?;
        self.ccr.validate()?;
        self.humidity.validate()
    }
}

/// Ground truth `E(x, y, t, :)` at the current day.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentTensor {
    geometry: Arc<Geometry>,
    day: u32,
    tylcv: EpidemicLayer,
    ccr: EpidemicLayer,
    humidity: Grid<f32>,
}

fn epidemic_key(params: &EpidemicParams, m: Measurement) -> u64 {
    rng::derive_seed(params.rng_seed, &format!("epidemic/{m}/spread"))
}

/// Builds the day-0 environment.
pub fn init_environment(
    geometry: Arc<Geometry>,
    params: &EnvironmentParams,
) -> Result<EnvironmentTensor> {
    params.validate()?;
    let mut layers = Vec::with_capacity(2);
    for m in Measurement::DISEASES {
        let p = params.epidemic(m);
        let mask = susceptibility_mask(&geometry, m)?;
        let mut layer = EpidemicLayer::healthy(&mask.values);
        let mut rng = rng::stream(p.rng_seed, &format!("epidemic/{m}/seeding"));
        layer
            .seed_infections(p.seeds, &mut rng)
            .map_err(|e| Error::config(format!("{m}: {e}")))?;
        layers.push(layer);
    }
    let ccr = layers.pop().expect("two layers");
    let tylcv = layers.pop().expect("two layers");
    let humidity = Grid::filled(
        geometry.width(),
        geometry.height(),
        params.humidity.initial as f32,
    );
    Ok(EnvironmentTensor {
        geometry,
        day: 0,
        tylcv,
        ccr,
        humidity,
    })
}

impl EnvironmentTensor {
    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.geometry
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn width(&self) -> usize {
        self.geometry.width()
    }

    pub fn height(&self) -> usize {
        self.geometry.height()
    }

    pub fn layer(&self, m: Measurement) -> &EpidemicLayer {
        match m {
            Measurement::Tylcv => &self.tylcv,
            Measurement::Ccr => &self.ccr,
            Measurement::Humidity => panic!("humidity is not an epidemic layer"),
        }
    }

    pub fn layer_mut(&mut self, m: Measurement) -> &mut EpidemicLayer {
        match m {
            Measurement::Tylcv => &mut self.tylcv,
            Measurement::Ccr => &mut self.ccr,
            Measurement::Humidity => panic!("humidity is not an epidemic layer"),
        }
    }

    pub fn humidity(&self) -> &Grid<f32> {
        &self.humidity
    }

    pub fn humidity_mut(&mut self) -> &mut Grid<f32> {
        &mut self.humidity
    }

    /// One day of disease spread for `m`.
    pub fn step_epidemic(&mut self, m: Measurement, params: &EpidemicParams) -> Result<()> {
        if !m.is_disease() {
            return Err(Error::contract("step_epidemic needs a disease measurement"));
        }
        let key = epidemic_key(params, m);
        let day = self.day;
        self.layer_mut(m).step(params, key, day);
        Ok(())
    }

    /// One day of evaporation and showers.
    pub fn step_humidity(&mut self, params: &HumidityParams) {
        step_humidity(&mut self.humidity, params, self.day);
    }

    /// Advances every model by one day.
    pub fn advance_day(&mut self, params: &EnvironmentParams) {
        for m in Measurement::DISEASES {
            self.step_epidemic(m, params.epidemic(m))
                .expect("disease measurement");
        }
        self.step_humidity(&params.humidity);
        self.day += 1;
    }

    /// `E(x, y, t, :)` as `[tylcv, ccr, humidity]`.
    ///
    /// # Panics
    /// If `(x, y)` lies outside the grid.
    #[inline]
    pub fn read_point(&self, x: usize, y: usize) -> [f64; 3] {
        [
            f64::from(self.tylcv.state(x, y).health()),
            f64::from(self.ccr.state(x, y).health()),
            f64::from(*self.humidity.get(x, y)),
        ]
    }

    /// Materializes the value grid of one measurement.
    pub fn field(&self, m: Measurement) -> Grid<f32> {
        match m {
            Measurement::Tylcv => self.tylcv.health_field(),
            Measurement::Ccr => self.ccr.health_field(),
            Measurement::Humidity => self.humidity.clone(),
        }
    }

    /// All three value grids, indexed by [`Measurement::index`].
    pub fn fields(&self) -> [Grid<f32>; 3] {
        Measurement::ALL.map(|m| self.field(m))
    }
}
