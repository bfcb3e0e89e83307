//! Simulation engine and benchmark harness for informative path planning on
//! the Waterberry Farms precision-agriculture scenario.
//!
//! The pieces compose in one direction:
//!
//! * [`geometry`] describes the farm layout and relevance masks,
//! * [`environment`] evolves the ground-truth disease and humidity fields,
//! * [`world`] moves robots and records observations,
//! * [`planners`] produce robot moves,
//! * [`estimators`] rebuild an information model from observations,
//! * [`scoring`] grades an information model against the ground truth,
//! * [`harness`] wires everything into reproducible scenario runs.

pub mod environment;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod planners;
pub mod rng;
pub mod scoring;
pub mod snapshot;
pub mod world;

pub use environment::{EnvironmentTensor, EpidemicParams, HumidityParams, Measurement};
pub use error::{Error, Result};
pub use estimators::{EstimatorConfig, InformationModel};
pub use geometry::{CropKind, Geometry, Owner};
pub use grid::Grid;
pub use scoring::{ScoreConfig, ScoreReport};
pub use world::{Observation, World};
