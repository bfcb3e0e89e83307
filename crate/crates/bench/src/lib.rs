//! Fixtures shared by the criterion benchmarks.

use std::sync::Arc;

use rand::Rng;
use wbf_core::environment::{init_environment, EnvironmentParams};
use wbf_core::geometry::build_geometry;
use wbf_core::{rng, EnvironmentTensor, Observation};

/// Day-0 environment of a named geometry with default models.
pub fn environment(geometry: &str, seed: u64) -> EnvironmentTensor {
    let g = Arc::new(build_geometry(geometry).expect("known geometry"));
    init_environment(g, &EnvironmentParams::from_seed(seed)).expect("default parameters are valid")
}

/// `n` observations at uniformly random cells of `env`.
pub fn observations(env: &EnvironmentTensor, n: usize, seed: u64) -> Vec<Observation> {
    let mut rng = rng::stream(seed, "bench/fixture");
    (0..n)
        .map(|i| {
            let (x, y) = (rng.gen_range(0..env.width()), rng.gen_range(0..env.height()));
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
