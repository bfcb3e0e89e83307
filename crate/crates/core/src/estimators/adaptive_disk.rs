//! Adaptive Disk: every observation is trusted within a disk whose radius
//! shrinks as observations accumulate; each cell takes the nearest one.

use rayon::prelude::*;

use super::{Deadline, PREDICTION_BLOCK};
use crate::environment::Measurement;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::world::Observation;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveDiskParams {
    pub r_min: u32,
    /// Value of cells covered by no disk, indexed by measurement.
    pub default_value: [f64; 3],
}

impl Default for AdaptiveDiskParams {
    fn default() -> Self {
        AdaptiveDiskParams {
            r_min: 1,
            default_value: [1.0, 1.0, 0.5],
        }
    }
}

impl AdaptiveDiskParams {
    pub fn validate(&self) -> Result<()> {
        if self.r_min < 1 {
            return Err(Error::config("adaptive_disk r_min must be >= 1"));
        }
        if let Some(v) = self.default_value.iter().find(|v| !v.is_finite()) {
            return Err(Error::config(format!("adaptive_disk default value {v} is not finite")));
        }
        Ok(())
    }
}

/// Disk radius for `n` observations on a grid of `area` cells.
pub fn disk_radius(area: usize, n: usize, r_min: u32) -> u32 {
    if n == 0 {
        return r_min;
    }
    let r = (area as f64 / (std::f64::consts::PI * n as f64)).sqrt().round();
    (r as u32).max(r_min)
}

/// Adaptive Disk reconstruction of one measurement.
pub fn estimate_adaptive_disk(
    obs: &[Observation],
    m: Measurement,
    width: usize,
    height: usize,
    params: &AdaptiveDiskParams,
    deadline: &Deadline,
) -> Result<Grid<f32>> {
    let default = params.default_value[m.index()] as f32;
    if obs.is_empty() {
        return Ok(Grid::filled(width, height, default));
    }
    let r = i64::from(disk_radius(width * height, obs.len(), params.r_min));
    let r2 = r * r;

    // Oldest first, so on equal distance the later entry (most recent) wins.
    // The remaining keys only make the result independent of input order.
    let mut pts: Vec<(i64, i64, f32, u64, usize)> = obs
        .iter()
        .map(|o| (o.x as i64, o.y as i64, o.values[m.index()] as f32, o.timestep, o.robot_id))
        .collect();
    pts.sort_by(|a, b| {
        (a.3, a.4, a.2.to_bits(), a.0, a.1).cmp(&(b.3, b.4, b.2.to_bits(), b.0, b.1))
    });
    let xs: Vec<i64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<i64> = pts.iter().map(|p| p.1).collect();
    let vs: Vec<f32> = pts.iter().map(|p| p.2).collect();

    let mut out = vec![default; width * height];
    out.par_chunks_mut(PREDICTION_BLOCK)
        .enumerate()
        .try_for_each(|(block, chunk)| {
            deadline.check("adaptive-disk")?;
            let base = block * PREDICTION_BLOCK;
            for (o, cell) in chunk.iter_mut().enumerate() {
                let i = base + o;
                let (cx, cy) = ((i % width) as i64, (i / width) as i64);
                let mut best = r2;
                let mut hit = usize::MAX;
                for k in 0..xs.len() {
                    let (dx, dy) = (xs[k] - cx, ys[k] - cy);
                    let d2 = dx * dx + dy * dy;
                    if d2 <= best {
                        best = d2;
                        hit = k;
                    }
                }
                if hit != usize::MAX {
                    *cell = vs[hit];
                }
            }
            Ok::<(), Error>(())
        })?;
    Grid::from_vec(width, height, out)
}
