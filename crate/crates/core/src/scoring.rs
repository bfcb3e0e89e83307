//! The masked, weighted, asymmetric loss between ground truth and an
//! information model.

use serde::Serialize;

use crate::environment::Measurement;
use crate::error::{Error, Result};
use crate::geometry::{relevance_mask, Geometry};
use crate::grid::Grid;

/// Cells summed sequentially at the leaves of the pairwise summation tree.
const PAIRWISE_LEAF: usize = 128;
/// Subtrees at least this large are summed on separate rayon tasks.
const PARALLEL_SPLIT: usize = 1 << 16;

/// Squared error weighted `c_plus` when the estimate `b` exceeds the truth
/// `a`, `c_minus` otherwise.
#[inline]
pub fn asymmetric_error(a: f64, b: f64, c_minus: f64, c_plus: f64) -> f64 {
    let d = a - b;
    if a < b {
        c_plus * d * d
    } else {
        c_minus * d * d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Asymmetry {
    pub c_minus: f64,
    pub c_plus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreConfig {
    /// Indexed by [`Measurement::index`].
    pub weights: [f64; 3],
    pub asymmetry: [Asymmetry; 3],
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            weights: [1.0, 0.2, 0.1],
            asymmetry: [
                Asymmetry { c_minus: 1.0, c_plus: 10.0 },
                Asymmetry { c_minus: 1.0, c_plus: 10.0 },
                Asymmetry { c_minus: 1.0, c_plus: 1.0 },
            ],
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<()> {
        for m in Measurement::ALL {
            let w = self.weights[m.index()];
            let Asymmetry { c_minus, c_plus } = self.asymmetry[m.index()];
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::config(format!("score weight for {m} must be > 0, got {w}")));
            }
            if !(c_minus >= 0.0 && c_plus >= 0.0 && c_minus.is_finite() && c_plus.is_finite()) {
                return Err(Error::config(format!(
                    "asymmetry for {m} must be finite and >= 0, got ({c_minus}, {c_plus})"
                )));
            }
        }
        Ok(())
    }
}

/// The three relevance masks of a geometry, indexed by measurement.
pub fn relevance_masks(g: &Geometry) -> [Grid<bool>; 3] {
    Measurement::ALL.map(|m| relevance_mask(g, m).values)
}

/// Ground truth and estimate of the three fields at one scoring timepoint.
#[derive(Debug, Clone, Copy)]
pub struct Timepoint<'a> {
    pub truth: [&'a Grid<f32>; 3],
    pub estimate: [&'a Grid<f32>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    pub measurement: String,
    pub weight: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub mask_cells: u64,
    /// Mean masked error over cells and timepoints; 0 when the mask is empty.
    pub loss: f64,
    /// Masked error sum at each timepoint.
    pub error_sums: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub total_loss: f64,
    pub score: f64,
    pub timepoints: u64,
    pub normalizer: f64,
    pub components: Vec<ComponentReport>,
}

impl ScoreReport {
    pub fn component(&self, m: Measurement) -> &ComponentReport {
        &self.components[m.index()]
    }

    /// Stable-order TOML rendering.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("score report serializes")
    }
}

/// Pairwise sum with a tree fixed by the input length alone, so parallel
/// and sequential evaluation give identical bits.
fn pairwise<F>(lo: usize, hi: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let n = hi - lo;
    if n <= PAIRWISE_LEAF {
        let mut s = 0.0;
        for i in lo..hi {
            s += f(i);
        }
        return s;
    }
    let mid = lo + n / 2;
    if n >= PARALLEL_SPLIT {
        let (a, b) = rayon::join(|| pairwise(lo, mid, f), || pairwise(mid, hi, f));
        a + b
    } else {
        pairwise(lo, mid, f) + pairwise(mid, hi, f)
    }
}

/// Masked asymmetric error summed over all cells in row-major order.
pub fn masked_error_sum(truth: &Grid<f32>, estimate: &Grid<f32>, mask: &Grid<bool>, asym: Asymmetry) -> f64 {
    let (t, e, m) = (truth.as_slice(), estimate.as_slice(), mask.as_slice());
    pairwise(0, t.len(), &|i| {
        if m[i] {
            asymmetric_error(f64::from(t[i]), f64::from(e[i]), asym.c_minus, asym.c_plus)
        } else {
            0.0
        }
    })
}

/// Builds a [`ScoreReport`] one scoring timepoint at a time, so callers need
/// not hold every snapshot in memory.
#[derive(Debug, Clone)]
pub struct LossAccumulator {
    masks: [Grid<bool>; 3],
    config: ScoreConfig,
    counts: [u64; 3],
    sums: [Vec<f64>; 3],
}

impl LossAccumulator {
    pub fn new(masks: [Grid<bool>; 3], config: ScoreConfig) -> Self {
        let counts = masks.each_ref().map(|mk| mk.as_slice().iter().filter(|&&v| v).count() as u64);
        LossAccumulator {
            masks,
            config,
            counts,
            sums: Default::default(),
        }
    }

    pub fn timepoints(&self) -> usize {
        self.sums[0].len()
    }

    pub fn add(&mut self, tp: Timepoint<'_>) -> Result<()> {
        for m in Measurement::ALL {
            let i = m.index();
            let mask = &self.masks[i];
            if !tp.truth[i].same_shape(mask) || !tp.estimate[i].same_shape(mask) {
                return Err(Error::contract(format!(
                    "timepoint {}, {m}: truth {}x{}, estimate {}x{}, mask {}x{} differ in shape",
                    self.timepoints(),
                    tp.truth[i].width(),
                    tp.truth[i].height(),
                    tp.estimate[i].width(),
                    tp.estimate[i].height(),
                    mask.width(),
                    mask.height()
                )));
            }
        }
        for m in Measurement::ALL {
            let i = m.index();
            let s = masked_error_sum(tp.truth[i], tp.estimate[i], &self.masks[i], self.config.asymmetry[i]);
            self.sums[i].push(s);
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<ScoreReport> {
        if self.timepoints() == 0 {
            return Err(Error::contract("compute_loss needs at least one scoring timepoint"));
        }
        let c = self.timepoints() as f64;
        let config = &self.config;
        let normalizer = c * Measurement::ALL
            .iter()
            .map(|m| config.weights[m.index()] * self.counts[m.index()] as f64)
            .sum::<f64>();
        if !(normalizer > 0.0) {
            return Err(Error::DegenerateNormalizer);
        }
        let mut numerator = 0.0;
        let mut components = Vec::with_capacity(3);
        for m in Measurement::ALL {
            let i = m.index();
            let total: f64 = self.sums[i].iter().sum();
            let n = self.counts[i];
            numerator += config.weights[i] * total;
            components.push(ComponentReport {
                measurement: m.as_str().to_string(),
                weight: config.weights[i],
                c_minus: config.asymmetry[i].c_minus,
                c_plus: config.asymmetry[i].c_plus,
                mask_cells: n,
                loss: if n == 0 { 0.0 } else { total / (c * n as f64) },
                error_sums: self.sums[i].clone(),
            });
        }
        let total_loss = numerator / normalizer;
        Ok(ScoreReport {
            total_loss,
            score: -total_loss,
            timepoints: self.timepoints() as u64,
            normalizer,
            components,
        })
    }
}

/// The loss over `timepoints` (at least one).
pub fn compute_loss(timepoints: &[Timepoint<'_>], masks: &[Grid<bool>; 3], config: &ScoreConfig) -> Result<ScoreReport> {
    let mut acc = LossAccumulator::new(masks.clone(), config.clone());
    for tp in timepoints {
        acc.add(*tp)?;
    }
    acc.finish()
}

/// One point of the per-timestep diagnostic loss series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossPoint {
    pub timestep: u64,
    pub total: f64,
    pub components: [f64; 3],
}

/// Single-timepoint loss of an estimate against the same-day truth.
pub fn diagnostic_loss(timestep: u64, tp: Timepoint<'_>, masks: &[Grid<bool>; 3], config: &ScoreConfig) -> Result<LossPoint> {
    let r = compute_loss(&[tp], masks, config)?;
    Ok(LossPoint {
        timestep,
        total: r.total_loss,
        components: [0, 1, 2].map(|i| r.components[i].loss),
    })
}

/// CSV with header `timestep,total_loss,tylcv_loss,ccr_loss,humidity_loss`.
pub fn loss_series_csv(points: &[LossPoint]) -> String {
    let mut out = String::from("timestep,total_loss,tylcv_loss,ccr_loss,humidity_loss\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.timestep, p.total, p.components[0], p.components[1], p.components[2]
        ));
    }
    out
}
