//! Exact Gaussian process regression over 2-D cell coordinates.
//!
//! Kernel: `k(a, b) = s2 * exp(-|a - b|^2 / (2 l^2)) + n2 * [a and b are the
//! same training sample]`. Hyperparameters are fitted by maximizing the log
//! marginal likelihood with projected gradient ascent in log space.

use rand::Rng;
use rayon::prelude::*;

use super::linalg::{dot, Cholesky};
use super::{Deadline, PREDICTION_BLOCK};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng;

/// Grid cells whose triangular solves are done together.
const LANES: usize = 8;

const MAX_JITTER_DOUBLINGS: u32 = 24;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Kernel hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Hyper {
    fn to_log(self) -> [f64; 3] {
        [
            self.length_scale.ln(),
            self.signal_variance.ln(),
            self.noise_variance.ln(),
        ]
    }

    fn from_log(t: [f64; 3]) -> Self {
        Hyper {
            length_scale: t[0].exp(),
            signal_variance: t[1].exp(),
            noise_variance: t[2].exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpParams {
    /// Initial hyperparameters; also the first optimizer start.
    pub init: Hyper,
    pub length_scale_bounds: (f64, f64),
    pub signal_variance_bounds: (f64, f64),
    pub noise_variance_bounds: (f64, f64),
    /// Extra optimizer starts drawn log-uniformly within the bounds.
    pub restarts: usize,
    /// Diagonal jitter tried first when a factorization fails; doubled on
    /// every further failure.
    pub jitter: f64,
    pub max_iterations: usize,
    /// Skip hyperparameter fitting and use `init` as is.
    pub optimize: bool,
    /// Subtract the mean target before fitting and add it back when
    /// predicting.
    pub center_targets: bool,
    pub seed: u64,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            init: Hyper {
                length_scale: 3.0,
                signal_variance: 0.1,
                noise_variance: 1e-3,
            },
            length_scale_bounds: (0.5, 100.0),
            signal_variance_bounds: (1e-4, 10.0),
            noise_variance_bounds: (1e-6, 1.0),
            restarts: 5,
            jitter: 1e-10,
            max_iterations: 60,
            optimize: true,
            center_targets: true,
            seed: 0,
        }
    }
}

impl GpParams {
    pub fn validate(&self) -> Result<()> {
        let bounds = [
            ("length_scale", self.length_scale_bounds, self.init.length_scale),
            ("signal_variance", self.signal_variance_bounds, self.init.signal_variance),
            ("noise_variance", self.noise_variance_bounds, self.init.noise_variance),
        ];
        for (name, (lo, hi), init) in bounds {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::config(format!(
                    "gp {name} bounds must satisfy 0 < lo <= hi < inf, got ({lo}, {hi})"
                )));
            }
            if !(init > 0.0 && init.is_finite()) {
                return Err(Error::config(format!("gp {name} must be > 0, got {init}")));
            }
        }
        if !(self.jitter > 0.0) {
            return Err(Error::config("gp jitter must be > 0"));
        }
        Ok(())
    }

    fn log_bounds(&self) -> [(f64, f64); 3] {
        let ln = |(lo, hi): (f64, f64)| (lo.ln(), hi.ln());
        [
            ln(self.length_scale_bounds),
            ln(self.signal_variance_bounds),
            ln(self.noise_variance_bounds),
        ]
    }
}

fn gp_error(message: impl Into<String>) -> Error {
    Error::Estimator {
        estimator: "gp".into(),
        message: message.into(),
    }
}

#[inline]
fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    dx * dx + dy * dy
}

/// Signal part of the covariance, row-major `n x n`.
fn signal_cov(points: &[[f64; 2]], h: Hyper) -> Vec<f64> {
    let n = points.len();
    let inv = -0.5 / (h.length_scale * h.length_scale);
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = h.signal_variance * (inv * sq_dist(points[i], points[j])).exp();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Factors `K + n2 I`. When that fails and `escalate` is set, retries with
/// diagonal jitter starting at `jitter` and doubling each time. Returns the
/// factor and the jitter that was needed (0 if none).
fn factor_cov(kf: &[f64], n: usize, noise: f64, jitter: f64, escalate: bool) -> Result<(Cholesky, f64)> {
    let attempt = |extra: f64| {
        let mut a = kf.to_vec();
        for i in 0..n {
            a[i * n + i] += noise + extra;
        }
        Cholesky::factor(a, n)
    };
    if let Some(c) = attempt(0.0) {
        return Ok((c, 0.0));
    }
    if !escalate {
        return Err(gp_error("covariance is not positive definite"));
    }
    let mut j = jitter;
    for _ in 0..=MAX_JITTER_DOUBLINGS {
        if let Some(c) = attempt(j) {
            return Ok((c, j));
        }
        j *= 2.0;
    }
    Err(gp_error(format!(
        "covariance is not positive definite even with jitter {:.3e}",
        j / 2.0
    )))
}

/// Covariance factorization and likelihood at one hyperparameter setting.
struct Evaluation {
    kf: Vec<f64>,
    chol: Cholesky,
    alpha: Vec<f64>,
    lml: f64,
}

fn evaluate(points: &[[f64; 2]], y: &[f64], h: Hyper, jitter: f64, escalate: bool) -> Result<Evaluation> {
    let n = points.len();
    let kf = signal_cov(points, h);
    let (chol, _) = factor_cov(&kf, n, h.noise_variance, jitter, escalate)?;
    let alpha = chol.solve(y);
    let lml = -0.5 * dot(y, &alpha) - 0.5 * chol.log_det() - 0.5 * n as f64 * LN_2PI;
    Ok(Evaluation { kf, chol, alpha, lml })
}

/// Gradient of the log marginal likelihood with respect to
/// `(ln l, ln s2, ln n2)`:
/// `1/2 tr((alpha alpha^T - K^-1) dK/dtheta)`.
fn gradient(e: &Evaluation, points: &[[f64; 2]], h: Hyper) -> [f64; 3] {
    let n = points.len();
    let kinv = e.chol.inverse_lower();
    let inv_l2 = 1.0 / (h.length_scale * h.length_scale);
    let (mut g_ls, mut g_sf, mut g_sn) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let ai = e.alpha[i];
        let (mut row_ls, mut row_sf) = (0.0, 0.0);
        for j in 0..i {
            let w = ai * e.alpha[j] - kinv[i * n + j];
            let k = e.kf[i * n + j];
            row_sf += w * k;
            row_ls += w * k * sq_dist(points[i], points[j]);
        }
        // Off-diagonal entries appear twice in the trace.
        g_sf += 2.0 * row_sf;
        g_ls += 2.0 * row_ls * inv_l2;
        let w = ai * ai - kinv[i * n + i];
        g_sf += w * e.kf[i * n + i];
        g_sn += w * h.noise_variance;
    }
    [0.5 * g_ls, 0.5 * g_sf, 0.5 * g_sn]
}

/// Log marginal likelihood `-1/2 y^T K^-1 y - 1/2 log|K| - n/2 log 2 pi`.
pub fn log_marginal_likelihood(points: &[[f64; 2]], y: &[f64], h: Hyper, jitter: f64) -> Result<f64> {
    Ok(evaluate(points, y, h, jitter, true)?.lml)
}

/// Log marginal likelihood and its gradient with respect to
/// `(ln l, ln s2, ln n2)`.
pub fn log_marginal_likelihood_grad(
    points: &[[f64; 2]],
    y: &[f64],
    h: Hyper,
    jitter: f64,
) -> Result<(f64, [f64; 3])> {
    let e = evaluate(points, y, h, jitter, true)?;
    Ok((e.lml, gradient(&e, points, h)))
}

fn project(t: [f64; 3], bounds: &[(f64, f64); 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| t[i].clamp(bounds[i].0, bounds[i].1))
}

type Mat3 = [[f64; 3]; 3];

const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn mat_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    m.map(|row| row[0] * v[0] + row[1] * v[1] + row[2] * v[2])
}

fn vdot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// BFGS update of an inverse-Hessian approximation of the negated objective
/// from step `s` and gradient change `r` (of the negated objective).
fn bfgs_update(h: &Mat3, s: [f64; 3], r: [f64; 3]) -> Option<Mat3> {
    let sr = vdot(s, r);
    if !(sr > 1e-12) {
        return None;
    }
    let rho = 1.0 / sr;
    let hr = mat_vec(h, r);
    let rhr = vdot(r, hr);
    let mut out = *h;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] += (1.0 + rho * rhr) * rho * s[i] * s[j] - rho * (hr[i] * s[j] + s[i] * hr[j]);
        }
    }
    Some(out)
}

/// Projected ascent from `start` with backtracking (Armijo) line search.
/// The search direction is the gradient scaled by a BFGS curvature estimate,
/// falling back to the plain gradient whenever that is not an ascent
/// direction. Returns the final log-parameters and their log likelihood.
fn ascend(
    points: &[[f64; 2]],
    y: &[f64],
    start: [f64; 3],
    params: &GpParams,
    deadline: &Deadline,
) -> Result<([f64; 3], f64)> {
    const MAX_STEP: f64 = 2.0;
    let bounds = params.log_bounds();
    let mut theta = project(start, &bounds);
    let e = evaluate(points, y, Hyper::from_log(theta), params.jitter, true)?;
    let mut f = e.lml;
    let mut g = gradient(&e, points, Hyper::from_log(theta));
    let mut hinv = IDENTITY;
    for _ in 0..params.max_iterations {
        deadline.check("gp")?;
        // Components pushing against an active bound are frozen.
        let free = [0, 1, 2].map(|i| {
            let (lo, hi) = bounds[i];
            !((theta[i] <= lo && g[i] < 0.0) || (theta[i] >= hi && g[i] > 0.0))
        });
        let gf = [0, 1, 2].map(|i| if free[i] { g[i] } else { 0.0 });
        if vdot(gf, gf).sqrt() < 1e-8 {
            break;
        }
        let mut d = mat_vec(&hinv, gf);
        for i in 0..3 {
            if !free[i] {
                d[i] = 0.0;
            }
        }
        if !(vdot(d, gf) > 0.0) {
            hinv = IDENTITY;
            d = gf;
        }
        let norm = vdot(d, d).sqrt();
        if norm > MAX_STEP {
            d = d.map(|v| v * MAX_STEP / norm);
        }

        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-8 {
            let cand = project([0, 1, 2].map(|i| theta[i] + t * d[i]), &bounds);
            let moved = vdot(g, [0, 1, 2].map(|i| cand[i] - theta[i]));
            if moved > 0.0 {
                // Ill-conditioned candidates are rejected rather than
                // rescued with jitter.
                if let Ok(ec) = evaluate(points, y, Hyper::from_log(cand), params.jitter, false) {
                    if ec.lml >= f + 1e-4 * moved {
                        accepted = Some((cand, ec));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((cand, ec)) = accepted else { break };
        let gc = gradient(&ec, points, Hyper::from_log(cand));
        let gain = ec.lml - f;
        let s = [0, 1, 2].map(|i| cand[i] - theta[i]);
        let r = [0, 1, 2].map(|i| g[i] - gc[i]);
        hinv = bfgs_update(&hinv, s, r).unwrap_or(IDENTITY);
        theta = cand;
        f = ec.lml;
        g = gc;
        if gain < 1e-7 * (1.0 + f.abs()) {
            break;
        }
    }
    Ok((theta, f))
}

/// A fitted GP posterior.
#[derive(Debug, Clone)]
pub struct FittedGp {
    points: Vec<[f64; 2]>,
    chol: Cholesky,
    alpha: Vec<f64>,
    hyper: Hyper,
    offset: f64,
    lml: f64,
    jitter_used: f64,
}

/// Fits a GP to `(points, targets)`.
///
/// The optimizer starts from `params.init` and from `params.restarts`
/// log-uniform draws inside the bounds; the start with the highest log
/// marginal likelihood wins (earlier starts win ties).
pub fn gp_fit(
    points: &[[f64; 2]],
    targets: &[f64],
    params: &GpParams,
    deadline: &Deadline,
) -> Result<FittedGp> {
    params.validate()?;
    if points.is_empty() || points.len() != targets.len() {
        return Err(Error::contract(format!(
            "gp_fit needs matching non-empty inputs, got {} points and {} targets",
            points.len(),
            targets.len()
        )));
    }
    let offset = if params.center_targets {
        targets.iter().sum::<f64>() / targets.len() as f64
    } else {
        0.0
    };
    let y: Vec<f64> = targets.iter().map(|t| t - offset).collect();

    let hyper = if params.optimize {
        let bounds = params.log_bounds();
        let mut rng = rng::stream(params.seed, "gp/restarts");
        let mut starts = vec![params.init.to_log()];
        for _ in 0..params.restarts {
            starts.push(bounds.map(|(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo }));
        }
        let mut best: Option<([f64; 3], f64)> = None;
        for s in starts {
            deadline.check("gp")?;
            // A start whose covariance cannot be factored is skipped.
            let Ok((theta, f)) = ascend(points, &y, s, params, deadline) else {
                deadline.check("gp")?;
                continue;
            };
            if best.is_none_or(|(_, fb)| f > fb) {
                best = Some((theta, f));
            }
        }
        let (theta, _) = best.ok_or_else(|| gp_error("no optimizer start could be evaluated"))?;
        Hyper::from_log(theta)
    } else {
        params.init
    };
    fit_fixed(points, &y, hyper, params.jitter, offset)
}

fn fit_fixed(points: &[[f64; 2]], y: &[f64], hyper: Hyper, jitter: f64, offset: f64) -> Result<FittedGp> {
    let n = points.len();
    let kf = signal_cov(points, hyper);
    let (chol, jitter_used) = factor_cov(&kf, n, hyper.noise_variance, jitter, true)?;
    let alpha = chol.solve(y);
    let lml = -0.5 * dot(y, &alpha) - 0.5 * chol.log_det() - 0.5 * n as f64 * LN_2PI;
    Ok(FittedGp {
        points: points.to_vec(),
        chol,
        alpha,
        hyper,
        offset,
        lml,
        jitter_used,
    })
}

impl FittedGp {
    pub fn hyper(&self) -> Hyper {
        self.hyper
    }

    /// Log marginal likelihood of the fitted (centered) targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Posterior mean and latent variance from the prior covariances `k`
    /// between the query and every training point. `k` is overwritten.
    #[inline]
    fn posterior(&self, k: &mut [f64]) -> (f64, f64) {
        let mean = self.offset + dot(k, &self.alpha);
        self.chol.forward(k);
        let var = (self.hyper.signal_variance - dot(k, k)).max(0.0);
        (mean, var)
    }

    fn predict_one(&self, q: [f64; 2], scratch: &mut [f64]) -> (f64, f64) {
        let h = self.hyper;
        let inv = -0.5 / (h.length_scale * h.length_scale);
        let k = &mut scratch[..self.points.len()];
        for (ki, p) in k.iter_mut().zip(&self.points) {
            *ki = h.signal_variance * (inv * sq_dist(q, *p)).exp();
        }
        self.posterior(k)
    }

    /// `exp(-(c - p)^2 / 2l^2)` for every coordinate `c` in `0..len` and
    /// every training point, laid out `[c * n + i]`.
    fn axis_factors(&self, len: usize, axis: usize) -> Vec<f64> {
        let inv = -0.5 / (self.hyper.length_scale * self.hyper.length_scale);
        let mut f = Vec::with_capacity(len * self.points.len());
        for c in 0..len {
            f.extend(self.points.iter().map(|p| {
                let d = c as f64 - p[axis];
                (inv * d * d).exp()
            }));
        }
        f
    }

    /// Posterior mean and latent (noise-free) variance at each query.
    pub fn predict(&self, queries: &[[f64; 2]]) -> (Vec<f64>, Vec<f64>) {
        let mut scratch = vec![0.0; self.points.len()];
        queries
            .iter()
            .map(|&q| self.predict_one(q, &mut scratch))
            .unzip()
    }

    /// Mean and variance over every cell of a `width x height` grid,
    /// evaluated in fixed-size blocks that may run in parallel. The kernel
    /// is separable on the grid, so only `n * (width + height)`
    /// exponentials are evaluated.
    pub fn predict_grid(
        &self,
        width: usize,
        height: usize,
        deadline: &Deadline,
    ) -> Result<(Grid<f32>, Grid<f32>)> {
        let n = self.points.len();
        let cells = width * height;
        let fx = self.axis_factors(width, 0);
        let fy = self.axis_factors(height, 1);
        let sf = self.hyper.signal_variance;
        let mut mean = vec![0.0f32; cells];
        let mut var = vec![0.0f32; cells];
        mean.par_chunks_mut(PREDICTION_BLOCK)
            .zip(var.par_chunks_mut(PREDICTION_BLOCK))
            .enumerate()
            .try_for_each(|(block, (m, v))| {
                deadline.check("gp")?;
                // Cells are solved LANES at a time; `k[j][c]` is the
                // covariance of cell `c` with training point `j`.
                let mut k = vec![[0.0; LANES]; n];
                let base = block * PREDICTION_BLOCK;
                for (g, (mg, vg)) in m.chunks_mut(LANES).zip(v.chunks_mut(LANES)).enumerate() {
                    let lanes = mg.len();
                    for c in 0..lanes {
                        let i = base + g * LANES + c;
                        let (x, y) = (i % width, i / width);
                        let (ex, ey) = (&fx[x * n..(x + 1) * n], &fy[y * n..(y + 1) * n]);
                        for j in 0..n {
                            k[j][c] = sf * ex[j] * ey[j];
                        }
                    }
                    let mut mu = [self.offset; LANES];
                    for (kj, aj) in k.iter().zip(&self.alpha) {
                        for c in 0..LANES {
                            mu[c] += kj[c] * aj;
                        }
                    }
                    self.chol.forward_multi(&mut k);
                    let mut explained = [0.0; LANES];
                    for kj in &k {
                        for c in 0..LANES {
                            explained[c] += kj[c] * kj[c];
                        }
                    }
                    for c in 0..lanes {
                        mg[c] = mu[c] as f32;
                        vg[c] = (sf - explained[c]).max(0.0) as f32;
                    }
                }
                Ok::<(), Error>(())
            })?;
        Ok((Grid::from_vec(width, height, mean)?, Grid::from_vec(width, height, var)?))
    }
}
