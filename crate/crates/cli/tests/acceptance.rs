//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p wbf-runner --test acceptance -- 1 3`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wbf_core::environment::{init_environment, CellState, EnvironmentParams, Kernel};
use wbf_core::estimators::{gp_fit, log_marginal_likelihood, log_marginal_likelihood_grad, Deadline, GpParams, Hyper};
use wbf_core::geometry::{build_geometry, susceptibility_mask, GeometryName};
use wbf_core::harness::{bench_estimator_cost, load_config, loglog_slope, run_scenario, CostRow};
use wbf_core::planners::coverage::{lawnmower_path, spiral_path, Cell, Corner};
use wbf_core::planners::{plan_lawnmower, plan_spiral, CoveragePlan};
use wbf_core::scoring::{compute_loss, Asymmetry, Timepoint};
use wbf_core::{Grid, Measurement, ScoreConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

// 1. Loss oracle equivalence.

fn naive_loss(truth: &[[Grid<f32>; 3]], est: &[[Grid<f32>; 3]], masks: &[Grid<bool>; 3], cfg: &ScoreConfig) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for t in 0..truth.len() {
        for m in 0..3 {
            for y in 0..masks[m].height() {
                for x in 0..masks[m].width() {
                    if !*masks[m].get(x, y) {
                        continue;
                    }
                    let e = f64::from(*truth[t][m].get(x, y));
                    let i = f64::from(*est[t][m].get(x, y));
                    let c = if i > e { cfg.asymmetry[m].c_plus } else { cfg.asymmetry[m].c_minus };
                    num += cfg.weights[m] * c * (e - i) * (e - i);
                    den += cfg.weights[m];
                }
            }
        }
    }
    num / den
}

fn loss_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (w, h, c) = (rng.gen_range(1..=20), rng.gen_range(1..=20), rng.gen_range(1..=4));
        let mut field = || Grid::from_fn(w, h, |_, _| rng.gen_range(-2.0f32..2.0));
        let truth: Vec<[Grid<f32>; 3]> = (0..c).map(|_| [field(), field(), field()]).collect();
        let est: Vec<[Grid<f32>; 3]> = (0..c).map(|_| [field(), field(), field()]).collect();
        let density = rng.gen_range(0.05..1.0);
        let mut masks = [0, 1, 2].map(|_| Grid::from_fn(w, h, |_, _| rng.gen_bool(density)));
        *masks[0].get_mut(0, 0) = true;
        let cfg = ScoreConfig {
            weights: [0, 1, 2].map(|_| rng.gen_range(0.01..5.0)),
            asymmetry: [0, 1, 2].map(|_| Asymmetry {
                c_minus: rng.gen_range(0.0..20.0),
                c_plus: rng.gen_range(0.0..20.0),
            }),
        };
        let tps: Vec<Timepoint> = truth
            .iter()
            .zip(&est)
            .map(|(t, e)| Timepoint {
                truth: t.each_ref(),
                estimate: e.each_ref(),
            })
            .collect();
        let fast = compute_loss(&tps, &masks, &cfg).unwrap().total_loss;
        let slow = naive_loss(&truth, &est, &masks, &cfg);
        worst = worst.max((fast - slow).abs() / slow.abs().max(f64::MIN_POSITIVE));
    }
    outcome(worst <= 1e-12, format!("50 grids, max relative error {worst:.2e} (limit 1e-12)"))
}

// 2. SIRV state machine.

fn sirv_suite() -> Outcome {
    let g = Arc::new(build_geometry("miniberry-30").unwrap());
    let masks = Measurement::DISEASES.map(|m| susceptibility_mask(&g, m).unwrap().values);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0usize;
    let mut transitions = 0usize;
    let trials = 20;
    for _ in 0..trials {
        let mut params = EnvironmentParams::from_seed(rng.gen());
        for p in [&mut params.tylcv, &mut params.ccr] {
            p.p_total = rng.gen_range(0.0..=1.0);
            p.infect_duration = rng.gen_range(1..=15);
            p.seeds = rng.gen_range(1..=20);
            p.kernel = Kernel::inverse_square(rng.gen_range(1..=3)).unwrap();
        }
        let mut env = init_environment(Arc::clone(&g), &params).unwrap();
        let mut removed = [0usize; 2];
        for _ in 0..200 {
            let before = Measurement::DISEASES.map(|m| env.layer(m).states().clone());
            env.advance_day(&params);
            for (k, m) in Measurement::DISEASES.into_iter().enumerate() {
                let after = env.layer(m).states().as_slice();
                for (i, (&a, &b)) in before[k].as_slice().iter().zip(after).enumerate() {
                    use CellState::*;
                    let legal = matches!((a, b), (S, S) | (S, I) | (I, I) | (I, R) | (R, R) | (V, V));
                    let confined = (b == V) != masks[k].as_slice()[i];
                    violations += usize::from(!legal) + usize::from(!confined);
                    transitions += usize::from(a != b);
                }
                let r = env.layer(m).census().r;
                violations += usize::from(r < removed[k]);
                removed[k] = r;
            }
        }
    }
    outcome(
        violations == 0 && transitions > 0,
        format!("{trials} trajectories x 200 days, {transitions} transitions, {violations} violations"),
    )
}

// 3. GP correctness.

fn rbf(a: [f64; 2], b: [f64; 2], h: Hyper) -> f64 {
    let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    h.signal_variance * (-d2 / (2.0 * h.length_scale * h.length_scale)).exp()
}

fn gp_problem(rng: &mut ChaCha8Rng) -> (Vec<[f64; 2]>, Vec<f64>, Hyper) {
    let n = rng.gen_range(1..=10);
    let mut pts: Vec<[f64; 2]> = Vec::new();
    while pts.len() < n {
        let p = [rng.gen_range(0..20) as f64, rng.gen_range(0..20) as f64];
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    let y = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = Hyper {
        length_scale: rng.gen_range(0.5..8.0),
        signal_variance: rng.gen_range(0.05..3.0),
        noise_variance: rng.gen_range(1e-3..0.5),
    };
    (pts, y, h)
}

fn fixed(h: Hyper) -> GpParams {
    GpParams {
        init: h,
        optimize: false,
        center_targets: false,
        ..GpParams::default()
    }
}

fn gp_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut err_a, mut err_b, mut err_c) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let (pts, y, h) = gp_problem(&mut rng);
        let n = pts.len();
        let k = DMatrix::from_fn(n, n, |i, j| rbf(pts[i], pts[j], h) + if i == j { h.noise_variance } else { 0.0 });
        let kinv = k.try_inverse().unwrap();
        let yv = DVector::from_vec(y.clone());
        let queries: Vec<[f64; 2]> = (0..10).map(|_| [rng.gen_range(-3.0..23.0), rng.gen_range(-3.0..23.0)]).collect();
        let fit = gp_fit(&pts, &y, &fixed(h), &Deadline::none()).unwrap();
        let (mean, var) = fit.predict(&queries);
        for (q, (m, v)) in queries.iter().zip(mean.iter().zip(&var)) {
            let ks = DVector::from_fn(n, |i, _| rbf(*q, pts[i], h));
            let m_ref = (ks.transpose() * &kinv * &yv)[0];
            let v_ref = (h.signal_variance - (ks.transpose() * &kinv * &ks)[0]).max(0.0);
            err_a = err_a.max((m - m_ref).abs()).max((v - v_ref).abs());
        }
    }
    for _ in 0..100 {
        let (pts, y, h) = gp_problem(&mut rng);
        let (_, grad) = log_marginal_likelihood_grad(&pts, &y, h, 1e-10).unwrap();
        let theta = [h.length_scale.ln(), h.signal_variance.ln(), h.noise_variance.ln()];
        let at = |t: [f64; 3]| {
            let h = Hyper {
                length_scale: t[0].exp(),
                signal_variance: t[1].exp(),
                noise_variance: t[2].exp(),
            };
            log_marginal_likelihood(&pts, &y, h, 1e-10).unwrap()
        };
        for d in 0..3 {
            let central = |step: f64| {
                let (mut up, mut down) = (theta, theta);
                up[d] += step;
                down[d] -= step;
                (at(up) - at(down)) / (2.0 * step)
            };
            // Richardson extrapolation cancels the h^2 term.
            let fd = (4.0 * central(1e-3) - central(2e-3)) / 3.0;
            let e = (grad[d] - fd).abs() / grad[d].abs().max(fd.abs()).max(1e-6);
            err_b = err_b.max(e);
        }
    }
    for _ in 0..100 {
        let (pts, y, mut h) = gp_problem(&mut rng);
        h.noise_variance = 1e-12;
        h.length_scale = h.length_scale.min(3.0);
        h.signal_variance = 1.0;
        let mut params = fixed(h);
        params.noise_variance_bounds = (1e-12, 1.0);
        let fit = gp_fit(&pts, &y, &params, &Deadline::none()).unwrap();
        let (mean, _) = fit.predict(&pts);
        for (m, t) in mean.iter().zip(&y) {
            err_c = err_c.max((m - t).abs());
        }
    }
    outcome(
        err_a <= 1e-8 && err_b <= 1e-5 && err_c <= 1e-6,
        format!("(a) posterior error {err_a:.1e} <= 1e-8, (b) gradient rel error {err_b:.1e} <= 1e-5, (c) interpolation error {err_c:.1e} <= 1e-6"),
    )
}

// 4. Experiment 1 at desk scale.

const AD_PLANNERS: [&str; 4] = ["lawnmower", "adaptive-lawnmower", "spiral", "random-waypoint"];
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn loss_series(config: &Path, seed: u64) -> Vec<(u64, f64)> {
    let config = load_config(config, Some(seed)).unwrap();
    let record = run_scenario(&config, None).unwrap();
    record.loss_series.iter().map(|p| (p.timestep, p.total)).collect()
}

fn experiment_one() -> Outcome {
    let dir = configs();
    let mut finals = [[0.0; 5]; 4];
    let mut early = [[0.0; 5]; 4];
    let mut gp = [0.0; 5];
    for (s, &seed) in SEEDS.iter().enumerate() {
        for (p, planner) in AD_PLANNERS.iter().enumerate() {
            let series = loss_series(&dir.join(format!("miniberry30-{planner}-ad.toml")), seed);
            finals[p][s] = series.last().unwrap().1;
            early[p][s] = series.iter().find(|(t, _)| *t == 125).unwrap().1;
        }
        gp[s] = loss_series(&dir.join("miniberry30-random-waypoint-gp.toml"), seed).last().unwrap().1;
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let avg: Vec<f64> = finals.iter().map(|f| mean(f)).collect();
    let mut dev_i = Vec::new();
    for p in 0..4 {
        let others: Vec<f64> = (0..4).filter(|&q| q != p).map(|q| avg[q]).collect();
        dev_i.push(avg[p] / mean(&others) - 1.0);
    }
    let pass_i = dev_i.iter().all(|d| d.abs() <= 0.25);

    let al_best = (0..5)
        .filter(|&s| (0..4).all(|p| p == 1 || early[1][s] < early[p][s]))
        .count();
    let gp_best = (0..5).filter(|&s| (0..4).all(|p| gp[s] < finals[p][s])).count();

    let devs: Vec<String> = AD_PLANNERS
        .iter()
        .zip(&dev_i)
        .map(|(p, d)| format!("{p} {:+.1}%", 100.0 * d))
        .collect();
    outcome(
        pass_i && al_best >= 4 && gp_best >= 4,
        format!(
            "(i) {} [{}] vs others' mean, limit 25%; (ii) {} adaptive-lawnmower best at step 125 in {al_best}/5; (iii) {} random-waypoint+gp best in {gp_best}/5",
            if pass_i { "pass" } else { "FAIL" },
            devs.join(", "),
            if al_best >= 4 { "pass" } else { "FAIL" },
            if gp_best >= 4 { "pass" } else { "FAIL" },
        ),
    )
}

// 5. Experiment 2 at desk scale.

fn experiment_two() -> Outcome {
    let config = load_config(&configs().join("bench-cost.toml"), None).unwrap();
    let rows = bench_estimator_cost(&config, |r| {
        eprintln!("    {} {} n={} {:.4}s{}", r.geometry, r.estimator, r.n_obs, r.seconds, if r.cutoff_hit { " cutoff" } else { "" });
    })
    .unwrap();
    let select = |g: GeometryName, e: &str| -> Vec<&CostRow> {
        rows.iter().filter(|r| r.geometry == g && r.estimator == e).collect()
    };
    let feasible = |rs: &[&CostRow]| -> Vec<(usize, f64)> {
        rs.iter().filter(|r| !r.cutoff_hit).map(|r| (r.n_obs, r.seconds)).collect()
    };

    let ad100 = select(GeometryName::Miniberry100, "adaptive-disk");
    let gp100 = select(GeometryName::Miniberry100, "gp");
    let ad_slope = loglog_slope(&feasible(&ad100)).unwrap_or(f64::NAN);
    let gp_slope = loglog_slope(&feasible(&gp100)).unwrap_or(f64::NAN);
    let ad_never = ad100.len() == 6 && ad100.iter().all(|r| !r.cutoff_hit);
    let gp_cut = gp100.iter().find(|r| r.cutoff_hit).map(|r| r.n_obs);

    let adw = select(GeometryName::Waterberry, "adaptive-disk");
    let gpw = select(GeometryName::Waterberry, "gp");
    let adw_ok = adw.iter().any(|r| !r.cutoff_hit);
    let gpw_cut = !gpw.is_empty() && gpw.iter().all(|r| r.cutoff_hit);

    let pass = (0.7..=1.3).contains(&ad_slope)
        && (2.2..=3.5).contains(&gp_slope)
        && ad_never
        && gp_cut.is_some()
        && adw_ok
        && gpw_cut;
    outcome(
        pass,
        format!(
            "miniberry-100: ad slope {ad_slope:.2} in [0.7, 1.3], gp slope {gp_slope:.2} in [2.2, 3.5] over n <= {}, gp cutoff at n={}, ad cutoff never: {ad_never}; waterberry: ad feasible at n={}, gp always cut off: {gpw_cut}",
            feasible(&gp100).last().map_or(0, |p| p.0),
            gp_cut.map_or("none".into(), |n| n.to_string()),
            adw.iter().filter(|r| !r.cutoff_hit).map(|r| r.n_obs.to_string()).collect::<Vec<_>>().join(","),
        ),
    )
}

// 6. Determinism across thread counts.

fn run_cli(config: &Path, out: &Path, threads: &str) {
    let status = Command::new(env!("CARGO_BIN_EXE_wbf"))
        .args(["run".as_ref(), config.as_os_str(), "--out".as_ref(), out.as_os_str()])
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut checked = Vec::new();
    let mut same = true;
    for name in ["miniberry30-random-waypoint-gp", "waterberry-lawnmower-ad"] {
        let config = configs().join(format!("{name}.toml"));
        let a = tmp.path().join(format!("{name}-1"));
        let b = tmp.path().join(format!("{name}-4"));
        run_cli(&config, &a, "1");
        run_cli(&config, &b, "4");
        for file in ["loss.csv", "score.toml"] {
            let x = std::fs::read(a.join(file)).unwrap();
            let y = std::fs::read(b.join(file)).unwrap();
            same &= x == y;
            checked.push(format!("{name}/{file} {}", if x == y { "identical" } else { "DIFFERS" }));
        }
    }
    outcome(same, format!("1 vs 4 threads: {}", checked.join(", ")))
}

// 7. Coverage properties.

fn coverage() -> Outcome {
    let g = build_geometry("miniberry-10").unwrap();
    let region = g.full_region();
    let cells = g.width() * g.height();
    let patterns: [(&str, fn(usize, _, Cell) -> CoveragePlan, fn(_, usize, Corner) -> Vec<Cell>); 2] =
        [("lawnmower", plan_lawnmower, lawnmower_path), ("spiral", plan_spiral, spiral_path)];
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, plan, sweep) in patterns {
        let full = plan(cells, region, (0, 0));
        let seen: HashSet<Cell> = full.path.iter().copied().collect();
        let half = cells / 2;
        let minimal = (1..=10)
            .find(|&s| sweep(region, s, Corner::nearest(region, (0, 0))).len() - 1 <= half)
            .unwrap();
        let got = plan(half, region, (0, 0));
        pass &= seen.len() == cells && got.spacings == [minimal] && got.path.len() <= half + 1;
        notes.push(format!(
            "{name} full budget {}/{cells} cells, half budget spacing {:?} (minimal {minimal})",
            seen.len(),
            got.spacings
        ));
    }
    outcome(pass, notes.join("; "))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome, Duration); 7] = [
        (1, "loss oracle equivalence", loss_oracle, Duration::from_secs(10)),
        (2, "SIRV state machine", sirv_suite, Duration::from_secs(30)),
        (3, "GP correctness", gp_correctness, Duration::from_secs(30)),
        (4, "experiment 1 orderings", experiment_one, Duration::from_secs(30 * 60)),
        (5, "experiment 2 cost scaling", experiment_two, Duration::from_secs(30 * 60)),
        (6, "determinism", determinism, Duration::from_secs(5 * 60)),
        (7, "coverage properties", coverage, Duration::from_secs(1)),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, check, limit) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let pass = out.pass && took <= limit;
        failed += usize::from(!pass);
        println!(
            "criterion {n} {name}: {} ({:.1} s, limit {} s) {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs(),
            out.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
