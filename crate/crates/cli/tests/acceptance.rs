//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero if any
//! criterion fails.
//!
//! Criteria 4 to 7 and 10 train a full desk-scale β sweep twice (once per worker
//! count) and run NSGA-II twice; expect about an hour on one core.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use cogradar::drl::{Mlp, OutputHead};
use cogradar::moo::{extract_pareto, fast_non_dominated_sort, ObjectivePoint};
use cogradar::scanning::{
    beam_duration, db_to_linear, gamma, max_range, snr_min_db, DetectionSpec, RadarParams, BOLTZMANN,
};
use cogradar::sim::{Measurement, MotionModel};
use cogradar::tracking::{
    ekf_predict, ekf_update, linear_position_update, update_init_logic, DwellNoiseModel, InitBuffer, InitDecision,
    ScanOutcome, Track, INIT_WINDOW,
};
use cogradar_cli::commands::{cmd_nsga, cmd_sweep};
use cogradar_cli::RunConfig;
use nalgebra::{DMatrix, Matrix2, Matrix4, Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// The desk β grid: zero plus seven values spanning `[300, 3e5]`.
const SWEEP_BETAS: [f64; 8] = [0.0, 300.0, 1e3, 3e3, 1e4, 3e4, 1e5, 3e5];

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

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

// 1 -------------------------------------------------------------------------------

/// Front index of every point via longest dominator chains. Dominators have a strictly
/// larger coordinate sum, so processing in descending sum order sees them first.
fn brute_force_ranks(points: &[[f64; 2]]) -> Vec<usize> {
    let dom = |a: &[f64; 2], b: &[f64; 2]| a[0] >= b[0] && a[1] >= b[1] && (a[0] > b[0] || a[1] > b[1]);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| (points[b][0] + points[b][1]).total_cmp(&(points[a][0] + points[a][1])));
    let mut rank = vec![0usize; points.len()];
    for (k, &i) in order.iter().enumerate() {
        rank[i] = order[..k]
            .iter()
            .filter(|&&j| dom(&points[j], &points[i]))
            .map(|&j| rank[j] + 1)
            .max()
            .unwrap_or(0);
    }
    rank
}

fn criterion_sorting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut largest = 0;
    for instance in 0..1000 {
        let n = rng.random_range(1..=500);
        largest = largest.max(n);
        // Every other instance lives on a coarse grid to force ties and duplicates.
        let grid = instance % 2 == 0;
        let points: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                if grid {
                    [rng.random_range(0..20) as f64, rng.random_range(0..20) as f64]
                } else {
                    [rng.random::<f64>() * 100.0 - 50.0, rng.random::<f64>()]
                }
            })
            .collect();
        let ranks = brute_force_ranks(&points);
        let depth = ranks.iter().max().map_or(0, |r| r + 1);
        let mut expected = vec![Vec::new(); depth];
        for (i, &r) in ranks.iter().enumerate() {
            expected[r].push(i);
        }
        let got = fast_non_dominated_sort(&points);
        if got != expected {
            return outcome(false, format!("instance {instance} (n = {n}): fronts differ"));
        }

        let tagged: Vec<ObjectivePoint> = points
            .iter()
            .enumerate()
            .map(|(i, p)| ObjectivePoint::new(p[0], p[1], "x", i as f64, 0))
            .collect();
        let mut front: Vec<[f64; 2]> = expected[0].iter().map(|&i| points[i]).collect();
        front.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        front.dedup();
        let extracted: Vec<[f64; 2]> = extract_pareto(&tagged).iter().map(|p| p.objectives()).collect();
        if extracted != front {
            return outcome(
                false,
                format!("instance {instance} (n = {n}): Pareto extraction differs"),
            );
        }
    }
    outcome(true, format!("1000 instances up to {largest} points"))
}

// 2 -------------------------------------------------------------------------------

/// `L = Σ w ∘ f(x)`, whose gradient with respect to the output is `w`.
fn weighted_loss(net: &Mlp, x: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    net.forward_batch(x).expect("shapes agree").component_mul(w).sum()
}

const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-4;
/// Absolute floor for gradients that vanish, where relative error is meaningless.
const FD_ABS_FLOOR: f64 = 1e-9;

fn fd_matches(analytic: f64, numeric: f64) -> bool {
    let err = (analytic - numeric).abs();
    err <= FD_REL_TOL * analytic.abs().max(numeric.abs()) || err <= FD_ABS_FLOOR
}

fn check_network(name: &str, sizes: &[usize], head: OutputHead, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = Mlp::new(sizes, head, &mut rng);
    let batch = 3;
    let x = DMatrix::from_fn(sizes[0], batch, |_, _| normal(&mut rng));
    let w = DMatrix::from_fn(*sizes.last().unwrap(), batch, |_, _| normal(&mut rng));
    let cache = net.forward_cached(&x).map_err(|e| e.to_string())?;
    let (grads, dx) = net.backward(&cache, &w).map_err(|e| e.to_string())?;

    let mut worst: f64 = 0.0;
    for probe in 0..100 {
        let l = rng.random_range(0..net.layers().len());
        let rows = net.layers()[l].weights.nrows();
        let cols = net.layers()[l].weights.ncols();
        let bias = rng.random_bool(0.2);
        let (r, c) = (rng.random_range(0..rows), rng.random_range(0..cols));
        let mut plus = net.clone();
        let mut minus = net.clone();
        let analytic = if bias {
            plus.layers_mut()[l].bias[r] += FD_STEP;
            minus.layers_mut()[l].bias[r] -= FD_STEP;
            grads.layers[l].bias[r]
        } else {
            plus.layers_mut()[l].weights[(r, c)] += FD_STEP;
            minus.layers_mut()[l].weights[(r, c)] -= FD_STEP;
            grads.layers[l].weights[(r, c)]
        };
        let numeric = (weighted_loss(&plus, &x, &w) - weighted_loss(&minus, &x, &w)) / (2.0 * FD_STEP);
        if !fd_matches(analytic, numeric) {
            return Err(format!(
                "{name} probe {probe} (layer {l}, {}): analytic {analytic:e} vs numeric {numeric:e}",
                if bias { "bias" } else { "weight" }
            ));
        }
        if analytic != 0.0 || numeric != 0.0 {
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()));
        }
    }
    // Input gradients feed the actor update through the critic.
    for probe in 0..20 {
        let (r, c) = (rng.random_range(0..sizes[0]), rng.random_range(0..batch));
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[(r, c)] += FD_STEP;
        xm[(r, c)] -= FD_STEP;
        let numeric = (weighted_loss(&net, &xp, &w) - weighted_loss(&net, &xm, &w)) / (2.0 * FD_STEP);
        if !fd_matches(dx[(r, c)], numeric) {
            return Err(format!(
                "{name} input probe {probe}: analytic {:e} vs numeric {numeric:e}",
                dx[(r, c)]
            ));
        }
    }
    Ok(worst)
}

fn criterion_gradients() -> Outcome {
    // Five allocation slots: 12 observation features, 5 actions.
    let nets: [(&str, Vec<usize>, OutputHead); 3] = [
        ("critic 100x100", vec![17, 100, 100, 1], OutputHead::Linear),
        (
            "DDPG actor 256x128",
            vec![12, 256, 128, 5],
            OutputHead::Sigmoid { scale: 1.0 },
        ),
        ("SAC actor 128x128", vec![12, 128, 128, 10], OutputHead::Linear),
    ];
    let mut details = Vec::new();
    for (k, (name, sizes, head)) in nets.iter().enumerate() {
        match check_network(name, sizes, *head, 200 + k as u64) {
            Ok(worst) => details.push(format!("{name}: worst rel {worst:.1e}")),
            Err(e) => return outcome(false, e),
        }
    }
    outcome(true, details.join("; "))
}

// 3 -------------------------------------------------------------------------------

fn max_abs_diff<const R: usize, const C: usize>(
    a: &nalgebra::SMatrix<f64, R, C>,
    b: &nalgebra::SMatrix<f64, R, C>,
) -> f64 {
    (a - b).abs().max() / a.abs().max().max(1.0)
}

fn random_spd(rng: &mut ChaCha8Rng, scale: f64) -> Matrix4<f64> {
    let a = Matrix4::from_fn(|_, _| normal(rng));
    a * a.transpose() * scale + Matrix4::identity() * scale
}

fn criterion_ekf() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let e = nalgebra::Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let mean = Vector4::from_fn(|_, _| normal(&mut rng) * 1e3);
        let p = random_spd(&mut rng, 50.0);
        let r = Matrix2::new(16.0, 0.0, 0.0, 9.0) * rng.random_range(0.5..2.0);
        let z = Vector2::from_fn(|_, _| normal(&mut rng) * 1e3);
        let track = Track::confirmed(0, mean, p);
        let got = linear_position_update(&track, &z, &r);
        // Standard-form Kalman update.
        let s = e * p * e.transpose() + r;
        let k = p * e.transpose() * s.try_inverse().unwrap();
        let mean_cf = mean + k * (z - e * mean);
        let p_cf = (Matrix4::identity() - k * e) * p;
        let p_cf = (p_cf + p_cf.transpose()) * 0.5;
        worst = worst
            .max(max_abs_diff(&got.mean, &mean_cf))
            .max(max_abs_diff(&got.cov, &p_cf));
    }
    if worst > 1e-10 {
        return outcome(false, format!("linear update deviates by {worst:e}"));
    }

    // NEES of the polar EKF on the constant-velocity model.
    let model = MotionModel::constant_velocity(2.5, 16.0).expect("valid model");
    // Q has rank two (acceleration noise only), so sample through its eigenbasis.
    let eig = model.process_noise.symmetric_eigen();
    let q_root = eig.eigenvectors * Matrix4::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    let noise = DwellNoiseModel::default();
    let dwell = 0.3;
    let r = noise.effective_cov(dwell).unwrap();
    let p0 = Matrix4::from_diagonal(&Vector4::new(400.0, 400.0, 25.0, 25.0));
    let p0_chol = p0.cholesky().unwrap().l();
    let (runs, slots) = (200, 60);
    let mut nees = vec![0.0; slots];
    for _ in 0..runs {
        let bearing = rng.random_range(0.0..std::f64::consts::TAU);
        // Far enough out that the random walk never passes near the radar, where the
        // polar linearisation breaks down.
        let range = rng.random_range(20_000.0..40_000.0);
        let mut truth = Vector4::new(
            range * bearing.cos(),
            range * bearing.sin(),
            normal(&mut rng) * 5.0,
            normal(&mut rng) * 5.0,
        );
        let start = truth + p0_chol * Vector4::from_fn(|_, _| normal(&mut rng));
        let mut track = Track::confirmed(0, start, p0);
        for slot_nees in nees.iter_mut() {
            truth = model.transition * truth + q_root * Vector4::from_fn(|_, _| normal(&mut rng));
            track = ekf_predict(&track, &model);
            let (x, y) = (truth[0], truth[1]);
            let z = Measurement {
                range: x.hypot(y) + r[(0, 0)].sqrt() * normal(&mut rng),
                azimuth: y.atan2(x) + r[(1, 1)].sqrt() * normal(&mut rng),
                noise_cov: r,
                source_id: Some(0),
                slot: 0,
            };
            track = ekf_update(&track, &z, &noise, dwell).expect("positive dwell");
            let err = truth - track.mean;
            let v = (err.transpose() * track.cov.try_inverse().unwrap() * err)[(0, 0)];
            *slot_nees += v / runs as f64;
        }
    }
    let (lo, hi) = nees
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mean = nees.iter().sum::<f64>() / slots as f64;
    outcome(
        (3.3..=4.7).contains(&lo) && (3.3..=4.7).contains(&hi),
        format!("linear max dev {worst:.1e}; per-slot NEES over {runs} runs in [{lo:.3}, {hi:.3}], mean {mean:.3}"),
    )
}

// 8 -------------------------------------------------------------------------------

/// `I0(z)·e^(−z)` by the trapezoid rule on `(1/π)∫₀^π e^{z(cos θ − 1)} dθ`, which is
/// spectrally accurate for periodic integrands.
fn bessel_i0_scaled(z: f64) -> f64 {
    let n = 256;
    let h = std::f64::consts::PI / n as f64;
    let sum: f64 = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            w * (z * ((k as f64 * h).cos() - 1.0)).exp()
        })
        .sum();
    sum * h / std::f64::consts::PI
}

/// Marcum Q₁(a, b) = ∫_b^∞ x·exp(−(x² + a²)/2)·I₀(ax) dx by composite Simpson.
fn marcum_q1(a: f64, b: f64) -> f64 {
    let upper = a.max(b) + 40.0;
    let n = 4_000;
    let h = (upper - b) / n as f64;
    let f = |x: f64| x * (-(x - a).powi(2) / 2.0).exp() * bessel_i0_scaled(a * x);
    let mut s = f(b) + f(upper);
    for k in 1..n {
        s += f(b + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Exact single-pulse SNR (dB) for a non-fluctuating target in square-law detection.
fn exact_snr_db(pd: f64, pf: f64) -> f64 {
    let threshold = (-2.0 * pf.ln()).sqrt();
    let pd_at = |db: f64| marcum_q1((2.0 * db_to_linear(db)).sqrt(), threshold);
    let (mut lo, mut hi) = (0.0, 30.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if pd_at(mid) < pd {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_scanning() -> Outcome {
    let spec = DetectionSpec::new(0.9, 1e-3).unwrap();
    let params = RadarParams::calibrated(1e4, 0.25, &spec).unwrap();
    let budget =
        params.transmit_power * params.tx_gain * params.rx_gain * params.wavelength.powi(2) * params.cross_section
            / ((4.0 * std::f64::consts::PI).powi(3) * params.loss * BOLTZMANN * params.system_temperature);
    let mut worst_law: f64 = 0.0;
    for &t in &[1e-4, 2.5e-3, 0.01, 0.1, 1.0] {
        let oracle = (budget * t / spec.snr_min).powf(0.25);
        worst_law = worst_law.max((max_range(&params, &spec, t) / oracle - 1.0).abs());
        for &k in &[2.0, 16.0, 0.3] {
            let ratio = max_range(&params, &spec, k * t) / max_range(&params, &spec, t);
            worst_law = worst_law.max((ratio / k.powf(0.25) - 1.0).abs());
        }
    }
    let calib = (gamma(&params, &spec, 0.25) - 1.0).abs();
    let r_ref = max_range(&params, &spec, beam_duration(0.25, params.beam_step_deg));
    let albersheim = snr_min_db(0.9, 1e-3).unwrap();
    let exact = exact_snr_db(0.9, 1e-3);
    let gap = (albersheim - exact).abs();
    outcome(
        worst_law <= 1e-12 && calib <= 1e-9 && gap <= 0.5,
        format!(
            "range law dev {worst_law:.1e}; |Γ(0.25 s) − 1| = {calib:.1e} (r_max {r_ref:.3} m); \
             Albersheim {albersheim:.3} dB vs Marcum-Q {exact:.3} dB"
        ),
    )
}

// 9 -------------------------------------------------------------------------------

fn criterion_init_logic() -> Outcome {
    let mut confirmed = 0;
    for pattern in 0u32..16 {
        let mut buffer = InitBuffer::new(500.0);
        let mut decision = InitDecision::Pending;
        for bit in 0..INIT_WINDOW {
            let hit = pattern >> bit & 1 == 1;
            let scan = if hit {
                ScanOutcome::Hit {
                    position: Vector2::new(1e3 * bit as f64, 0.0),
                    source_id: Some(1),
                }
            } else {
                ScanOutcome::Miss
            };
            decision = update_init_logic(&mut buffer, scan);
        }
        let hits = pattern.count_ones();
        let expected = if hits >= 3 {
            InitDecision::Confirmed
        } else {
            InitDecision::Discarded
        };
        if decision != expected {
            return outcome(false, format!("pattern {pattern:04b}: {decision:?} with {hits} hits"));
        }
        confirmed += (decision == InitDecision::Confirmed) as usize;
    }
    outcome(confirmed == 5, format!("16 patterns, {confirmed} confirmed"))
}

// 4 to 7, 10 ----------------------------------------------------------------------

fn read_rows(path: &Path) -> Result<Vec<BTreeMap<String, String>>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| e.to_string())?;
            Ok(header
                .iter()
                .map(String::from)
                .zip(r.iter().map(String::from))
                .collect())
        })
        .collect()
}

fn num(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row.get(key).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)
}

fn desk_config(workers: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.sweep.betas = Some(SWEEP_BETAS.to_vec());
    cfg.workers = workers;
    cfg
}

struct DeskRun {
    sweep: PathBuf,
    nsga: PathBuf,
}

fn desk_run(root: &Path, workers: usize) -> Result<DeskRun, String> {
    let cfg = desk_config(workers);
    let sweep = root.join(format!("sweep_w{workers}"));
    let nsga = root.join(format!("nsga_w{workers}"));
    cmd_sweep(&cfg, &sweep).map_err(|e| format!("sweep: {e}"))?;
    cmd_nsga(&cfg, &nsga, &[sweep.join("front.csv")]).map_err(|e| format!("nsga: {e}"))?;
    Ok(DeskRun { sweep, nsga })
}

fn criterion_constraint(run: &DeskRun) -> Result<Outcome, String> {
    let rows = read_rows(&run.sweep.join("beta_00/curves.csv"))?;
    let budget = RunConfig::default().env.budget;
    let n = rows.len();
    let k = (n as f64 * 0.2).ceil() as usize;
    let usage = rows[n - k..].iter().map(|r| num(r, "violation") + budget).sum::<f64>() / k as f64;
    let min_lambda = rows.iter().map(|r| num(r, "lambda")).fold(f64::INFINITY, f64::min);
    Ok(outcome(
        usage <= budget + 0.05 && min_lambda >= 0.0,
        format!("β = 0: final-20% usage {usage:.4} over {k} steps, min λ {min_lambda}"),
    ))
}

fn criterion_tradeoff(run: &DeskRun) -> Result<Outcome, String> {
    let summary = read_rows(&run.sweep.join("summary.csv"))?;
    let front = read_rows(&run.sweep.join("front.csv"))?;
    if summary.len() != SWEEP_BETAS.len() {
        return Ok(outcome(
            false,
            format!("{} of {} runs completed", summary.len(), SWEEP_BETAS.len()),
        ));
    }
    let pts: Vec<(f64, f64)> = front.iter().map(|r| (num(r, "obj_t"), num(r, "obj_s"))).collect();
    let monotone = pts.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1);
    let best_t = summary
        .iter()
        .map(|r| num(r, "obj_t"))
        .fold(f64::NEG_INFINITY, f64::max);
    let zero = summary.iter().find(|r| num(r, "beta") == 0.0).map(|r| num(r, "obj_t"));
    let zero_best = zero == Some(best_t);
    let table: Vec<String> = summary
        .iter()
        .map(|r| format!("β={}:({:.1}, {:.3})", num(r, "beta"), num(r, "obj_t"), num(r, "obj_s")))
        .collect();
    Ok(outcome(
        pts.len() >= 4 && monotone && zero_best,
        format!(
            "front {} points, monotone {monotone}, β = 0 attains max obj_t {zero_best}; {}",
            pts.len(),
            table.join(" ")
        ),
    ))
}

fn hv_by_name(path: &Path) -> Result<BTreeMap<String, f64>, String> {
    Ok(read_rows(path)?
        .into_iter()
        .map(|r| (r["name"].clone(), num(&r, "hypervolume")))
        .collect())
}

fn criterion_baseline(run: &DeskRun) -> Result<Outcome, String> {
    let hv = hv_by_name(&run.sweep.join("hypervolume.csv"))?;
    let (sac, equal) = (hv["sac"], hv["equal"]);
    Ok(outcome(
        sac >= 1.02 * equal,
        format!(
            "HV sac {sac:.4} vs equal allocation {equal:.4} (ratio {:.3})",
            sac / equal
        ),
    ))
}

fn criterion_nsga(run: &DeskRun) -> Result<Outcome, String> {
    let hv = hv_by_name(&run.nsga.join("comparison.csv"))?;
    let (nsga, sac) = (hv["nsga2"], hv["sac"]);
    let per_gen: Vec<f64> = read_rows(&run.nsga.join("hypervolume.csv"))?
        .iter()
        .map(|r| num(r, "hypervolume"))
        .collect();
    let drops = per_gen.windows(2).filter(|w| w[1] < w[0]).count();
    Ok(outcome(
        nsga >= 0.95 * sac && drops == 0 && !per_gen.is_empty(),
        format!(
            "HV nsga2 {nsga:.4} vs best RL (sac) {sac:.4} (ratio {:.3}); {} generations, {drops} decreases",
            nsga / sac,
            per_gen.len()
        ),
    ))
}

fn csv_files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).into_iter().flatten().flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn criterion_determinism(a: &DeskRun, b: &DeskRun) -> Outcome {
    let mut compared = 0;
    for (x, y) in [(&a.sweep, &b.sweep), (&a.nsga, &b.nsga)] {
        let (fx, fy) = (csv_files(x), csv_files(y));
        if fx != fy {
            return outcome(false, format!("artifact sets differ under {}", x.display()));
        }
        for f in fx {
            if std::fs::read(x.join(&f)).ok() != std::fs::read(y.join(&f)).ok() {
                return outcome(false, format!("{} differs", f.display()));
            }
            compared += 1;
        }
    }
    outcome(
        true,
        format!("{compared} CSV files byte-identical across 1 and 2 workers"),
    )
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, started: Instant, result: Result<Outcome, String>| {
        let o = result.unwrap_or_else(|e| outcome(false, e));
        failures += (!o.pass) as usize;
        println!(
            "{} {id:>2} {name} [{:.1} s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            o.detail
        );
    };

    let t = Instant::now();
    report(1, "non-dominated sorting oracle", t, Ok(criterion_sorting()));
    let t = Instant::now();
    report(2, "finite-difference gradients", t, Ok(criterion_gradients()));
    let t = Instant::now();
    report(3, "EKF closed form and NEES", t, Ok(criterion_ekf()));
    let t = Instant::now();
    report(8, "scanning law and Albersheim", t, Ok(criterion_scanning()));
    let t = Instant::now();
    report(9, "3-of-4 initialisation", t, Ok(criterion_init_logic()));

    let dir = tempfile::tempdir().expect("temporary directory");
    let t = Instant::now();
    let first = desk_run(dir.path(), 1);
    let desk_seconds = t.elapsed().as_secs_f64();
    match &first {
        Ok(run) => {
            let t = Instant::now();
            report(4, "constraint satisfaction", t, criterion_constraint(run));
            report(5, "trade-off structure", t, criterion_tradeoff(run));
            report(6, "baseline dominance", t, criterion_baseline(run));
            report(7, "NSGA-II upper bound", t, criterion_nsga(run));
            println!("     desk sweep and NSGA-II took {desk_seconds:.1} s");
        }
        Err(e) => {
            for (id, name) in [
                (4, "constraint satisfaction"),
                (5, "trade-off structure"),
                (6, "baseline dominance"),
                (7, "NSGA-II upper bound"),
            ] {
                report(id, name, t, Err(e.clone()));
            }
        }
    }
    let t = Instant::now();
    let second = desk_run(dir.path(), 2);
    let determinism = match (&first, &second) {
        (Ok(a), Ok(b)) => Ok(criterion_determinism(a, b)),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    report(10, "determinism across worker counts", t, determinism);

    if failures == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
