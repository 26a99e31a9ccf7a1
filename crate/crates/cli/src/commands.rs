//! The five subcommands. Each one writes into a single run directory: the frozen
//! config, its CSV/SVG artifacts and a manifest.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use cogradar::drl::{
    evaluate, train, Agent, Checkpoint, DdpgAgent, DdpgConfig, FeatureScale, SacAgent, SacConfig, TrainSchedule,
    TrainingCurves,
};
use cogradar::env::{
    episode_objectives, equal_allocation_policy, mean_violation, run_equal_allocation, step_log_csv, Allocation,
    EnvConfig, RadarEnv, StepRecord,
};
use cogradar::moo::{decode_and_repair, evaluate_schedule, extract_pareto, nsga2_run, Individual, ObjectivePoint};
use cogradar::sim::{truth_csv, truth_trajectory};
use cogradar::tracking::track_history_csv;
use log::{info, warn};
use serde::Serialize;

use crate::config::{derive_seed, Algorithm, PolicyKind, RunConfig};
use crate::error::{io_at, CliError, CliResult};
use crate::fronts::{
    dominance_table, front_csv, hypervolume, hypervolume_table, objectives, read_front, shared_reference, NamedFront,
    REFERENCE_MARGIN,
};
use crate::manifest::RunDir;
use crate::svg::{Chart, Series, Style};

/// Runs `f` on a pool of `workers` threads (0: available parallelism).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Either learner behind one interface.
pub enum AnyAgent {
    Sac(Box<SacAgent>),
    Ddpg(Box<DdpgAgent>),
}

impl AnyAgent {
    pub fn new(cfg: &RunConfig, algorithm: Algorithm, env: &EnvConfig, seed: u64) -> Self {
        let scale = FeatureScale {
            cycle_duration: env.cycle_duration(),
            lambda0: env.lambda0,
        };
        let n = env.max_targets();
        match algorithm {
            Algorithm::Sac => AnyAgent::Sac(Box::new(SacAgent::new(
                SacConfig {
                    seed,
                    ..cfg.agent.sac.clone()
                },
                n,
                scale,
            ))),
            Algorithm::Ddpg => AnyAgent::Ddpg(Box::new(DdpgAgent::new(
                DdpgConfig {
                    seed,
                    ..cfg.agent.ddpg.clone()
                },
                n,
                scale,
            ))),
        }
    }

    pub fn train(&mut self, env: &EnvConfig, schedule: &TrainSchedule) -> CliResult<TrainingCurves> {
        Ok(match self {
            AnyAgent::Sac(a) => train(a.as_mut(), env, schedule)?,
            AnyAgent::Ddpg(a) => train(a.as_mut(), env, schedule)?,
        })
    }

    pub fn evaluate(&mut self, env: &EnvConfig) -> CliResult<Vec<StepRecord>> {
        Ok(match self {
            AnyAgent::Sac(a) => evaluate(a.as_mut(), env)?,
            AnyAgent::Ddpg(a) => evaluate(a.as_mut(), env)?,
        })
    }

    pub fn checkpoint(&self, config_hash: &str) -> Checkpoint {
        match self {
            AnyAgent::Sac(a) => a.checkpoint(config_hash),
            AnyAgent::Ddpg(a) => a.checkpoint(config_hash),
        }
    }

    pub fn restore(&mut self, ckpt: &Checkpoint) -> CliResult<()> {
        match self {
            AnyAgent::Sac(a) => a.restore(ckpt)?,
            AnyAgent::Ddpg(a) => a.restore(ckpt)?,
        }
        Ok(())
    }

    pub fn act(&mut self, obs: &cogradar::env::EnvObservation) -> Allocation {
        match self {
            AnyAgent::Sac(a) => a.act(obs, false),
            AnyAgent::Ddpg(a) => a.act(obs, false),
        }
    }
}

/// Seeds of run `index` of a command, derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunSeeds {
    pub agent: u64,
    pub trainer: u64,
}

impl RunSeeds {
    pub fn derive(master: u64, index: usize) -> Self {
        Self {
            agent: derive_seed(master, "agent", index),
            trainer: derive_seed(master, "trainer", index),
        }
    }
}

/// Result of training one agent at one β and evaluating its deterministic policy.
pub struct TrainedRun {
    pub beta: f64,
    pub seeds: RunSeeds,
    pub agent: AnyAgent,
    pub curves: TrainingCurves,
    pub history: Vec<StepRecord>,
    pub obj_t: f64,
    pub obj_s: f64,
    pub violation_mean: f64,
}

pub fn train_at(cfg: &RunConfig, beta: f64, index: usize) -> CliResult<TrainedRun> {
    let env = cfg.env_config(beta)?;
    let seeds = RunSeeds::derive(cfg.seed, index);
    let mut agent = AnyAgent::new(cfg, cfg.agent.algorithm, &env, seeds.agent);
    let schedule = TrainSchedule {
        seed: seeds.trainer,
        ..cfg.agent.train.clone()
    };
    let curves = agent.train(&env, &schedule)?;
    let history = agent.evaluate(&env)?;
    let (obj_t, obj_s) = episode_objectives(&history)?;
    let violation_mean = mean_violation(&history);
    Ok(TrainedRun {
        beta,
        seeds,
        agent,
        curves,
        history,
        obj_t,
        obj_s,
        violation_mean,
    })
}

pub const SUMMARY_HEADER: &str = "beta,seed,obj_t,obj_s,violation_mean";

fn summary_row(r: &TrainedRun) -> String {
    format!(
        "{},{},{},{},{}\n",
        r.beta, r.seeds.agent, r.obj_t, r.obj_s, r.violation_mean
    )
}

/// Equal-allocation operating point on the configured scenario.
pub fn equal_allocation_point(cfg: &RunConfig) -> CliResult<ObjectivePoint> {
    let env = cfg.env_config(0.0)?;
    let (t, s) = episode_objectives(&run_equal_allocation(&env)?)?;
    Ok(ObjectivePoint::new(t, s, "equal", 0.0, cfg.scenario.seed))
}

fn front_chart(title: &str, sets: &[NamedFront]) -> String {
    sets.iter()
        .fold(
            Chart::new(title, "obj_t = −mean Σ c (m²)", "obj_s = mean Γ"),
            |c, s| {
                c.with(Series::new(
                    s.name.clone(),
                    s.points.iter().map(|p| (p.obj_t, p.obj_s)).collect(),
                    Style::Points,
                ))
            },
        )
        .render()
}

fn curves_chart(curves: &TrainingCurves, budget: f64) -> String {
    Chart::new("Training budget usage", "step", "Σ τ/T0")
        .with(Series::new(
            "usage",
            curves
                .rows
                .iter()
                .map(|r| (r.step as f64, r.violation + budget))
                .collect(),
            Style::Line,
        ))
        .with(Series::new(
            "Θ_max",
            vec![(0.0, budget), (curves.rows.len() as f64, budget)],
            Style::Line,
        ))
        .render()
}

// ---------------------------------------------------------------------------------
// simulate

/// `slot,id,range` for every active target.
pub fn distance_csv(history: &[StepRecord]) -> String {
    let mut out = String::from("slot,id,range\n");
    for r in history {
        for (id, range) in &r.ranges {
            out.push_str(&format!("{},{},{}\n", r.slot, id, range));
        }
    }
    out
}

/// `slot,dwell_1..dwell_N,scan,usage`.
pub fn allocation_csv(history: &[StepRecord], slots: usize) -> String {
    let mut out = String::from("slot");
    for i in 1..=slots {
        out.push_str(&format!(",dwell_{i}"));
    }
    out.push_str(",scan,usage\n");
    for r in history {
        out.push_str(&r.slot.to_string());
        for d in &r.dwells {
            out.push_str(&format!(",{d}"));
        }
        out.push_str(&format!(",{},{}\n", r.scan_time, r.sum_dwell_frac));
    }
    out
}

fn load_checkpoint_agent(cfg: &RunConfig, path: &Path, env: &EnvConfig) -> CliResult<(AnyAgent, Checkpoint)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let ckpt = Checkpoint::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let algorithm = match ckpt.algorithm.as_str() {
        "sac" => Algorithm::Sac,
        "ddpg" => Algorithm::Ddpg,
        other => {
            return Err(CliError::Config(format!(
                "{}: unknown algorithm `{other}`",
                path.display()
            )))
        }
    };
    let mut agent = AnyAgent::new(cfg, algorithm, env, 0);
    agent
        .restore(&ckpt)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((agent, ckpt))
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> CliResult<PathBuf> {
    let mut run = RunDir::create(out, "simulate", cfg)?;
    let env_cfg = cfg.env_config(cfg.env.beta)?;
    let t0 = env_cfg.cycle_duration();
    let n = env_cfg.max_targets();
    let horizon = cfg.scenario.episode_length;

    let mut agent = match cfg.simulate.policy {
        PolicyKind::Checkpoint => {
            let path = cfg.simulate.checkpoint.as_ref().expect("validated");
            let (agent, ckpt) = load_checkpoint_agent(cfg, path, &env_cfg)?;
            if ckpt.config_hash != run.config_hash() {
                run.note(format!(
                    "checkpoint was trained under config {}, simulating under {}",
                    ckpt.config_hash,
                    run.config_hash()
                ));
            }
            Some(agent)
        }
        _ => None,
    };
    let scripted: Vec<Allocation> = cfg
        .simulate
        .allocations
        .iter()
        .map(|row| Allocation::from_dwells(row.clone()))
        .collect();

    let mut env = RadarEnv::new(env_cfg.clone())?;
    let mut obs = env.reset();
    while !env.is_done() {
        let slot = env.history().len();
        let action = match cfg.simulate.policy {
            PolicyKind::Equal => equal_allocation_policy(&env.confirmed_mask(), t0, env_cfg.budget),
            PolicyKind::Checkpoint => agent.as_mut().expect("loaded").act(&obs),
            PolicyKind::Scripted => {
                let k = (slot * scripted.len() / horizon.max(1)).min(scripted.len() - 1);
                scripted[k].clone()
            }
        };
        obs = env.step(&action)?.observation;
    }
    let history = env.history();
    let (obj_t, obj_s) = episode_objectives(history)?;
    let policy = format!("{:?}", cfg.simulate.policy).to_lowercase();

    run.write("distance.csv", &distance_csv(history))?;
    run.write("allocation.csv", &allocation_csv(history, n))?;
    run.write("steps.csv", &step_log_csv(history, n))?;
    run.write("tracks.csv", &track_history_csv(env.track_log()))?;
    run.write("truth.csv", &truth_csv(&truth_trajectory(&cfg.scenario)?))?;
    run.write(
        "summary.csv",
        &format!(
            "policy,beta,obj_t,obj_s,violation_mean\n{policy},{},{obj_t},{obj_s},{}\n",
            env_cfg.beta,
            mean_violation(history)
        ),
    )?;

    let mut ids: Vec<u32> = history.iter().flat_map(|r| r.ranges.iter().map(|x| x.0)).collect();
    ids.sort_unstable();
    ids.dedup();
    let distance = ids
        .iter()
        .fold(Chart::new("Target distance", "slot", "range (km)"), |c, id| {
            let pts = history
                .iter()
                .filter_map(|r| r.ranges.iter().find(|x| x.0 == *id).map(|x| (r.slot as f64, x.1 / 1e3)))
                .collect();
            c.with(Series::new(format!("target {id}"), pts, Style::Line))
        });
    run.write("distance.svg", &distance.render())?;
    let mut alloc = Chart::new("Time allocation", "slot", "seconds");
    for i in 0..n {
        alloc = alloc.with(Series::new(
            format!("slot {}", i + 1),
            history.iter().map(|r| (r.slot as f64, r.dwells[i])).collect(),
            Style::Line,
        ));
    }
    alloc = alloc.with(Series::new(
        "scan",
        history.iter().map(|r| (r.slot as f64, r.scan_time)).collect(),
        Style::Line,
    ));
    run.write("allocation.svg", &alloc.render())?;
    run.seed("scenario", cfg.scenario.seed);
    info!("simulate ({policy}): obj_t {obj_t:.3}, obj_s {obj_s:.4}");
    run.finish()
}

// ---------------------------------------------------------------------------------
// train

pub fn cmd_train(cfg: &RunConfig, out: &Path) -> CliResult<PathBuf> {
    let mut run = RunDir::create(out, "train", cfg)?;
    let r = train_at(cfg, cfg.env.beta, 0)?;
    run.seed("scenario", cfg.scenario.seed);
    run.seed("agent", r.seeds.agent);
    run.seed("trainer", r.seeds.trainer);
    let env = cfg.env_config(cfg.env.beta)?;
    run.write("checkpoint.json", &r.agent.checkpoint(run.config_hash()).to_json())?;
    run.write("curves.csv", &r.curves.to_csv())?;
    run.write("curves.svg", &curves_chart(&r.curves, env.budget))?;
    run.write("eval_steps.csv", &step_log_csv(&r.history, env.max_targets()))?;
    run.write("summary.csv", &format!("{SUMMARY_HEADER}\n{}", summary_row(&r)))?;
    run.note(format!(
        "final-20% budget usage {:.4}, minimum lambda {}",
        r.curves.final_budget_usage(0.2, env.budget),
        r.curves.min_lambda()
    ));
    info!("train β={}: obj_t {:.3}, obj_s {:.4}", r.beta, r.obj_t, r.obj_s);
    run.finish()
}

// ---------------------------------------------------------------------------------
// sweep

/// Directory of sweep run `index` relative to the sweep root.
pub fn sweep_run_dir(index: usize) -> String {
    format!("beta_{index:02}")
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> CliResult<PathBuf> {
    let betas = cfg.sweep.resolve()?;
    cfg.env_config(0.0)?;
    let mut run = RunDir::create(out, "sweep", cfg)?;
    let algorithm = cfg.agent.algorithm.name();
    info!("sweep: {} β values with {algorithm}", betas.len());

    let results: Vec<CliResult<TrainedRun>> = with_workers(cfg.workers, || {
        use rayon::prelude::*;
        betas
            .par_iter()
            .enumerate()
            .map(|(i, &beta)| {
                let outcome = catch_unwind(AssertUnwindSafe(|| train_at(cfg, beta, i))).unwrap_or_else(|panic| {
                    let msg = panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "panic".into());
                    Err(CliError::Runtime(msg))
                });
                match &outcome {
                    Ok(r) => info!("β={beta}: obj_t {:.3}, obj_s {:.4}", r.obj_t, r.obj_s),
                    Err(e) => warn!("β={beta} failed: {e}"),
                }
                outcome
            })
            .collect()
    })?;

    let budget = cfg.env.budget;
    let mut points = Vec::new();
    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut failures = Vec::new();
    for (i, (beta, result)) in betas.iter().zip(results).enumerate() {
        let seeds = RunSeeds::derive(cfg.seed, i);
        run.seed(format!("{}/agent", sweep_run_dir(i)), seeds.agent);
        run.seed(format!("{}/trainer", sweep_run_dir(i)), seeds.trainer);
        match result {
            Ok(r) => {
                let dir = sweep_run_dir(i);
                run.write(
                    &format!("{dir}/checkpoint.json"),
                    &r.agent.checkpoint(run.config_hash()).to_json(),
                )?;
                run.write(&format!("{dir}/curves.csv"), &r.curves.to_csv())?;
                run.write(&format!("{dir}/curves.svg"), &curves_chart(&r.curves, budget))?;
                run.write(
                    &format!("{dir}/summary.csv"),
                    &format!("{SUMMARY_HEADER}\n{}", summary_row(&r)),
                )?;
                summary.push_str(&summary_row(&r));
                points.push(ObjectivePoint::new(r.obj_t, r.obj_s, algorithm, r.beta, r.seeds.agent));
            }
            Err(e) => failures.push(format!("β={beta}: {e}")),
        }
    }
    run.seed("scenario", cfg.scenario.seed);
    run.write("summary.csv", &summary)?;
    run.write("points.csv", &front_csv(&points))?;
    let front = extract_pareto(&points);
    run.write("front.csv", &front_csv(&front))?;

    let baseline = vec![equal_allocation_point(cfg)?];
    run.write("baseline.csv", &front_csv(&baseline))?;
    let sets = [
        NamedFront::new(algorithm, points.clone()),
        NamedFront::new("equal", baseline.clone()),
    ];
    if !points.is_empty() {
        let reference = shared_reference(sets.iter().map(|s| s.points.as_slice()));
        run.write("hypervolume.csv", &hypervolume_table(&sets, reference)?)?;
        run.note(format!(
            "hypervolume reference ({}, {}): component-wise minima minus {}% of the range",
            reference[0],
            reference[1],
            REFERENCE_MARGIN * 100.0
        ));
    }
    run.write("front.svg", &front_chart(&format!("{algorithm} β sweep"), &sets))?;

    for f in &failures {
        run.note(format!("failed: {f}"));
    }
    let total = betas.len();
    run.finish()?;
    if failures.is_empty() {
        Ok(out.to_path_buf())
    } else {
        Err(CliError::PartialSweep {
            failed: failures.len(),
            total,
            details: failures.join("; "),
        })
    }
}

// ---------------------------------------------------------------------------------
// nsga

#[derive(Serialize)]
struct NsgaCheckpoint<'a> {
    generation: usize,
    seed: u64,
    population: &'a [Individual],
}

pub fn cmd_nsga(cfg: &RunConfig, out: &Path, against: &[PathBuf]) -> CliResult<PathBuf> {
    // Named by algorithm rather than path so outputs do not depend on where inputs live.
    let others: Vec<NamedFront> = against
        .iter()
        .map(|p| {
            let points = read_front(p)?;
            let name = points
                .first()
                .map(|q| q.provenance.algorithm.clone())
                .unwrap_or_else(|| {
                    p.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default()
                });
            Ok(NamedFront::new(name, points))
        })
        .collect::<CliResult<_>>()?;
    let env = cfg.env_config(0.0)?;
    let mut run = RunDir::create(out, "nsga", cfg)?;
    run.seed("nsga", cfg.nsga.ga.seed);
    run.seed("scenario", cfg.scenario.seed);
    let layout = cfg.genome_layout();
    let horizon = cfg.scenario.episode_length;
    let t0 = env.cycle_duration();
    let evaluator = |g: &[f64]| evaluate_schedule(&env, &decode_and_repair(g, &layout, t0, horizon)?);

    let every = cfg.nsga.checkpoint_every;
    let mut checkpoints: Vec<(usize, String)> = Vec::new();
    let generations = cfg.nsga.ga.generations;
    let outcome = with_workers(cfg.workers, || {
        nsga2_run(&cfg.nsga.ga, layout.len(), evaluator, |generation, pop| {
            if generation % 10 == 0 || generation == generations {
                info!("nsga generation {generation}/{generations}");
            }
            if every > 0 && (generation % every == 0 || generation == generations) {
                let ckpt = NsgaCheckpoint {
                    generation,
                    seed: cfg.nsga.ga.seed,
                    population: pop,
                };
                checkpoints.push((generation, serde_json::to_string(&ckpt).expect("plain data")));
            }
        })
    })??;
    if let Some((_, last)) = checkpoints.last() {
        run.write("checkpoint.json", last)?;
    }

    let to_points = |inds: &[Individual]| -> Vec<ObjectivePoint> {
        inds.iter()
            .enumerate()
            .map(|(i, ind)| {
                ObjectivePoint::new(
                    ind.objectives[0],
                    ind.objectives[1],
                    "nsga2",
                    i as f64,
                    cfg.nsga.ga.seed,
                )
            })
            .collect()
    };
    let population = to_points(&outcome.population);
    let front = extract_pareto(&population);
    run.write("population.csv", &front_csv(&population))?;
    run.write("front.csv", &front_csv(&front))?;
    let baseline = vec![equal_allocation_point(cfg)?];
    run.write("baseline.csv", &front_csv(&baseline))?;

    let history_points: Vec<ObjectivePoint> = outcome
        .front_history
        .iter()
        .flatten()
        .map(|o| ObjectivePoint::new(o[0], o[1], "nsga2", 0.0, 0))
        .collect();
    let mut sets = vec![
        NamedFront::new("nsga2", front.clone()),
        NamedFront::new("equal", baseline),
    ];
    sets.extend(others);
    let reference = shared_reference(
        sets.iter()
            .map(|s| s.points.as_slice())
            .chain(std::iter::once(history_points.as_slice())),
    );
    let mut hv_csv = String::from("generation,hypervolume,front_size,ref_t,ref_s\n");
    for (g, f) in outcome.front_history.iter().enumerate() {
        let hv = cogradar::moo::hypervolume_2d(f, reference)?;
        hv_csv.push_str(&format!("{g},{hv},{},{},{}\n", f.len(), reference[0], reference[1]));
    }
    run.write("hypervolume.csv", &hv_csv)?;
    run.write("comparison.csv", &hypervolume_table(&sets, reference)?)?;
    run.write("dominance.csv", &dominance_table(&sets))?;
    run.write("front.svg", &front_chart("NSGA-II front", &sets))?;
    run.note(format!(
        "hypervolume reference ({}, {}): component-wise minima over every generation's front, \
         the equal-allocation point and the compared fronts, minus {}% of the range",
        reference[0],
        reference[1],
        REFERENCE_MARGIN * 100.0
    ));
    info!(
        "nsga: final front of {} points, hypervolume {}",
        front.len(),
        hypervolume(&front, reference)?
    );
    run.finish()
}

// ---------------------------------------------------------------------------------
// compare

pub fn cmd_compare(cfg: &RunConfig, out: &Path, files: &[PathBuf], reference: Option<[f64; 2]>) -> CliResult<PathBuf> {
    if files.is_empty() {
        return Err(CliError::Config("compare: at least one front file is required".into()));
    }
    let sets: Vec<NamedFront> = files
        .iter()
        .map(|p| Ok(NamedFront::new(p.display().to_string(), read_front(p)?)))
        .collect::<CliResult<_>>()?;
    if let Some(empty) = sets.iter().find(|s| s.points.is_empty()) {
        return Err(CliError::Schema {
            file: PathBuf::from(&empty.name),
            reason: "front has no rows".into(),
        });
    }
    let reference = reference.unwrap_or_else(|| shared_reference(sets.iter().map(|s| s.points.as_slice())));
    for s in &sets {
        if let Some(p) = objectives(&s.points)
            .into_iter()
            .find(|p| !(p[0] >= reference[0] && p[1] >= reference[1]))
        {
            return Err(CliError::Config(format!(
                "reference ({}, {}) does not lie below point ({}, {}) of {}",
                reference[0], reference[1], p[0], p[1], s.name
            )));
        }
    }
    let mut run = RunDir::create(out, "compare", cfg)?;
    run.write("hypervolume.csv", &hypervolume_table(&sets, reference)?)?;
    run.write("dominance.csv", &dominance_table(&sets))?;
    run.write("compare.svg", &front_chart("Front comparison", &sets))?;
    run.note(format!(
        "inputs: {}",
        files
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    ));
    run.finish()
}

/// Reads a file into a string, mapping failures to runtime errors naming the path.
pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(io_at(path))
}
