//! The radar time-allocation problem as a constrained MDP.
//!
//! Each step is one measurement cycle of `T0` seconds: the action assigns a dwell time to
//! every track slot and the remainder of the cycle goes to surveillance. The reward is the
//! scalarised utility `-Σ c + β·Γ` minus the Lagrangian penalty on the tracking budget,
//! and the dual variable is updated by projected gradient ascent after every step.

use nalgebra::Vector2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scanning::{detect_new_targets, gamma, DetectionSpec, RadarParams};
use crate::sim::{measure, seeded_rng, Scenario, ScenarioConfig, TargetTruth, MEASUREMENT_STREAM};
use crate::tracking::{
    ekf_predict, ekf_update, gnn_associate, seed_track, tracking_cost, update_init_logic, DwellNoiseModel, InitBuffer,
    InitDecision, ScanOutcome, Track, TrackRecord, TrackSeed,
};

/// Scale applied to β in the network features.
pub const BETA_FEATURE_SCALE: f64 = 1e5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub scenario: ScenarioConfig,
    pub radar: RadarParams,
    pub detection: DetectionSpec,
    pub noise: DwellNoiseModel,
    pub track_seed: TrackSeed,
    pub beta: f64,
    pub lambda0: f64,
    pub dual_step: f64,
    /// Θ_max, fraction of the cycle budgeted for tracking.
    pub budget: f64,
    pub gate: f64,
    pub cost_ceiling: f64,
    pub drop_after_misses: u32,
}

impl EnvConfig {
    /// Table defaults for the given scenario: Θ_max = 0.9, λ0 = 5000, α_λ = 15000,
    /// `P_d = 0.9`, `P_f = 1e-3`, `R0 = diag(16, 1e-6)`. The radar is calibrated so that
    /// Γ = 1 when tracking uses its full budget, and the dwell-noise reference is the
    /// equal share `T0·Θ_max/N`.
    pub fn with_defaults(scenario: ScenarioConfig) -> Result<Self> {
        scenario.validate()?;
        let budget = 0.9;
        let t0 = scenario.cycle_duration;
        let detection = DetectionSpec::default();
        let radar = RadarParams::calibrated(10_000.0, t0 * (1.0 - budget), &detection)?;
        let noise = DwellNoiseModel::new(16.0, 1e-6, t0 * budget / scenario.max_targets as f64)?;
        Ok(Self {
            scenario,
            radar,
            detection,
            noise,
            track_seed: TrackSeed::default(),
            beta: 0.0,
            lambda0: 5_000.0,
            dual_step: 15_000.0,
            budget,
            gate: 500.0,
            cost_ceiling: 1e6,
            drop_after_misses: 4,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.radar.validate()?;
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid("env.beta", "must be >= 0"));
        }
        if !(self.lambda0 >= 0.0) {
            return Err(invalid("env.lambda0", "must be >= 0"));
        }
        if !(self.dual_step > 0.0) {
            return Err(invalid("env.dual_step", "must be > 0"));
        }
        if !(self.budget > 0.0 && self.budget <= 1.0) {
            return Err(invalid("env.budget", "must lie in (0, 1]"));
        }
        if !(self.gate > 0.0) {
            return Err(invalid("env.gate", "must be > 0"));
        }
        if !(self.cost_ceiling > 0.0) {
            return Err(invalid("env.cost_ceiling", "must be > 0"));
        }
        Ok(())
    }

    pub fn max_targets(&self) -> usize {
        self.scenario.max_targets
    }

    pub fn cycle_duration(&self) -> f64 {
        self.scenario.cycle_duration
    }
}

/// Previous costs and dwells per slot, the dual variable and β. Always `2N + 2` long.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvObservation {
    pub prev_costs: Vec<f64>,
    pub prev_dwells: Vec<f64>,
    pub lambda: f64,
    pub beta: f64,
}

impl EnvObservation {
    pub fn zeros(slots: usize, lambda: f64, beta: f64) -> Self {
        Self {
            prev_costs: vec![0.0; slots],
            prev_dwells: vec![0.0; slots],
            lambda,
            beta,
        }
    }

    pub fn len(&self) -> usize {
        2 * self.prev_costs.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.prev_costs);
        v.extend_from_slice(&self.prev_dwells);
        v.push(self.lambda);
        v.push(self.beta);
        v
    }

    /// Network inputs: `ln(1 + c)/10`, `τ/T0`, `λ/λ0` and `β/1e5`.
    pub fn features(&self, cycle_duration: f64, lambda0: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend(self.prev_costs.iter().map(|c| c.max(0.0).ln_1p() / 10.0));
        v.extend(self.prev_dwells.iter().map(|d| d / cycle_duration));
        v.push(if lambda0 > 0.0 {
            self.lambda / lambda0
        } else {
            self.lambda
        });
        v.push(self.beta / BETA_FEATURE_SCALE);
        v
    }
}

/// Per-slot dwell times. `scan` overrides the implied scan time `T0 − Σ dwells`, which
/// leaves the unallocated remainder of the cycle idle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub dwells: Vec<f64>,
    pub scan: Option<f64>,
}

impl Allocation {
    pub fn from_dwells(dwells: Vec<f64>) -> Self {
        Self { dwells, scan: None }
    }

    pub fn with_scan(dwells: Vec<f64>, scan: f64) -> Self {
        Self {
            dwells,
            scan: Some(scan),
        }
    }

    pub fn total_dwell(&self) -> f64 {
        self.dwells.iter().sum()
    }

    pub fn scan_time(&self, cycle_duration: f64) -> f64 {
        match self.scan {
            Some(s) => s.clamp(0.0, cycle_duration),
            None => (cycle_duration - self.total_dwell()).max(0.0),
        }
    }
}

/// Every active target gets `Θ_max·T0 / active`; with no active target the whole cycle
/// goes to scanning.
pub fn equal_allocation_policy(active: &[bool], cycle_duration: f64, budget: f64) -> Allocation {
    let count = active.iter().filter(|&&a| a).count();
    let share = if count == 0 {
        0.0
    } else {
        budget * cycle_duration / count as f64
    };
    Allocation::from_dwells(active.iter().map(|&a| if a { share } else { 0.0 }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub utility: f64,
    /// `-Σ c` over confirmed tracks.
    pub tracking_term: f64,
    /// `β·Γ`.
    pub scanning_term: f64,
    pub gamma: f64,
    pub penalty: f64,
    /// `Σ τ/T0 − Θ_max`.
    pub violation: f64,
    pub reward: f64,
}

/// What happened in one cycle; the episode history is a list of these.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub slot: usize,
    pub sum_dwell_frac: f64,
    /// λ used for this step's penalty.
    pub lambda: f64,
    pub breakdown: RewardBreakdown,
    pub scan_time: f64,
    pub costs: Vec<f64>,
    pub dwells: Vec<f64>,
    /// `(target id, range)` for every active truth target.
    pub ranges: Vec<(u32, f64)>,
    /// Target id held by each slot after the step.
    pub slot_targets: Vec<Option<u32>>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: EnvObservation,
    pub reward: RewardBreakdown,
    pub done: bool,
}

/// Simulation + tracking + scanning behind a reset/step interface.
#[derive(Debug, Clone)]
pub struct RadarEnv {
    config: EnvConfig,
    scenario: Scenario,
    rng: ChaCha8Rng,
    tracks: Vec<Option<Track>>,
    buffers: Vec<InitBuffer>,
    lambda: f64,
    observation: EnvObservation,
    history: Vec<StepRecord>,
    track_log: Vec<TrackRecord>,
    clipped_actions: usize,
}

impl RadarEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let scenario = Scenario::new(config.scenario.clone())?;
        let n = config.max_targets();
        Ok(Self {
            rng: seeded_rng(config.scenario.seed, MEASUREMENT_STREAM),
            tracks: vec![None; n],
            buffers: Vec::new(),
            lambda: config.lambda0,
            observation: EnvObservation::zeros(n, config.lambda0, config.beta),
            history: Vec::new(),
            track_log: Vec::new(),
            clipped_actions: 0,
            scenario,
            config,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    /// Fresh scenario from the configured seed, zero costs and dwells, `λ = λ0`.
    pub fn reset(&mut self) -> EnvObservation {
        let fresh = Self::new(self.config.clone()).expect("configuration validated at construction");
        *self = fresh;
        self.observation.clone()
    }

    /// Reset with a different scenario seed.
    pub fn reset_with_seed(&mut self, seed: u64) -> EnvObservation {
        self.config.scenario.seed = seed;
        self.reset()
    }

    pub fn observation(&self) -> &EnvObservation {
        &self.observation
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_done(&self) -> bool {
        self.scenario.is_finished()
    }

    pub fn history(&self) -> &[StepRecord] {
        &self.history
    }

    pub fn track_log(&self) -> &[TrackRecord] {
        &self.track_log
    }

    /// Number of action entries that had to be clipped into `[0, T0]`.
    pub fn clipped_actions(&self) -> usize {
        self.clipped_actions
    }

    /// Slots currently holding a confirmed track.
    pub fn confirmed_mask(&self) -> Vec<bool> {
        self.tracks.iter().map(Option::is_some).collect()
    }

    pub fn step(&mut self, action: &Allocation) -> Result<StepOutcome> {
        let n = self.config.max_targets();
        let t0 = self.config.cycle_duration();
        if self.is_done() {
            return Err(Error::EpisodeFinished(self.scenario.next_slot()));
        }
        if action.dwells.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: action.dwells.len(),
            });
        }

        let mut dwells = vec![0.0; n];
        for (i, &d) in action.dwells.iter().enumerate() {
            let clipped = if d.is_finite() { d.clamp(0.0, t0) } else { 0.0 };
            if clipped != d {
                self.clipped_actions += 1;
            }
            // Requests for empty slots are dropped before the budget is computed.
            if self.tracks[i].is_some() {
                dwells[i] = clipped;
            }
        }
        let effective = Allocation {
            dwells,
            scan: action.scan,
        };
        let scan_time = effective.scan_time(t0);

        let slot = self.scenario.next_slot();
        let truth = self.scenario.advance();

        self.update_tracks(&truth, &effective.dwells, slot)?;
        self.scan_and_initialise(&truth, scan_time, slot);

        let costs: Vec<f64> = self
            .tracks
            .iter()
            .map(|t| t.as_ref().map_or(0.0, tracking_cost))
            .collect();
        let tracking_term = -costs.iter().sum::<f64>();
        let g = gamma(&self.config.radar, &self.config.detection, scan_time);
        let scanning_term = self.config.beta * g;
        let utility = tracking_term + scanning_term;
        let sum_dwell_frac = effective.total_dwell() / t0;
        let violation = sum_dwell_frac - self.config.budget;
        let penalty = self.lambda * violation;
        let breakdown = RewardBreakdown {
            utility,
            tracking_term,
            scanning_term,
            gamma: g,
            penalty,
            violation,
            reward: utility - penalty,
        };

        self.history.push(StepRecord {
            slot,
            sum_dwell_frac,
            lambda: self.lambda,
            breakdown,
            scan_time,
            costs: costs.clone(),
            dwells: effective.dwells.clone(),
            ranges: truth.iter().map(|t| (t.id, t.range())).collect(),
            slot_targets: self.tracks.iter().map(|t| t.as_ref().map(|t| t.target_id)).collect(),
        });
        for (track, &dwell) in self.tracks.iter().zip(&effective.dwells) {
            if let Some(t) = track {
                self.track_log.push(TrackRecord {
                    slot,
                    target_id: t.target_id,
                    cost: tracking_cost(t),
                    trace_p: t.cov.trace(),
                    dwell,
                });
            }
        }

        self.lambda = (self.lambda + self.config.dual_step * violation).max(0.0);
        self.observation = EnvObservation {
            prev_costs: costs,
            prev_dwells: effective.dwells,
            lambda: self.lambda,
            beta: self.config.beta,
        };
        Ok(StepOutcome {
            observation: self.observation.clone(),
            reward: breakdown,
            done: self.is_done(),
        })
    }

    fn update_tracks(&mut self, truth: &[TargetTruth], dwells: &[f64], slot: usize) -> Result<()> {
        let model = &self.scenario.model;
        for (entry, &dwell) in self.tracks.iter_mut().zip(dwells) {
            let Some(track) = entry.as_mut() else { continue };
            let mut next = ekf_predict(track, model);
            match truth.iter().find(|t| t.id == track.target_id) {
                Some(target) => {
                    next.misses = 0;
                    if dwell > 0.0 {
                        let r = self.config.noise.effective_cov(dwell)?;
                        if let Ok(z) = measure(&target.state, &r, Some(target.id), slot, &mut self.rng) {
                            next = ekf_update(&next, &z, &self.config.noise, dwell).unwrap_or(next);
                        }
                    }
                }
                None => next.misses += 1,
            }
            let drop =
                next.misses >= self.config.drop_after_misses || !(tracking_cost(&next) <= self.config.cost_ceiling);
            *entry = if drop { None } else { Some(next) };
        }
        Ok(())
    }

    fn scan_and_initialise(&mut self, truth: &[TargetTruth], scan_time: f64, slot: usize) {
        let tracked: Vec<u32> = self.tracks.iter().flatten().map(|t| t.target_id).collect();
        let detections = detect_new_targets(
            truth,
            &tracked,
            &self.config.radar,
            &self.config.detection,
            scan_time,
            &self.config.noise.baseline(),
            slot,
            &mut self.rng,
        );
        let positions: Vec<Vector2<f64>> = detections.iter().map(|m| m.position()).collect();
        let pairs = gnn_associate(&positions, &self.buffers, self.config.gate);

        let mut buffer_hit = vec![None; self.buffers.len()];
        let mut detection_used = vec![false; detections.len()];
        for &(d, b) in &pairs {
            buffer_hit[b] = Some(d);
            detection_used[d] = true;
        }
        let mut survivors = Vec::with_capacity(self.buffers.len());
        for (mut buffer, hit) in std::mem::take(&mut self.buffers).into_iter().zip(buffer_hit) {
            let outcome = match hit {
                Some(d) => ScanOutcome::Hit {
                    position: positions[d],
                    source_id: detections[d].source_id,
                },
                None => ScanOutcome::Miss,
            };
            match update_init_logic(&mut buffer, outcome) {
                InitDecision::Pending => survivors.push(buffer),
                InitDecision::Discarded => {}
                InitDecision::Confirmed => {
                    if let Some(track) = seed_track(&buffer, &self.config.track_seed) {
                        let duplicate = self.tracks.iter().flatten().any(|t| t.target_id == track.target_id);
                        if let (false, Some(free)) = (duplicate, self.tracks.iter().position(Option::is_none)) {
                            self.tracks[free] = Some(track);
                        }
                    }
                }
            }
        }
        for (d, used) in detection_used.into_iter().enumerate() {
            if !used {
                survivors.push(InitBuffer::from_detection(
                    self.config.gate,
                    positions[d],
                    detections[d].source_id,
                ));
            }
        }
        self.buffers = survivors;
    }
}

/// Time-averaged `(-Σ c, Γ)` over an episode.
pub fn episode_objectives(history: &[StepRecord]) -> Result<(f64, f64)> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let n = history.len() as f64;
    let obj_t = history.iter().map(|r| r.breakdown.tracking_term).sum::<f64>() / n;
    let obj_s = history.iter().map(|r| r.breakdown.gamma).sum::<f64>() / n;
    Ok((obj_t, obj_s))
}

pub fn mean_violation(history: &[StepRecord]) -> f64 {
    if history.is_empty() {
        return 0.0;
    }
    history.iter().map(|r| r.breakdown.violation).sum::<f64>() / history.len() as f64
}

/// Runs one full episode under `policy` and returns the history.
pub fn run_episode<F>(config: &EnvConfig, mut policy: F) -> Result<Vec<StepRecord>>
where
    F: FnMut(&RadarEnv, &EnvObservation) -> Allocation,
{
    let mut env = RadarEnv::new(config.clone())?;
    let mut obs = env.reset();
    while !env.is_done() {
        let action = policy(&env, &obs);
        obs = env.step(&action)?.observation;
    }
    Ok(env.history)
}

/// Equal-allocation episode on `config`.
pub fn run_equal_allocation(config: &EnvConfig) -> Result<Vec<StepRecord>> {
    let t0 = config.cycle_duration();
    let budget = config.budget;
    run_episode(config, |env, _| {
        equal_allocation_policy(&env.confirmed_mask(), t0, budget)
    })
}

/// CSV with header `slot,sum_dwell_frac,lambda,utility,reward,gamma,cost_1..cost_N`.
pub fn step_log_csv(history: &[StepRecord], slots: usize) -> String {
    let mut out = String::from("slot,sum_dwell_frac,lambda,utility,reward,gamma");
    for i in 1..=slots {
        out.push_str(&format!(",cost_{i}"));
    }
    out.push('\n');
    for r in history {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            r.slot, r.sum_dwell_frac, r.lambda, r.breakdown.utility, r.breakdown.reward, r.breakdown.gamma
        ));
        for c in &r.costs {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}
