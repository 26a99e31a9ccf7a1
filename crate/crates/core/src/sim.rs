//! Ground-truth scenario simulation.
//!
//! Targets move under a constant-velocity model driven by white acceleration noise and
//! are observed in polar coordinates (range, azimuth) from a radar at the origin.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix2x4, Matrix4, SymmetricEigen, Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Kinematic state `[x, y, vx, vy]` in metres and metres per second.
pub type State = Vector4<f64>;

/// Random stream used for the truth trajectories. Measurement and detection draws use
/// [`MEASUREMENT_STREAM`] so that the truth does not depend on what the radar looks at.
pub const TRUTH_STREAM: u64 = 0;
pub const MEASUREMENT_STREAM: u64 = 1;

/// Seeded generator used across the crate.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Draws a standard-normal vector of length `N`.
pub(crate) fn standard_normal<R: Rng + ?Sized, const N: usize>(rng: &mut R) -> [f64; N] {
    std::array::from_fn(|_| rng.sample(StandardNormal))
}

pub(crate) fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTruth {
    pub id: u32,
    pub spawn_slot: usize,
    /// First slot at which the target no longer exists.
    pub despawn_slot: usize,
    pub state: State,
}

impl TargetTruth {
    pub fn new(id: u32, spawn_slot: usize, despawn_slot: usize, state: State) -> Result<Self> {
        if spawn_slot >= despawn_slot {
            return Err(invalid(
                "target.despawn",
                format!("spawn slot {spawn_slot} must precede despawn slot {despawn_slot}"),
            ));
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(invalid("target.state", "non-finite initial state"));
        }
        Ok(Self {
            id,
            spawn_slot,
            despawn_slot,
            state,
        })
    }

    pub fn is_active(&self, slot: usize) -> bool {
        self.spawn_slot <= slot && slot < self.despawn_slot
    }

    pub fn range(&self) -> f64 {
        self.state[0].hypot(self.state[1])
    }
}

/// Builds the discretised white-noise-acceleration covariance for one step of `dt`
/// seconds with acceleration variance `q`.
pub fn build_process_noise(dt: f64, q: f64) -> Matrix4<f64> {
    let dt2 = dt * dt;
    let pp = q * dt2 * dt2 / 4.0;
    let pv = q * dt2 * dt / 2.0;
    let vv = q * dt2;
    Matrix4::new(
        pp, 0.0, pv, 0.0, //
        0.0, pp, 0.0, pv, //
        pv, 0.0, vv, 0.0, //
        0.0, pv, 0.0, vv,
    )
}

/// Constant-velocity transition for a step of `dt` seconds.
pub fn constant_velocity_transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

/// Constant-velocity motion with Gaussian manoeuvre noise.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub dt: f64,
    pub maneuver_intensity: f64,
    pub transition: Matrix4<f64>,
    pub process_noise: Matrix4<f64>,
    /// `L` with `L·Lᵀ = Q`; `Q` is rank deficient so this comes from the eigen
    /// decomposition rather than Cholesky.
    noise_factor: Matrix4<f64>,
}

impl MotionModel {
    pub fn constant_velocity(dt: f64, maneuver_intensity: f64) -> Result<Self> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(invalid("motion.dt", format!("must be >= 0, got {dt}")));
        }
        if !(maneuver_intensity >= 0.0 && maneuver_intensity.is_finite()) {
            return Err(invalid("motion.q", format!("must be >= 0, got {maneuver_intensity}")));
        }
        let process_noise = build_process_noise(dt, maneuver_intensity);
        Ok(Self {
            dt,
            maneuver_intensity,
            transition: constant_velocity_transition(dt),
            noise_factor: psd_factor(&process_noise),
            process_noise,
        })
    }

    /// Draws `w ~ N(0, Q)`.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        let z: [f64; 4] = standard_normal(rng);
        self.noise_factor * Vector4::from(z)
    }
}

fn psd_factor(m: &Matrix4<f64>) -> Matrix4<f64> {
    let eig = SymmetricEigen::new(*m);
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    eig.eigenvectors * Matrix4::from_diagonal(&sqrt_vals)
}

/// Propagates a target one step: `x' = F·x + w`.
pub fn step_truth<R: Rng + ?Sized>(target: &TargetTruth, model: &MotionModel, rng: &mut R) -> TargetTruth {
    let mut next = target.clone();
    next.state = model.transition * target.state + model.sample_noise(rng);
    next
}

/// One polar radar measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub range: f64,
    pub azimuth: f64,
    pub noise_cov: Matrix2<f64>,
    pub source_id: Option<u32>,
    pub slot: usize,
}

impl Measurement {
    pub fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.range, self.azimuth)
    }

    /// Cartesian position implied by the measurement.
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.range * self.azimuth.cos(), self.range * self.azimuth.sin())
    }
}

/// Noise-free measurement function `h(x) = [√(x²+y²), atan2(y, x)]`.
pub fn measurement_function(state: &State) -> Result<Vector2<f64>> {
    let (x, y) = (state[0], state[1]);
    if x == 0.0 && y == 0.0 {
        return Err(Error::DegeneratePosition);
    }
    Ok(Vector2::new(x.hypot(y), wrap_angle(y.atan2(x))))
}

pub fn measure<R: Rng + ?Sized>(
    state: &State,
    noise_cov: &Matrix2<f64>,
    source_id: Option<u32>,
    slot: usize,
    rng: &mut R,
) -> Result<Measurement> {
    let h = measurement_function(state)?;
    let z: [f64; 2] = standard_normal(rng);
    let range = h[0] + noise_cov[(0, 0)].sqrt() * z[0];
    let azimuth = wrap_angle(h[1] + noise_cov[(1, 1)].sqrt() * z[1]);
    Ok(Measurement {
        // A negative draw near the origin is reflected onto the opposite bearing.
        range: range.abs(),
        azimuth: if range < 0.0 { wrap_angle(azimuth + PI) } else { azimuth },
        noise_cov: *noise_cov,
        source_id,
        slot,
    })
}

/// Jacobian of `h` with respect to the state.
pub fn measurement_jacobian(state: &State) -> Result<Matrix2x4<f64>> {
    let (x, y) = (state[0], state[1]);
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return Err(Error::DegeneratePosition);
    }
    let r = r2.sqrt();
    Ok(Matrix2x4::new(
        x / r,
        y / r,
        0.0,
        0.0, //
        -y / r2,
        x / r2,
        0.0,
        0.0,
    ))
}

/// A scripted target: `(spawn, despawn, x0, y0, vx0, vy0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedTarget {
    pub spawn: usize,
    pub despawn: usize,
    pub x0: f64,
    pub y0: f64,
    pub vx0: f64,
    pub vy0: f64,
}

/// Parameters for seeded random target generation. Positions are drawn uniformly in
/// range and bearing, velocities uniformly in speed and heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomSpawn {
    pub count: usize,
    pub range_min: f64,
    pub range_max: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub spawn_min: usize,
    pub spawn_max: usize,
    pub lifetime_min: usize,
    pub lifetime_max: usize,
}

impl Default for RandomSpawn {
    fn default() -> Self {
        Self {
            count: 3,
            range_min: 3_000.0,
            range_max: 8_000.0,
            speed_min: 0.0,
            speed_max: 10.0,
            spawn_min: 0,
            spawn_max: 1_400,
            lifetime_min: 600,
            lifetime_max: 1_600,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpawnSchedule {
    Scripted { targets: Vec<ScriptedTarget> },
    Random(RandomSpawn),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub max_targets: usize,
    pub episode_length: usize,
    pub cycle_duration: f64,
    /// Acceleration noise variance `q` in (m/s²)².
    pub maneuver_intensity: f64,
    /// Targets leaving this radius despawn.
    pub arena_radius: f64,
    pub schedule: SpawnSchedule,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            max_targets: 5,
            episode_length: 2_000,
            cycle_duration: 2.5,
            maneuver_intensity: 16.0,
            arena_radius: 50_000.0,
            schedule: SpawnSchedule::Random(RandomSpawn::default()),
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_targets < 1 {
            return Err(invalid("scenario.max_targets", "must be >= 1"));
        }
        if self.episode_length == 0 {
            return Err(invalid("scenario.episode_length", "must be > 0"));
        }
        if !(self.cycle_duration > 0.0 && self.cycle_duration.is_finite()) {
            return Err(invalid("scenario.cycle_duration", "must be > 0"));
        }
        if !(self.maneuver_intensity >= 0.0) {
            return Err(invalid("scenario.maneuver_intensity", "must be >= 0"));
        }
        if !(self.arena_radius > 0.0) {
            return Err(invalid("scenario.arena_radius", "must be > 0"));
        }
        match &self.schedule {
            SpawnSchedule::Scripted { targets } => {
                for (i, t) in targets.iter().enumerate() {
                    if t.spawn >= t.despawn {
                        return Err(invalid(
                            &format!("scenario.schedule.targets[{i}]"),
                            "spawn must precede despawn",
                        ));
                    }
                    if t.x0 == 0.0 && t.y0 == 0.0 {
                        return Err(invalid(
                            &format!("scenario.schedule.targets[{i}]"),
                            "initial position at radar origin",
                        ));
                    }
                }
            }
            SpawnSchedule::Random(r) => {
                if !(0.0 < r.range_min && r.range_min <= r.range_max) {
                    return Err(invalid(
                        "scenario.schedule.range_min",
                        "need 0 < range_min <= range_max",
                    ));
                }
                if !(0.0 <= r.speed_min && r.speed_min <= r.speed_max) {
                    return Err(invalid(
                        "scenario.schedule.speed_min",
                        "need 0 <= speed_min <= speed_max",
                    ));
                }
                if r.spawn_min > r.spawn_max {
                    return Err(invalid("scenario.schedule.spawn_min", "exceeds spawn_max"));
                }
                if r.lifetime_min == 0 || r.lifetime_min > r.lifetime_max {
                    return Err(invalid(
                        "scenario.schedule.lifetime_min",
                        "need 0 < lifetime_min <= lifetime_max",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Expands the schedule into concrete targets, all in their spawn state.
    pub fn build_targets(&self) -> Result<Vec<TargetTruth>> {
        self.validate()?;
        match &self.schedule {
            SpawnSchedule::Scripted { targets } => targets
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    TargetTruth::new(i as u32 + 1, t.spawn, t.despawn, Vector4::new(t.x0, t.y0, t.vx0, t.vy0))
                })
                .collect(),
            SpawnSchedule::Random(r) => {
                // Separate stream from the per-slot truth noise.
                let mut rng = seeded_rng(self.seed, 2);
                (0..r.count)
                    .map(|i| {
                        let range = rng.random_range(r.range_min..=r.range_max);
                        let bearing = rng.random_range(-PI..PI);
                        let speed = rng.random_range(r.speed_min..=r.speed_max);
                        let heading = rng.random_range(-PI..PI);
                        let spawn = rng.random_range(r.spawn_min..=r.spawn_max);
                        let life = rng.random_range(r.lifetime_min..=r.lifetime_max);
                        TargetTruth::new(
                            i as u32 + 1,
                            spawn,
                            spawn + life,
                            Vector4::new(
                                range * bearing.cos(),
                                range * bearing.sin(),
                                speed * heading.cos(),
                                speed * heading.sin(),
                            ),
                        )
                    })
                    .collect()
            }
        }
    }
}

/// A running scenario: truth for every scheduled target plus the truth noise stream.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub model: MotionModel,
    targets: Vec<TargetTruth>,
    rng: ChaCha8Rng,
    next_slot: usize,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        let targets = config.build_targets()?;
        let model = MotionModel::constant_velocity(config.cycle_duration, config.maneuver_intensity)?;
        let rng = seeded_rng(config.seed, TRUTH_STREAM);
        Ok(Self {
            config,
            model,
            targets,
            rng,
            next_slot: 0,
        })
    }

    /// Slot that the next call to [`Scenario::advance`] will produce.
    pub fn next_slot(&self) -> usize {
        self.next_slot
    }

    pub fn is_finished(&self) -> bool {
        self.next_slot >= self.config.episode_length
    }

    /// Advances the truth to the next slot and returns the targets active there.
    ///
    /// Targets active in the previous slot are propagated one step; targets whose spawn
    /// slot is reached appear in their initial state; targets past their despawn slot or
    /// outside the arena disappear.
    pub fn advance(&mut self) -> Vec<TargetTruth> {
        let slot = self.next_slot;
        let radius = self.config.arena_radius;
        for target in &mut self.targets {
            if slot > target.spawn_slot && target.is_active(slot) {
                *target = step_truth(target, &self.model, &mut self.rng);
                if target.range() > radius || !target.state.iter().all(|v| v.is_finite()) {
                    target.despawn_slot = slot;
                }
            }
        }
        self.next_slot += 1;
        self.active_at(slot)
    }

    pub fn active_at(&self, slot: usize) -> Vec<TargetTruth> {
        self.targets.iter().filter(|t| t.is_active(slot)).cloned().collect()
    }

    pub fn targets(&self) -> &[TargetTruth] {
        &self.targets
    }
}

/// Runs the scenario to completion and returns `(slot, target)` rows.
pub fn truth_trajectory(config: &ScenarioConfig) -> Result<Vec<(usize, TargetTruth)>> {
    let mut scenario = Scenario::new(config.clone())?;
    let mut rows = Vec::new();
    while !scenario.is_finished() {
        let slot = scenario.next_slot();
        rows.extend(scenario.advance().into_iter().map(|t| (slot, t)));
    }
    Ok(rows)
}

/// CSV with header `slot,id,x,y,vx,vy`.
pub fn truth_csv(rows: &[(usize, TargetTruth)]) -> String {
    let mut out = String::from("slot,id,x,y,vx,vy\n");
    for (slot, t) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            slot, t.id, t.state[0], t.state[1], t.state[2], t.state[3]
        ));
    }
    out
}
