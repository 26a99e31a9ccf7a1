use rand::Rng;
use serde::{Deserialize, Serialize};

use super::agent::Agent;
use super::replay::{EnvTransition, ReplayBuffer};
use crate::env::{EnvConfig, RadarEnv, StepRecord};
use crate::error::{invalid, Result};
use crate::sim::seeded_rng;

const TRAINER_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSchedule {
    /// Environment steps; episodes restart whenever the previous one ends.
    pub steps: usize,
    /// Steps of uniformly random actions before the policy acts and updates begin.
    pub warmup: usize,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub updates_per_step: usize,
    /// Training rewards are divided by `β + reward_offset`.
    pub reward_offset: f64,
    pub seed: u64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            steps: 20_000,
            warmup: 1_000,
            batch_size: 128,
            replay_capacity: 100_000,
            updates_per_step: 1,
            reward_offset: 20_000.0,
            seed: 0,
        }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(invalid("train.batch_size", "must be >= 1"));
        }
        if self.replay_capacity < self.batch_size {
            return Err(invalid("train.replay_capacity", "must be >= batch_size"));
        }
        if !(self.reward_offset > 0.0) {
            return Err(invalid("train.reward_offset", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub step: usize,
    pub reward: f64,
    pub violation: f64,
    pub lambda: f64,
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingCurves {
    pub rows: Vec<CurveRow>,
}

impl TrainingCurves {
    /// Mean of `Σ τ/T0` over the last `fraction` of the recorded steps.
    pub fn final_budget_usage(&self, fraction: f64, budget: f64) -> f64 {
        let n = self.rows.len();
        let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n.max(1));
        if n == 0 {
            return 0.0;
        }
        self.rows[n - k..].iter().map(|r| r.violation + budget).sum::<f64>() / k as f64
    }

    pub fn min_lambda(&self) -> f64 {
        self.rows.iter().map(|r| r.lambda).fold(f64::INFINITY, f64::min)
    }

    /// `step,reward,violation,lambda,critic_loss,actor_loss`; losses are empty before the
    /// first update.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,reward,violation,lambda,critic_loss,actor_loss\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.step,
                r.reward,
                r.violation,
                r.lambda,
                opt(r.critic_loss),
                opt(r.actor_loss)
            ));
        }
        out
    }
}

/// Interleaves environment steps, replay writes and agent updates. λ is updated by the
/// environment after every step, alongside the network parameters.
pub fn train<A: Agent>(agent: &mut A, env_config: &EnvConfig, schedule: &TrainSchedule) -> Result<TrainingCurves> {
    train_with_hook(agent, env_config, schedule, |_, _| Ok(()))
}

/// [`train`] with `hook(agent, steps_done)` called after every environment step.
pub fn train_with_hook<A: Agent>(
    agent: &mut A,
    env_config: &EnvConfig,
    schedule: &TrainSchedule,
    mut hook: impl FnMut(&mut A, usize) -> Result<()>,
) -> Result<TrainingCurves> {
    schedule.validate()?;
    let mut env = RadarEnv::new(env_config.clone())?;
    let mut rng = seeded_rng(schedule.seed, TRAINER_STREAM);
    let mut replay = ReplayBuffer::new(schedule.replay_capacity);
    let scale = agent.feature_scale();
    let reward_scale = 1.0 / (env_config.beta + schedule.reward_offset);
    let slots = env_config.max_targets();
    let mut curves = TrainingCurves::default();
    let mut obs = env.reset();

    for step in 0..schedule.steps {
        if env.is_done() {
            obs = env.reset();
        }
        agent.set_progress(step as f64 / schedule.steps as f64);
        let state = scale.features(&obs);
        let fractions: Vec<f64> = if step < schedule.warmup {
            (0..slots).map(|_| rng.random::<f64>()).collect()
        } else {
            agent.act_features(&state, true)
        };
        let allocation =
            crate::env::Allocation::from_dwells(fractions.iter().map(|f| f * scale.cycle_duration).collect());
        let lambda = env.lambda();
        let outcome = env.step(&allocation)?;
        let next_state = scale.features(&outcome.observation);
        replay.push(EnvTransition {
            state,
            action: fractions,
            reward: outcome.reward.reward * reward_scale,
            next_state,
        });
        obs = outcome.observation;

        let mut losses = None;
        if step >= schedule.warmup && replay.len() >= schedule.batch_size {
            for _ in 0..schedule.updates_per_step {
                let batch = replay
                    .sample_batch(schedule.batch_size, &mut rng)
                    .expect("replay is nonempty");
                losses = Some(agent.update(&batch));
            }
        }
        curves.rows.push(CurveRow {
            step,
            reward: outcome.reward.reward,
            violation: outcome.reward.violation,
            lambda,
            critic_loss: losses.map(|l| l.critic_loss),
            actor_loss: losses.map(|l| l.actor_loss),
        });
        hook(agent, step + 1)?;
    }
    Ok(curves)
}

/// One episode under the deterministic policy.
pub fn evaluate<A: Agent>(agent: &mut A, env_config: &EnvConfig) -> Result<Vec<StepRecord>> {
    let mut env = RadarEnv::new(env_config.clone())?;
    let mut obs = env.reset();
    while !env.is_done() {
        let action = agent.act(&obs, false);
        obs = env.step(&action)?.observation;
    }
    Ok(env.history().to_vec())
}
