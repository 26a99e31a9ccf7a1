//! Deterministic policy gradient with target networks and Gaussian exploration.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::agent::{critic_input, critic_sizes, regress, Agent, Batch, FeatureScale, LossReport};
use super::mlp::{Mlp, OutputHead};
use crate::sim::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DdpgConfig {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub adam: AdamConfig,
    pub gamma: f64,
    pub rho: f64,
    /// Initial exploration standard deviation as a fraction of `T0`; decays linearly to
    /// zero over training.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            actor_hidden: vec![256, 128],
            critic_hidden: vec![100, 100],
            adam: AdamConfig::default(),
            gamma: 0.9,
            rho: 0.005,
            noise_std: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub config: DdpgConfig,
    pub scale: FeatureScale,
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
    noise_std: f64,
    rng: ChaCha8Rng,
}

impl DdpgAgent {
    /// The actor emits dwell fractions through a unit sigmoid head, i.e. `τ/T0 ∈ [0, 1]`.
    pub fn new(config: DdpgConfig, slots: usize, scale: FeatureScale) -> Self {
        let obs_dim = 2 * slots + 2;
        let mut rng = seeded_rng(config.seed, 0);
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend_from_slice(&config.actor_hidden);
        actor_sizes.push(slots);
        let actor = Mlp::new(&actor_sizes, OutputHead::Sigmoid { scale: 1.0 }, &mut rng);
        let critic = Mlp::new(
            &critic_sizes(obs_dim, slots, &config.critic_hidden),
            OutputHead::Linear,
            &mut rng,
        );
        Self {
            noise_std: config.noise_std,
            actor_opt: Adam::new(&actor, config.adam),
            critic_opt: Adam::new(&critic, config.adam),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            scale,
            config,
            rng,
        }
    }

    pub fn current_noise_std(&self) -> f64 {
        self.noise_std
    }

    /// Bootstrapped regression targets `r + γ·Q'(s', μ'(s'))`.
    pub fn critic_targets(&self, batch: &Batch) -> DVector<f64> {
        let next_actions = self
            .actor_target
            .forward_batch(&batch.next_states)
            .expect("actor input");
        let q_next = self
            .critic_target
            .forward_batch(&critic_input(&batch.next_states, &next_actions))
            .expect("critic input");
        &batch.rewards + q_next.row(0).transpose() * self.config.gamma
    }
}

impl Agent for DdpgAgent {
    fn act_features(&mut self, features: &[f64], explore: bool) -> Vec<f64> {
        let mut a = self.actor.forward(features).expect("observation length 2N+2");
        if explore && self.noise_std > 0.0 {
            let noise = Normal::new(0.0, self.noise_std).expect("finite std");
            for v in &mut a {
                *v = (*v + noise.sample(&mut self.rng)).clamp(0.0, 1.0);
            }
        }
        a
    }

    fn update(&mut self, batch: &Batch) -> LossReport {
        let targets = self.critic_targets(batch);
        let critic_loss = regress(
            &mut self.critic,
            &mut self.critic_opt,
            &critic_input(&batch.states, &batch.actions),
            &targets,
        );

        // Actor ascends Q(s, μ(s)).
        let b = batch.len() as f64;
        let actor_cache = self.actor.forward_cached(&batch.states).expect("actor input");
        let actions = actor_cache.output().clone();
        let critic_cache = self
            .critic
            .forward_cached(&critic_input(&batch.states, &actions))
            .expect("critic input");
        let actor_loss = -critic_cache.output().sum() / b;
        let upstream = DMatrix::from_element(1, batch.len(), -1.0 / b);
        let (_, dinput) = self.critic.backward(&critic_cache, &upstream).expect("critic shape");
        let dactions = dinput.rows(batch.states.nrows(), actions.nrows()).into_owned();
        let (grads, _) = self.actor.backward(&actor_cache, &dactions).expect("actor shape");
        self.actor_opt.step(&mut self.actor, &grads);

        self.actor_target.soft_update_from(&self.actor, self.config.rho);
        self.critic_target.soft_update_from(&self.critic, self.config.rho);
        LossReport {
            critic_loss,
            actor_loss,
        }
    }

    fn feature_scale(&self) -> FeatureScale {
        self.scale
    }

    fn set_progress(&mut self, fraction: f64) {
        self.noise_std = self.config.noise_std * (1.0 - fraction.clamp(0.0, 1.0));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drl::replay::EnvTransition;
    use rand::Rng;

    fn scale() -> FeatureScale {
        FeatureScale {
            cycle_duration: 2.5,
            lambda0: 5000.0,
        }
    }

    fn small(gamma: f64, rho: f64) -> DdpgAgent {
        DdpgAgent::new(
            DdpgConfig {
                actor_hidden: vec![16, 8],
                critic_hidden: vec![10, 10],
                gamma,
                rho,
                seed: 3,
                ..DdpgConfig::default()
            },
            2,
            scale(),
        )
    }

    fn random_batch(n: usize, seed: u64) -> Vec<EnvTransition> {
        let mut rng = seeded_rng(seed, 0);
        (0..n)
            .map(|_| EnvTransition {
                state: (0..6).map(|_| rng.random_range(0.0..1.0)).collect(),
                action: (0..2).map(|_| rng.random_range(0.0..1.0)).collect(),
                reward: rng.random_range(-1.0..1.0),
                next_state: (0..6).map(|_| rng.random_range(0.0..1.0)).collect(),
            })
            .collect()
    }

    #[test]
    fn no_bootstrap_at_zero_discount() {
        let agent = small(0.0, 0.005);
        let t = random_batch(1, 1).remove(0);
        let items = vec![&t; 8];
        let targets = agent.critic_targets(&Batch::from_transitions(&items));
        assert!(targets.iter().all(|&y| y == t.reward));
    }

    #[test]
    fn full_soft_update_copies_online_nets() {
        let mut agent = small(0.9, 1.0);
        let data = random_batch(16, 2);
        agent.update(&Batch::from_transitions(&data.iter().collect::<Vec<_>>()));
        assert_eq!(agent.actor_target, agent.actor);
        assert_eq!(agent.critic_target, agent.critic);
    }

    #[test]
    fn critic_loss_decreases_on_fixed_batch() {
        let mut agent = small(0.9, 0.005);
        let data = random_batch(64, 4);
        let batch = Batch::from_transitions(&data.iter().collect::<Vec<_>>());
        let first = agent.update(&batch).critic_loss;
        let mut last = first;
        for _ in 0..100 {
            last = agent.update(&batch).critic_loss;
        }
        assert!(last < first, "{first} -> {last}");
    }

    #[test]
    fn noiseless_action_is_actor_output() {
        let mut agent = small(0.9, 0.005);
        agent.set_progress(1.0);
        let x = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert_eq!(agent.act_features(&x, true), agent.actor.forward(&x).unwrap());
    }

    #[test]
    fn noise_decays_linearly() {
        let mut agent = small(0.9, 0.005);
        agent.set_progress(0.25);
        assert_close!(agent.current_noise_std(), 0.075, 1e-15);
    }

    #[test]
    fn explored_actions_stay_in_the_cycle() {
        let mut agent = small(0.9, 0.005);
        let mut rng = seeded_rng(9, 0);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..5.0)).collect();
            for f in agent.act_features(&x, true) {
                assert!((0.0..=1.0).contains(&f));
            }
        }
    }
}
