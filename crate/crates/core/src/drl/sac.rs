//! Soft actor-critic with a fixed temperature, twin critics and a tanh-squashed
//! Gaussian policy mapped affinely onto `[0, T0]`.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::agent::{critic_input, critic_sizes, regress, Agent, Batch, FeatureScale, LossReport};
use super::mlp::{Mlp, OutputHead};
use crate::sim::{seeded_rng, standard_normal_vec};

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SacConfig {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub adam: AdamConfig,
    pub gamma: f64,
    pub rho: f64,
    /// Entropy temperature α, fixed for the run.
    pub alpha: f64,
    pub log_std_min: f64,
    pub log_std_max: f64,
    pub seed: u64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            actor_hidden: vec![128, 128],
            critic_hidden: vec![100, 100],
            adam: AdamConfig::default(),
            gamma: 0.9,
            rho: 0.005,
            alpha: 0.025,
            log_std_min: -20.0,
            log_std_max: 2.0,
            seed: 0,
        }
    }
}

/// `ln(1 − tanh²u)`, evaluated as `2(ln 2 − u − softplus(−2u))` to stay finite.
pub fn log_one_minus_tanh_sq(u: f64) -> f64 {
    let x = -2.0 * u;
    let softplus = if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    };
    2.0 * (std::f64::consts::LN_2 - u - softplus)
}

/// Log-density of one dwell `a = T0·(tanh(u) + 1)/2` with `u ~ N(mean, exp(log_std)²)`,
/// given the pre-squash sample `u`.
pub fn squashed_log_prob(mean: f64, log_std: f64, u: f64, cycle_duration: f64) -> f64 {
    let eps = (u - mean) / log_std.exp();
    -0.5 * eps * eps - log_std - HALF_LN_TWO_PI - log_one_minus_tanh_sq(u) - (cycle_duration / 2.0).ln()
}

/// Per-sample pieces of the critic target: `r + γ·(min_q − α·log_prob)`.
#[derive(Debug, Clone)]
pub struct TargetTerms {
    pub rewards: DVector<f64>,
    pub min_q: DVector<f64>,
    pub log_prob: DVector<f64>,
}

/// One reparameterised policy sample per column.
struct PolicySample {
    /// Dwell fractions `(tanh u + 1)/2`.
    fractions: DMatrix<f64>,
    /// `tanh u`.
    squashed: DMatrix<f64>,
    std: DMatrix<f64>,
    eps: DMatrix<f64>,
    /// Whether each raw log-std lay inside the clamp range.
    unclamped: DMatrix<bool>,
    log_prob: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    pub config: SacConfig,
    pub scale: FeatureScale,
    pub actor: Mlp,
    pub critics: [Mlp; 2],
    pub critic_targets: [Mlp; 2],
    actor_opt: Adam,
    critic_opts: [Adam; 2],
    slots: usize,
    rng: ChaCha8Rng,
}

impl SacAgent {
    /// The actor emits `N` means followed by `N` log-stds.
    pub fn new(config: SacConfig, slots: usize, scale: FeatureScale) -> Self {
        let obs_dim = 2 * slots + 2;
        let mut rng = seeded_rng(config.seed, 0);
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend_from_slice(&config.actor_hidden);
        actor_sizes.push(2 * slots);
        let actor = Mlp::new(&actor_sizes, OutputHead::Linear, &mut rng);
        let sizes = critic_sizes(obs_dim, slots, &config.critic_hidden);
        let critics = [
            Mlp::new(&sizes, OutputHead::Linear, &mut rng),
            Mlp::new(&sizes, OutputHead::Linear, &mut rng),
        ];
        Self {
            actor_opt: Adam::new(&actor, config.adam),
            critic_opts: [Adam::new(&critics[0], config.adam), Adam::new(&critics[1], config.adam)],
            critic_targets: critics.clone(),
            critics,
            actor,
            scale,
            config,
            slots,
            rng,
        }
    }

    fn draw_eps(&mut self, batch: usize) -> DMatrix<f64> {
        let n = self.slots;
        DMatrix::from_column_slice(n, batch, &standard_normal_vec(&mut self.rng, n * batch))
    }

    fn sample(&mut self, head: &DMatrix<f64>) -> PolicySample {
        let eps = self.draw_eps(head.ncols());
        self.sample_with(head, eps)
    }

    fn sample_with(&self, head: &DMatrix<f64>, eps: DMatrix<f64>) -> PolicySample {
        let (n, b) = (self.slots, head.ncols());
        let t0 = self.scale.cycle_duration;
        let mut fractions = DMatrix::zeros(n, b);
        let mut squashed = DMatrix::zeros(n, b);
        let mut std = DMatrix::zeros(n, b);
        let mut unclamped = DMatrix::from_element(n, b, true);
        let mut log_prob = DVector::zeros(b);
        for j in 0..b {
            for i in 0..n {
                let mean = head[(i, j)];
                let raw = head[(n + i, j)];
                let log_std = raw.clamp(self.config.log_std_min, self.config.log_std_max);
                unclamped[(i, j)] = raw > self.config.log_std_min && raw < self.config.log_std_max;
                let s = log_std.exp();
                let u = mean + s * eps[(i, j)];
                let y = u.tanh();
                std[(i, j)] = s;
                squashed[(i, j)] = y;
                fractions[(i, j)] = (0.5 * (y + 1.0)).clamp(0.0, 1.0);
                log_prob[j] += squashed_log_prob(mean, log_std, u, t0);
            }
        }
        PolicySample {
            fractions,
            squashed,
            std,
            eps,
            unclamped,
            log_prob,
        }
    }

    fn min_q(nets: &[Mlp; 2], input: &DMatrix<f64>) -> DVector<f64> {
        let q1 = nets[0].forward_batch(input).expect("critic input");
        let q2 = nets[1].forward_batch(input).expect("critic input");
        DVector::from_iterator(q1.ncols(), q1.iter().zip(q2.iter()).map(|(a, b)| a.min(*b)))
    }

    /// Draws `a' ~ π(·|s')` and evaluates the target critics on it.
    pub fn target_terms(&mut self, batch: &Batch) -> TargetTerms {
        let head = self.actor.forward_batch(&batch.next_states).expect("actor input");
        let sample = self.sample(&head);
        let min_q = Self::min_q(
            &self.critic_targets,
            &critic_input(&batch.next_states, &sample.fractions),
        );
        TargetTerms {
            rewards: batch.rewards.clone(),
            min_q,
            log_prob: sample.log_prob,
        }
    }

    pub fn critic_targets_from(&self, terms: &TargetTerms) -> DVector<f64> {
        let soft = &terms.min_q - &terms.log_prob * self.config.alpha;
        &terms.rewards + soft * self.config.gamma
    }

    /// Actor loss `mean(α·log π(a|s) − min Q(s, a))` for the reparameterised actions
    /// built from the actor head and noise `eps`, and its gradient with respect to the head.
    pub fn actor_objective(
        &self,
        states: &DMatrix<f64>,
        head: &DMatrix<f64>,
        eps: &DMatrix<f64>,
    ) -> (f64, DMatrix<f64>) {
        let (n, b) = (self.slots, head.ncols());
        let alpha = self.config.alpha;
        let sample = self.sample_with(head, eps.clone());
        let input = critic_input(states, &sample.fractions);
        let caches = [
            self.critics[0].forward_cached(&input).expect("critic input"),
            self.critics[1].forward_cached(&input).expect("critic input"),
        ];
        let mut pick = [DMatrix::zeros(1, b), DMatrix::zeros(1, b)];
        let mut loss = 0.0;
        for j in 0..b {
            let (q1, q2) = (caches[0].output()[(0, j)], caches[1].output()[(0, j)]);
            pick[usize::from(q2 < q1)][(0, j)] = 1.0;
            loss += alpha * sample.log_prob[j] - q1.min(q2);
        }
        loss /= b as f64;
        let ds = states.nrows();
        let mut dq_dfrac = DMatrix::zeros(n, b);
        for k in 0..2 {
            let (_, dinput) = self.critics[k].backward(&caches[k], &pick[k]).expect("critic shape");
            dq_dfrac += dinput.rows(ds, n);
        }
        // d log π/dm = 2y and d log π/dℓ = −1 + 2y·σε; the fraction is (y + 1)/2.
        let mut dhead = DMatrix::zeros(2 * n, b);
        for j in 0..b {
            for i in 0..n {
                let y = sample.squashed[(i, j)];
                let (s, e) = (sample.std[(i, j)], sample.eps[(i, j)]);
                let dq_du = dq_dfrac[(i, j)] * 0.5 * (1.0 - y * y);
                dhead[(i, j)] = (alpha * 2.0 * y - dq_du) / b as f64;
                if sample.unclamped[(i, j)] {
                    dhead[(n + i, j)] = (alpha * (-1.0 + 2.0 * y * s * e) - dq_du * s * e) / b as f64;
                }
            }
        }
        (loss, dhead)
    }

    /// Deterministic action: the squashed mean.
    fn mean_action(&self, features: &[f64]) -> Vec<f64> {
        let head = self.actor.forward(features).expect("observation length 2N+2");
        head[..self.slots]
            .iter()
            .map(|m| (0.5 * (m.tanh() + 1.0)).clamp(0.0, 1.0))
            .collect()
    }
}

impl Agent for SacAgent {
    fn act_features(&mut self, features: &[f64], explore: bool) -> Vec<f64> {
        if !explore {
            return self.mean_action(features);
        }
        let head = self.actor.forward(features).expect("observation length 2N+2");
        let head = DMatrix::from_column_slice(head.len(), 1, &head);
        self.sample(&head).fractions.as_slice().to_vec()
    }

    fn update(&mut self, batch: &Batch) -> LossReport {
        let terms = self.target_terms(batch);
        let targets = self.critic_targets_from(&terms);
        let input = critic_input(&batch.states, &batch.actions);
        let mut critic_loss = 0.0;
        for k in 0..2 {
            critic_loss += regress(&mut self.critics[k], &mut self.critic_opts[k], &input, &targets);
        }
        critic_loss /= 2.0;

        let actor_cache = self.actor.forward_cached(&batch.states).expect("actor input");
        let eps = self.draw_eps(batch.len());
        let (actor_loss, dhead) = self.actor_objective(&batch.states, actor_cache.output(), &eps);
        let (grads, _) = self.actor.backward(&actor_cache, &dhead).expect("actor shape");
        self.actor_opt.step(&mut self.actor, &grads);

        for k in 0..2 {
            self.critic_targets[k].soft_update_from(&self.critics[k], self.config.rho);
        }
        LossReport {
            critic_loss,
            actor_loss,
        }
    }

    fn feature_scale(&self) -> FeatureScale {
        self.scale
    }
}
