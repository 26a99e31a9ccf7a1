use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::Mlp;
use super::replay::EnvTransition;
use crate::env::{Allocation, EnvObservation};

/// Column-stacked minibatch. Actions are fractions of the cycle, in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: DMatrix<f64>,
    pub actions: DMatrix<f64>,
    pub rewards: DVector<f64>,
    pub next_states: DMatrix<f64>,
}

impl Batch {
    pub fn from_transitions(items: &[&EnvTransition]) -> Self {
        assert!(!items.is_empty(), "batch must be nonempty");
        let ds = items[0].state.len();
        let da = items[0].action.len();
        let b = items.len();
        let mut states = DMatrix::zeros(ds, b);
        let mut actions = DMatrix::zeros(da, b);
        let mut next_states = DMatrix::zeros(ds, b);
        let mut rewards = DVector::zeros(b);
        for (j, t) in items.iter().enumerate() {
            states.column_mut(j).copy_from_slice(&t.state);
            actions.column_mut(j).copy_from_slice(&t.action);
            next_states.column_mut(j).copy_from_slice(&t.next_state);
            rewards[j] = t.reward;
        }
        Self {
            states,
            actions,
            rewards,
            next_states,
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub critic_loss: f64,
    pub actor_loss: f64,
}

/// Input scaling shared by every agent; see [`EnvObservation::features`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub cycle_duration: f64,
    pub lambda0: f64,
}

impl FeatureScale {
    pub fn features(&self, obs: &EnvObservation) -> Vec<f64> {
        obs.features(self.cycle_duration, self.lambda0)
    }
}

pub trait Agent {
    /// Dwell fractions of `T0` for the given network features.
    fn act_features(&mut self, features: &[f64], explore: bool) -> Vec<f64>;
    fn update(&mut self, batch: &Batch) -> LossReport;
    fn feature_scale(&self) -> FeatureScale;
    /// Training progress in `[0, 1]`, used for schedules such as noise decay.
    fn set_progress(&mut self, _fraction: f64) {}

    fn act(&mut self, obs: &EnvObservation, explore: bool) -> Allocation {
        let scale = self.feature_scale();
        let fractions = self.act_features(&scale.features(obs), explore);
        Allocation::from_dwells(
            fractions
                .iter()
                .map(|f| (f * scale.cycle_duration).clamp(0.0, scale.cycle_duration))
                .collect(),
        )
    }
}

/// `[state; action]` stacked row-wise.
pub(crate) fn critic_input(states: &DMatrix<f64>, actions: &DMatrix<f64>) -> DMatrix<f64> {
    let (ds, da, b) = (states.nrows(), actions.nrows(), states.ncols());
    let mut x = DMatrix::zeros(ds + da, b);
    x.rows_mut(0, ds).copy_from(states);
    x.rows_mut(ds, da).copy_from(actions);
    x
}

/// One Adam step on the mean squared error `mean (Q(x) − y)²`; returns the loss.
pub(crate) fn regress(critic: &mut Mlp, opt: &mut Adam, input: &DMatrix<f64>, targets: &DVector<f64>) -> f64 {
    let cache = critic.forward_cached(input).expect("critic input shape");
    let q = cache.output().row(0).transpose();
    let err = &q - targets;
    let b = targets.len() as f64;
    let loss = err.norm_squared() / b;
    let upstream = DMatrix::from_row_slice(1, err.len(), (err * (2.0 / b)).as_slice());
    let (grads, _) = critic.backward(&cache, &upstream).expect("critic output shape");
    opt.step(critic, &grads);
    loss
}

pub(crate) fn critic_sizes(obs_dim: usize, action_dim: usize, hidden: &[usize]) -> Vec<usize> {
    let mut s = vec![obs_dim + action_dim];
    s.extend_from_slice(hidden);
    s.push(1);
    s
}
