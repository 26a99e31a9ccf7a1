use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::agent::Batch;

/// One environment transition in network coordinates: features, action scaled to
/// `[0, 1]`, training reward and next features.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvTransition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Fixed-capacity ring buffer with uniform sampling.
///
/// Transitions live in flat row-major arrays so a long run makes a handful of large
/// allocations instead of several small ones per step.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    len: usize,
    next: usize,
    state_dim: usize,
    action_dim: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_states: Vec<f64>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            len: 0,
            next: 0,
            state_dim: 0,
            action_dim: 0,
            states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_states: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Panics if the dimensions differ from the first pushed transition.
    pub fn push(&mut self, t: EnvTransition) {
        if self.len == 0 {
            self.state_dim = t.state.len();
            self.action_dim = t.action.len();
        }
        assert!(
            t.state.len() == self.state_dim
                && t.next_state.len() == self.state_dim
                && t.action.len() == self.action_dim,
            "transition dimensions changed"
        );
        if self.len < self.capacity {
            self.states.extend_from_slice(&t.state);
            self.actions.extend_from_slice(&t.action);
            self.rewards.push(t.reward);
            self.next_states.extend_from_slice(&t.next_state);
            self.len += 1;
        } else {
            let (ds, da, i) = (self.state_dim, self.action_dim, self.next);
            self.states[i * ds..(i + 1) * ds].copy_from_slice(&t.state);
            self.actions[i * da..(i + 1) * da].copy_from_slice(&t.action);
            self.rewards[i] = t.reward;
            self.next_states[i * ds..(i + 1) * ds].copy_from_slice(&t.next_state);
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        if self.is_empty() {
            return Vec::new();
        }
        (0..batch).map(|_| rng.random_range(0..self.len)).collect()
    }

    /// A uniformly drawn batch, one column per transition; `None` when empty.
    pub fn sample_batch<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Option<Batch> {
        let idx = self.sample_indices(batch, rng);
        if idx.is_empty() {
            return None;
        }
        let (ds, da) = (self.state_dim, self.action_dim);
        let mut out = Batch {
            states: DMatrix::zeros(ds, idx.len()),
            actions: DMatrix::zeros(da, idx.len()),
            rewards: DVector::zeros(idx.len()),
            next_states: DMatrix::zeros(ds, idx.len()),
        };
        for (j, &i) in idx.iter().enumerate() {
            out.states
                .column_mut(j)
                .copy_from_slice(&self.states[i * ds..(i + 1) * ds]);
            out.actions
                .column_mut(j)
                .copy_from_slice(&self.actions[i * da..(i + 1) * da]);
            out.rewards[j] = self.rewards[i];
            out.next_states
                .column_mut(j)
                .copy_from_slice(&self.next_states[i * ds..(i + 1) * ds]);
        }
        Some(out)
    }

    pub fn get(&self, index: usize) -> Option<EnvTransition> {
        if index >= self.len {
            return None;
        }
        let (ds, da) = (self.state_dim, self.action_dim);
        Some(EnvTransition {
            state: self.states[index * ds..(index + 1) * ds].to_vec(),
            action: self.actions[index * da..(index + 1) * da].to_vec(),
            reward: self.rewards[index],
            next_state: self.next_states[index * ds..(index + 1) * ds].to_vec(),
        })
    }
}
