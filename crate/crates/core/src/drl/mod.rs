//! Hand-written function approximation and the two constrained actor-critic learners.
//!
//! Networks see the scaled features of [`crate::env::EnvObservation::features`] and emit
//! dwell fractions of the cycle; critics take `[features; τ/T0]`.

mod adam;
mod agent;
mod checkpoint;
mod ddpg;
mod mlp;
mod replay;
mod sac;
mod train;

pub use adam::{Adam, AdamConfig};
pub use agent::{Agent, Batch, FeatureScale, LossReport};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use ddpg::{DdpgAgent, DdpgConfig};
pub use mlp::{ForwardCache, Gradients, Layer, Mlp, OutputHead};
pub use replay::{EnvTransition, ReplayBuffer};
pub use sac::{log_one_minus_tanh_sq, squashed_log_prob, SacAgent, SacConfig, TargetTerms};
pub use train::{evaluate, train, train_with_hook, CurveRow, TrainSchedule, TrainingCurves};
