//! Open-loop allocation schedules encoded as NSGA-II genomes.

use serde::{Deserialize, Serialize};

use crate::env::{episode_objectives, run_episode, Allocation, EnvConfig};
use crate::error::{Error, Result};

/// `decision_points` blocks of `slots + 1` weights each: scan first, then one per slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenomeLayout {
    pub decision_points: usize,
    pub slots: usize,
}

impl Default for GenomeLayout {
    fn default() -> Self {
        Self {
            decision_points: 20,
            slots: 5,
        }
    }
}

impl GenomeLayout {
    pub fn len(&self) -> usize {
        self.decision_points * (self.slots + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Repairs one decision point in place: scale by `T0/sum` when the raw times exceed `T0`.
fn repair(times: &mut [f64], cycle_duration: f64) {
    let sum: f64 = times.iter().sum();
    if sum > cycle_duration * (1.0 + 1e-12) {
        let scale = cycle_duration / sum;
        times.iter_mut().for_each(|t| *t *= scale);
    }
}

/// Decodes a genome into one allocation per cycle of a `horizon`-cycle episode.
///
/// Weights become raw times `w·T0`; a decision point whose times sum above `T0` is
/// rescaled proportionally. Decision point `k` governs cycles
/// `[k·horizon/P, (k+1)·horizon/P)`.
pub fn decode_and_repair(
    genome: &[f64],
    layout: &GenomeLayout,
    cycle_duration: f64,
    horizon: usize,
) -> Result<Vec<Allocation>> {
    if genome.len() != layout.len() {
        return Err(Error::DimensionMismatch {
            expected: layout.len(),
            got: genome.len(),
        });
    }
    let width = layout.slots + 1;
    let points: Vec<Allocation> = genome
        .chunks(width)
        .map(|block| {
            let mut times: Vec<f64> = block.iter().map(|w| w.clamp(0.0, 1.0) * cycle_duration).collect();
            repair(&mut times, cycle_duration);
            Allocation::with_scan(times[1..].to_vec(), times[0])
        })
        .collect();
    Ok((0..horizon)
        .map(|cycle| {
            let k = (cycle * layout.decision_points / horizon.max(1)).min(layout.decision_points - 1);
            points[k].clone()
        })
        .collect())
}

/// Runs the schedule on one episode of `config` and returns `(obj_t, obj_s)`.
pub fn evaluate_schedule(config: &EnvConfig, schedule: &[Allocation]) -> Result<[f64; 2]> {
    let history = run_episode(config, |env, _| {
        let slot = env.history().len();
        schedule[slot.min(schedule.len() - 1)].clone()
    })?;
    let (t, s) = episode_objectives(&history)?;
    Ok([t, s])
}
