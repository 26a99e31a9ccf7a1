//! EKF tracks, dwell-dependent measurement noise and M-of-N track initialisation.

use std::collections::VecDeque;

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sim::{measurement_function, measurement_jacobian, wrap_angle, Measurement, MotionModel};

/// Extracts `(x, y)` from `[x, y, vx, vy]`.
pub const PROJECTION: Matrix2x4<f64> = Matrix2x4::new(
    1.0, 0.0, 0.0, 0.0, //
    0.0, 1.0, 0.0, 0.0,
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackStatus {
    Initializing,
    Confirmed,
    Dropped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub target_id: u32,
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
    pub status: TrackStatus,
    /// Consecutive cycles without any detection of the underlying target.
    pub misses: u32,
}

impl Track {
    pub fn confirmed(target_id: u32, mean: Vector4<f64>, cov: Matrix4<f64>) -> Self {
        Self {
            target_id,
            mean,
            cov,
            status: TrackStatus::Confirmed,
            misses: 0,
        }
    }

    pub fn cost(&self) -> f64 {
        tracking_cost(self)
    }
}

/// Measurement covariance as a function of dwell: `R(τ) = (τ_ref / τ)·R0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellNoiseModel {
    pub range_var: f64,
    pub azimuth_var: f64,
    pub reference_dwell: f64,
}

impl Default for DwellNoiseModel {
    fn default() -> Self {
        Self {
            range_var: 16.0,
            azimuth_var: 1e-6,
            reference_dwell: 0.45,
        }
    }
}

impl DwellNoiseModel {
    pub fn new(range_var: f64, azimuth_var: f64, reference_dwell: f64) -> Result<Self> {
        if !(range_var > 0.0 && azimuth_var > 0.0) {
            return Err(invalid("noise.baseline", "variances must be > 0"));
        }
        if !(reference_dwell > 0.0) {
            return Err(invalid("noise.reference_dwell", "must be > 0"));
        }
        Ok(Self {
            range_var,
            azimuth_var,
            reference_dwell,
        })
    }

    pub fn baseline(&self) -> Matrix2<f64> {
        Matrix2::new(self.range_var, 0.0, 0.0, self.azimuth_var)
    }

    pub fn effective_cov(&self, dwell: f64) -> Result<Matrix2<f64>> {
        if !(dwell > 0.0) {
            return Err(Error::NonPositiveDwell(dwell));
        }
        Ok(self.baseline() * (self.reference_dwell / dwell))
    }
}

fn symmetrize(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

/// Time update: `mean' = F·mean`, `P' = F·P·Fᵀ + Q`.
pub fn ekf_predict(track: &Track, model: &MotionModel) -> Track {
    let f = &model.transition;
    Track {
        mean: f * track.mean,
        cov: symmetrize(&(f * track.cov * f.transpose() + model.process_noise)),
        ..track.clone()
    }
}

/// Joseph-form correction for a linearised observation.
fn correct(track: &Track, innovation: Vector2<f64>, h: &Matrix2x4<f64>, r: &Matrix2<f64>) -> Track {
    let p = &track.cov;
    let s = h * p * h.transpose() + r;
    let s_inv = match s.try_inverse() {
        Some(inv) => inv,
        None => return track.clone(),
    };
    let k = p * h.transpose() * s_inv;
    let i_kh = Matrix4::identity() - k * h;
    let cov = i_kh * p * i_kh.transpose() + k * r * k.transpose();
    Track {
        mean: track.mean + k * innovation,
        cov: symmetrize(&cov),
        ..track.clone()
    }
}

/// Measurement update with the polar observation model and dwell-scaled noise.
pub fn ekf_update(track: &Track, z: &Measurement, noise: &DwellNoiseModel, dwell: f64) -> Result<Track> {
    let r = noise.effective_cov(dwell)?;
    let predicted = measurement_function(&track.mean)?;
    let h = measurement_jacobian(&track.mean)?;
    let mut innovation = z.as_vector() - predicted;
    innovation[1] = wrap_angle(innovation[1]);
    Ok(correct(track, innovation, &h, &r))
}

/// Update with a direct Cartesian position observation `z = E·x + v`, `v ~ N(0, R)`.
pub fn linear_position_update(track: &Track, position: &Vector2<f64>, r: &Matrix2<f64>) -> Track {
    let innovation = position - PROJECTION * track.mean;
    correct(track, innovation, &PROJECTION, r)
}

/// `trace(E·P·Eᵀ)`: the position variance of the track.
pub fn tracking_cost(track: &Track) -> f64 {
    track.cov[(0, 0)] + track.cov[(1, 1)]
}

/// Prior for tracks seeded by the initialisation logic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackSeed {
    pub position_var: f64,
    pub velocity_var: f64,
}

impl Default for TrackSeed {
    fn default() -> Self {
        Self {
            position_var: 4.0 * 16.0,
            velocity_var: 25.0,
        }
    }
}

impl TrackSeed {
    pub fn covariance(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::new(
            self.position_var,
            self.position_var,
            self.velocity_var,
            self.velocity_var,
        ))
    }
}

pub const INIT_WINDOW: usize = 4;
pub const INIT_REQUIRED_HITS: usize = 3;

/// Outcome of one scan for a tentative track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanOutcome {
    Hit {
        position: Vector2<f64>,
        source_id: Option<u32>,
    },
    Miss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitDecision {
    Pending,
    Confirmed,
    Discarded,
}

/// Scan history of a tentative track over a fixed window of [`INIT_WINDOW`] scans.
#[derive(Debug, Clone, PartialEq)]
pub struct InitBuffer {
    pub history: VecDeque<ScanOutcome>,
    pub threshold: f64,
}

impl InitBuffer {
    pub fn new(threshold: f64) -> Self {
        Self {
            history: VecDeque::with_capacity(INIT_WINDOW),
            threshold,
        }
    }

    /// Buffer opened by a detection that matched no existing track.
    pub fn from_detection(threshold: f64, position: Vector2<f64>, source_id: Option<u32>) -> Self {
        let mut b = Self::new(threshold);
        b.history.push_back(ScanOutcome::Hit { position, source_id });
        b
    }

    pub fn hits(&self) -> usize {
        self.history
            .iter()
            .filter(|o| matches!(o, ScanOutcome::Hit { .. }))
            .count()
    }

    /// Most recent detection, used as the association anchor.
    pub fn last_hit(&self) -> Option<(Vector2<f64>, Option<u32>)> {
        self.history.iter().rev().find_map(|o| match o {
            ScanOutcome::Hit { position, source_id } => Some((*position, *source_id)),
            ScanOutcome::Miss => None,
        })
    }

    pub fn decision(&self) -> InitDecision {
        let hits = self.hits();
        let remaining = INIT_WINDOW - self.history.len();
        if hits >= INIT_REQUIRED_HITS {
            InitDecision::Confirmed
        } else if hits + remaining < INIT_REQUIRED_HITS {
            InitDecision::Discarded
        } else {
            InitDecision::Pending
        }
    }
}

/// Appends one scan outcome and reports whether the 3-of-4 rule is now decided.
///
/// A buffer whose window is already full keeps its decision.
pub fn update_init_logic(buffer: &mut InitBuffer, outcome: ScanOutcome) -> InitDecision {
    if buffer.history.len() < INIT_WINDOW && buffer.decision() == InitDecision::Pending {
        buffer.history.push_back(outcome);
    }
    buffer.decision()
}

/// Starts a confirmed track from a confirmed buffer: position from the last detection,
/// zero velocity.
pub fn seed_track(buffer: &InitBuffer, seed: &TrackSeed) -> Option<Track> {
    let (position, source_id) = buffer.last_hit()?;
    Some(Track::confirmed(
        source_id.unwrap_or(0),
        Vector4::new(position[0], position[1], 0.0, 0.0),
        seed.covariance(),
    ))
}

/// Global nearest-neighbour association of detections to tentative tracks.
///
/// Solves the optimal assignment in Cartesian space: total distance over assigned pairs
/// plus `threshold` for every detection left unassigned is minimised, and no pair
/// farther apart than `threshold` is ever assigned. Returns `(detection, buffer)` pairs
/// sorted by detection index.
pub fn gnn_associate(detections: &[Vector2<f64>], buffers: &[InitBuffer], threshold: f64) -> Vec<(usize, usize)> {
    let anchors: Vec<Option<Vector2<f64>>> = buffers.iter().map(|b| b.last_hit().map(|h| h.0)).collect();
    let nd = detections.len();
    let nb = buffers.len();
    if nd == 0 || nb == 0 {
        return Vec::new();
    }
    let n = nd + nb;
    let forbidden = f64::INFINITY;
    let mut cost = vec![vec![0.0; n]; n];
    for (i, det) in detections.iter().enumerate() {
        for (j, anchor) in anchors.iter().enumerate() {
            cost[i][j] = match anchor {
                Some(a) => {
                    let d = (det - a).norm();
                    if d <= threshold {
                        d
                    } else {
                        forbidden
                    }
                }
                None => forbidden,
            };
        }
        for j in nb..n {
            cost[i][j] = threshold;
        }
    }
    let assignment = hungarian(&cost);
    let mut pairs: Vec<(usize, usize)> = assignment
        .iter()
        .enumerate()
        .take(nd)
        .filter(|&(i, &j)| j < nb && cost[i][j].is_finite())
        .map(|(i, &j)| (i, j))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Minimum-cost perfect matching on a square matrix; returns the column for each row.
/// Infinite entries are treated as forbidden.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let big = cost
        .iter()
        .flatten()
        .filter(|c| c.is_finite())
        .fold(0.0f64, |m, &c| m.max(c.abs()))
        * (n as f64 + 1.0)
        + 1.0;
    let at = |i: usize, j: usize| {
        let c = cost[i][j];
        if c.is_finite() {
            c
        } else {
            big
        }
    };
    // 1-based potentials, e-maxx formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Objective minimised by [`gnn_associate`].
pub fn assignment_cost(
    detections: &[Vector2<f64>],
    buffers: &[InitBuffer],
    threshold: f64,
    pairs: &[(usize, usize)],
) -> f64 {
    let assigned: f64 = pairs
        .iter()
        .map(|&(i, j)| (detections[i] - buffers[j].last_hit().expect("anchored buffer").0).norm())
        .sum();
    assigned + threshold * (detections.len() - pairs.len()) as f64
}

/// One row of the track history export.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRecord {
    pub slot: usize,
    pub target_id: u32,
    pub cost: f64,
    pub trace_p: f64,
    pub dwell: f64,
}

/// CSV with header `slot,id,cost,trace_P,dwell`.
pub fn track_history_csv(rows: &[TrackRecord]) -> String {
    let mut out = String::from("slot,id,cost,trace_P,dwell\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.slot, r.target_id, r.cost, r.trace_p, r.dwell
        ));
    }
    out
}
