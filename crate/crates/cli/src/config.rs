//! Run configuration: one TOML file with a section per layer. Every field has a
//! default, so an empty file is the desk-scale reference setup.

use std::path::{Path, PathBuf};

use cogradar::drl::{DdpgConfig, SacConfig, TrainSchedule};
use cogradar::env::EnvConfig;
use cogradar::moo::{GenomeLayout, NsgaConfig};
use cogradar::scanning::{DetectionSpec, RadarParams};
use cogradar::sim::ScenarioConfig;
use cogradar::tracking::{DwellNoiseModel, TrackSeed};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every per-run seed is derived from it.
    pub seed: u64,
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
    pub out: PathBuf,
    pub scenario: ScenarioConfig,
    pub radar: RadarSection,
    pub env: EnvSection,
    pub agent: AgentSection,
    pub sweep: SweepSection,
    pub nsga: NsgaSection,
    pub simulate: SimulateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            workers: 0,
            out: PathBuf::from("runs/latest"),
            scenario: ScenarioConfig::default(),
            radar: RadarSection::default(),
            env: EnvSection::default(),
            agent: AgentSection::default(),
            sweep: SweepSection::default(),
            nsga: NsgaSection::default(),
            simulate: SimulateSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarSection {
    /// r0: the range reached when scanning gets exactly the time tracking leaves over.
    pub reference_range: f64,
    pub pd: f64,
    pub pf: f64,
}

impl Default for RadarSection {
    fn default() -> Self {
        Self {
            reference_range: 10_000.0,
            pd: 0.9,
            pf: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub beta: f64,
    pub lambda0: f64,
    pub dual_step: f64,
    /// Θ_max.
    pub budget: f64,
    /// Range variance (m²) at the reference dwell.
    pub range_var: f64,
    /// Azimuth variance (rad²) at the reference dwell.
    pub azimuth_var: f64,
    /// Association gate (m).
    pub gate: f64,
    pub cost_ceiling: f64,
    pub drop_after_misses: u32,
    pub track_seed: TrackSeed,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            beta: 0.0,
            lambda0: 5_000.0,
            dual_step: 15_000.0,
            budget: 0.9,
            range_var: 16.0,
            azimuth_var: 1e-6,
            gate: 500.0,
            cost_ceiling: 1e6,
            drop_after_misses: 4,
            track_seed: TrackSeed::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Sac,
    Ddpg,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sac => "sac",
            Algorithm::Ddpg => "ddpg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSection {
    pub algorithm: Algorithm,
    /// Architecture and learning constants. The `seed` fields here are replaced by
    /// seeds derived from the master seed when a run starts.
    pub sac: SacConfig,
    pub ddpg: DdpgConfig,
    pub train: TrainSchedule,
}

impl Default for AgentSection {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Sac,
            sac: SacConfig::default(),
            ddpg: DdpgConfig::default(),
            train: TrainSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Explicit β values; when absent, zero plus `count − 1` log-spaced values in
    /// `[beta_min, beta_max]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    pub beta_min: f64,
    pub beta_max: f64,
    pub count: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            betas: None,
            beta_min: 10.0,
            beta_max: 3e5,
            count: 12,
        }
    }
}

impl SweepSection {
    pub fn resolve(&self) -> CliResult<Vec<f64>> {
        if let Some(b) = &self.betas {
            if b.is_empty() {
                return Err(CliError::Config("sweep.betas: must not be empty".into()));
            }
            if let Some(bad) = b.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(CliError::Config(format!(
                    "sweep.betas: {bad} is not a finite value >= 0"
                )));
            }
            return Ok(b.clone());
        }
        if self.count == 0 {
            return Err(CliError::Config("sweep.count: must be >= 1".into()));
        }
        if !(self.beta_min > 0.0 && self.beta_max >= self.beta_min && self.beta_max.is_finite()) {
            return Err(CliError::Config(
                "sweep.beta_min/beta_max: need 0 < beta_min <= beta_max".into(),
            ));
        }
        let mut out = vec![0.0];
        let k = self.count - 1;
        let (lo, hi) = (self.beta_min.ln(), self.beta_max.ln());
        for i in 0..k {
            let t = if k == 1 { 1.0 } else { i as f64 / (k - 1) as f64 };
            out.push((lo + t * (hi - lo)).exp());
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NsgaSection {
    #[serde(flatten)]
    pub ga: NsgaConfig,
    /// Uniformly spaced allocation changes over the episode.
    pub decision_points: usize,
    /// Write the population every this many generations; 0 disables checkpoints.
    pub checkpoint_every: usize,
}

impl Default for NsgaSection {
    fn default() -> Self {
        Self {
            ga: NsgaConfig::default(),
            decision_points: GenomeLayout::default().decision_points,
            checkpoint_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Equal,
    Checkpoint,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub policy: PolicyKind,
    /// Agent checkpoint for `policy = "checkpoint"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    /// Dwell seconds per slot for `policy = "scripted"`; rows are spread uniformly over
    /// the episode and the remaining time goes to scanning.
    pub allocations: Vec<Vec<f64>>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Equal,
            checkpoint: None,
            allocations: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The resolved configuration as written into every run directory.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// Hex SHA-256 of [`Self::to_toml`] with `out` and `workers` cleared, since neither
    /// affects results.
    pub fn hash(&self) -> String {
        let canonical = Self {
            out: PathBuf::new(),
            workers: 0,
            ..self.clone()
        };
        hex(&Sha256::digest(canonical.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.env_config(self.env.beta)?;
        self.sweep.resolve()?;
        self.nsga.ga.validate()?;
        self.agent.train.validate()?;
        if self.nsga.decision_points == 0 {
            return Err(CliError::Config("nsga.decision_points: must be >= 1".into()));
        }
        let n = self.scenario.max_targets;
        if let Some(row) = self.simulate.allocations.iter().find(|r| r.len() != n) {
            return Err(CliError::Config(format!(
                "simulate.allocations: rows need {n} dwell entries, found {}",
                row.len()
            )));
        }
        match self.simulate.policy {
            PolicyKind::Checkpoint if self.simulate.checkpoint.is_none() => Err(CliError::Config(
                "simulate.checkpoint: required when policy = \"checkpoint\"".into(),
            )),
            PolicyKind::Scripted if self.simulate.allocations.is_empty() => Err(CliError::Config(
                "simulate.allocations: required when policy = \"scripted\"".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Environment for one run at the given β.
    pub fn env_config(&self, beta: f64) -> CliResult<EnvConfig> {
        let e = &self.env;
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(CliError::Config(format!("env.beta: {beta} is not a finite value >= 0")));
        }
        let mut cfg = EnvConfig::with_defaults(self.scenario.clone())?;
        let t0 = self.scenario.cycle_duration;
        let detection = DetectionSpec::new(self.radar.pd, self.radar.pf)?;
        if !(e.budget > 0.0 && e.budget < 1.0) {
            return Err(CliError::Config(
                "env.budget: must lie in (0, 1) so scanning has time".into(),
            ));
        }
        cfg.radar = RadarParams::calibrated(self.radar.reference_range, t0 * (1.0 - e.budget), &detection)?;
        cfg.detection = detection;
        cfg.noise = DwellNoiseModel::new(
            e.range_var,
            e.azimuth_var,
            t0 * e.budget / self.scenario.max_targets as f64,
        )?;
        cfg.track_seed = e.track_seed;
        cfg.beta = beta;
        cfg.lambda0 = e.lambda0;
        cfg.dual_step = e.dual_step;
        cfg.budget = e.budget;
        cfg.gate = e.gate;
        cfg.cost_ceiling = e.cost_ceiling;
        cfg.drop_after_misses = e.drop_after_misses;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn genome_layout(&self) -> GenomeLayout {
        GenomeLayout {
            decision_points: self.nsga.decision_points,
            slots: self.scenario.max_targets,
        }
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed for stream `label` of run `index`: the first eight bytes of
/// `SHA-256("master/label/index")`. Depends only on its arguments, never on scheduling.
pub fn derive_seed(master: u64, label: &str, index: usize) -> u64 {
    let digest = Sha256::digest(format!("{master}/{label}/{index}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.sweep.betas = Some(vec![0.0, 5.0]);
        cfg.env.beta = 12.5;
        cfg.agent.algorithm = Algorithm::Ddpg;
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn unknown_and_invalid_fields_name_their_path() {
        let err = RunConfig::from_toml("[env]\nbeat = 3\n").unwrap_err().to_string();
        assert!(err.contains("beat"), "{err}");
        let err = RunConfig::from_toml("[env]\nbudget = 1.5\n").unwrap_err().to_string();
        assert!(err.contains("env.budget"), "{err}");
        let err = RunConfig::from_toml("[nsga]\npopulation = 7\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("nsga.population"), "{err}");
    }

    #[test]
    fn default_sweep_is_zero_plus_log_spaced() {
        let b = SweepSection::default().resolve().unwrap();
        assert_eq!(b.len(), 12);
        assert_eq!(b[0], 0.0);
        assert!((b[1] - 10.0).abs() < 1e-9 && (b[11] - 3e5).abs() < 1e-6);
        let ratio = b[2] / b[1];
        for w in b[1..].windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-9);
        }
    }

    #[test]
    fn derived_seeds_differ_by_label_and_index() {
        let a = derive_seed(1, "agent", 0);
        assert_eq!(a, derive_seed(1, "agent", 0));
        assert_ne!(a, derive_seed(1, "agent", 1));
        assert_ne!(a, derive_seed(1, "train", 0));
        assert_ne!(a, derive_seed(2, "agent", 0));
    }

    #[test]
    fn env_config_matches_library_defaults() {
        let cfg = RunConfig::default();
        let lib = EnvConfig::with_defaults(cfg.scenario.clone()).unwrap();
        assert_eq!(cfg.env_config(0.0).unwrap(), lib);
    }
}
