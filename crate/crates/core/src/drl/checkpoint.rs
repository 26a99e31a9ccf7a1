use serde::{Deserialize, Serialize};

use super::ddpg::DdpgAgent;
use super::mlp::Mlp;
use super::sac::SacAgent;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Every network of an agent plus the hash of the run configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub algorithm: String,
    pub config_hash: String,
    pub networks: Vec<(String, Mlp)>,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Self = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        Ok(ckpt)
    }

    fn take(&self, name: &str, like: &Mlp) -> Result<Mlp> {
        let net = self
            .networks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m.clone())
            .ok_or_else(|| Error::Checkpoint(format!("missing network `{name}`")))?;
        if net.sizes() != like.sizes() || net.head() != like.head() {
            return Err(Error::Checkpoint(format!(
                "network `{name}` has shape {:?}, expected {:?}",
                net.sizes(),
                like.sizes()
            )));
        }
        Ok(net)
    }

    fn expect_algorithm(&self, algorithm: &str) -> Result<()> {
        if self.algorithm != algorithm {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds a {} agent, not {algorithm}",
                self.algorithm
            )));
        }
        Ok(())
    }
}

fn named(pairs: &[(&str, &Mlp)]) -> Vec<(String, Mlp)> {
    pairs.iter().map(|(n, m)| (n.to_string(), (*m).clone())).collect()
}

impl DdpgAgent {
    pub fn checkpoint(&self, config_hash: &str) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            algorithm: "ddpg".into(),
            config_hash: config_hash.into(),
            networks: named(&[
                ("actor", &self.actor),
                ("critic", &self.critic),
                ("actor_target", &self.actor_target),
                ("critic_target", &self.critic_target),
            ]),
        }
    }

    pub fn restore(&mut self, ckpt: &Checkpoint) -> Result<()> {
        ckpt.expect_algorithm("ddpg")?;
        let actor = ckpt.take("actor", &self.actor)?;
        let critic = ckpt.take("critic", &self.critic)?;
        let actor_target = ckpt.take("actor_target", &self.actor_target)?;
        let critic_target = ckpt.take("critic_target", &self.critic_target)?;
        self.actor = actor;
        self.critic = critic;
        self.actor_target = actor_target;
        self.critic_target = critic_target;
        Ok(())
    }
}

impl SacAgent {
    pub fn checkpoint(&self, config_hash: &str) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            algorithm: "sac".into(),
            config_hash: config_hash.into(),
            networks: named(&[
                ("actor", &self.actor),
                ("critic_1", &self.critics[0]),
                ("critic_2", &self.critics[1]),
                ("critic_target_1", &self.critic_targets[0]),
                ("critic_target_2", &self.critic_targets[1]),
            ]),
        }
    }

    pub fn restore(&mut self, ckpt: &Checkpoint) -> Result<()> {
        ckpt.expect_algorithm("sac")?;
        let actor = ckpt.take("actor", &self.actor)?;
        let c1 = ckpt.take("critic_1", &self.critics[0])?;
        let c2 = ckpt.take("critic_2", &self.critics[1])?;
        let t1 = ckpt.take("critic_target_1", &self.critic_targets[0])?;
        let t2 = ckpt.take("critic_target_2", &self.critic_targets[1])?;
        self.actor = actor;
        self.critics = [c1, c2];
        self.critic_targets = [t1, t2];
        Ok(())
    }
}
