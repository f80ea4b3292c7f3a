//! Versioned JSON checkpoints.
//!
//! A checkpoint is one JSON object:
//!
//! ```text
//! {
//!   "format": "rsma-sac-checkpoint",
//!   "version": 1,
//!   "config": { ...SacConfig fields... },
//!   "scaler": { "offset": [6 numbers], "scale": [6 numbers] },
//!   "actor": { "sizes": [...], "params": [...] },
//!   "critics": [ {..}, {..} ],
//!   "targets": [ {..}, {..} ],
//!   "log_alpha": number
//! }
//! ```
//!
//! Network parameters are flat, layer by layer: a row-major `fan_in × fan_out`
//! weight matrix followed by the bias. Floats round-trip exactly. Optimizer
//! moments and RNG state are not stored.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::agent::{SacAgent, SacConfig, TrainedPolicy};
use super::env::StateScaler;
use super::nn::Mlp;
use crate::error::{Result, RsmaError};

pub const FORMAT: &str = "rsma-sac-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: SacConfig,
    pub scaler: StateScaler,
    pub actor: Mlp,
    pub critics: [Mlp; 2],
    pub targets: [Mlp; 2],
    pub log_alpha: f64,
}

impl Checkpoint {
    pub fn of(agent: &SacAgent) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            config: agent.config().clone(),
            scaler: *agent.scaler(),
            actor: agent.actor.clone(),
            critics: agent.critics.clone(),
            targets: agent.targets.clone(),
            log_alpha: agent.log_alpha,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| RsmaError::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Self = serde_json::from_str(text).map_err(|e| RsmaError::Checkpoint(e.to_string()))?;
        if ck.format != FORMAT {
            return Err(RsmaError::Checkpoint(format!("unknown format {:?}", ck.format)));
        }
        if ck.version != VERSION {
            return Err(RsmaError::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        let all_finite = std::iter::once(&ck.actor)
            .chain(&ck.critics)
            .chain(&ck.targets)
            .all(|m| m.params().iter().all(|v| v.is_finite()));
        if !all_finite || !ck.log_alpha.is_finite() {
            return Err(RsmaError::Checkpoint("non-finite parameter".into()));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| RsmaError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| RsmaError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn into_agent(self) -> Result<SacAgent> {
        SacAgent::from_parts(self.config, self.scaler, self.actor, self.critics, self.targets, self.log_alpha)
    }

    pub fn policy(&self) -> TrainedPolicy {
        TrainedPolicy { actor: self.actor.clone(), scaler: self.scaler }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::{ChannelParams, Scenario, SicModel};
    use crate::sac::agent::train_agent;
    use crate::sac::env::{FixedScenario, ScenarioSampler};

    #[test]
    fn round_trip_is_exact() {
        let s =
            Scenario::new(ChannelParams::new(4.0, 1.0).unwrap(), SicModel::new(0.3).unwrap(), 10.0, 1.0, 0.2).unwrap();
        let cfg = SacConfig {
            hidden_sizes: vec![8],
            batch_size: 16,
            episodes: 2,
            steps_per_episode: 16,
            ..Default::default()
        };
        let (agent, _) = train_agent(&mut FixedScenario(s), cfg).unwrap();
        let ck = Checkpoint::of(&agent);
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        assert_eq!(back, ck);
        let restored = back.into_agent().unwrap();
        assert_eq!(restored.actor, agent.actor);
        assert_eq!(restored.targets, agent.targets);
    }

    #[test]
    fn rejects_foreign_versions() {
        let s =
            Scenario::new(ChannelParams::new(4.0, 1.0).unwrap(), SicModel::new(0.3).unwrap(), 10.0, 1.0, 0.2).unwrap();
        let cfg = SacConfig { hidden_sizes: vec![4], ..Default::default() };
        let agent = SacAgent::new(cfg, FixedScenario(s).scaler()).unwrap();
        let mut ck = Checkpoint::of(&agent);
        ck.version = 99;
        assert!(Checkpoint::from_json(&ck.to_json().unwrap()).is_err());
        assert!(Checkpoint::from_json("{}").is_err());
    }
}
