use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelFlags, OrderMode, PositionMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            _ => Err(Error::Config(format!("unknown optimizer `{s}` (expected sgd or adam)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Weight of the position-classification loss.
    pub lambda_p: f64,
    /// Weight of the cause-classification loss.
    pub lambda_c: f64,
    /// L2 coefficient on weight matrices.
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Global gradient-norm clip; 0 disables clipping.
    pub clip_norm: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub use_position: bool,
    pub position_mode: PositionMode,
    pub use_pae_loss: bool,
    pub use_dgl: bool,
    pub order_mode: OrderMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_p: 1.0,
            lambda_c: 1.0,
            lambda: 1e-5,
            learning_rate: 0.005,
            epochs: 10,
            clip_norm: 5.0,
            seed: 0,
            optimizer: OptimizerKind::Sgd,
            use_position: true,
            position_mode: PositionMode::Pae,
            use_pae_loss: true,
            use_dgl: true,
            order_mode: OrderMode::Reordered,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_p", self.lambda_p), ("lambda_c", self.lambda_c), ("lambda", self.lambda)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.clip_norm.is_nan() || self.clip_norm < 0.0 {
            return Err(Error::Config("clip_norm must be >= 0".into()));
        }
        Ok(())
    }

    pub fn model_flags(&self) -> ModelFlags {
        ModelFlags {
            position: self.use_position.then_some(self.position_mode),
            position_head: self.use_pae_loss,
            dgl: self.use_dgl,
            order: self.order_mode,
        }
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            lambda_p: self.lambda_p,
            lambda_c: self.lambda_c,
            lambda: self.lambda,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub lambda_p: f64,
    pub lambda_c: f64,
    pub lambda: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        TrainConfig::default().weights()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn negative_weights_rejected() {
        let cfg = TrainConfig { lambda_p: -1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig { learning_rate: f64::NAN, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn flags_follow_switches() {
        let cfg = TrainConfig { use_position: false, use_dgl: false, ..Default::default() };
        let f = cfg.model_flags();
        assert_eq!(f.position, None);
        assert!(!f.dgl);
        assert!(f.position_head);
    }
}
