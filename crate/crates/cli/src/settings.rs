//! Resolved command settings and the flag overlay on top of them.

use std::path::PathBuf;

use clap::Args;
use emocause::corpus::GeneratorConfig;
use emocause::eval::Variant;
use emocause::model::{ModelDims, OrderMode, PositionMode};
use emocause::training::{OptimizerKind, TrainConfig};
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "EMOCAUSE_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub word_dim: usize,
    pub position_dim: usize,
    pub hidden: usize,
    pub attention_dim: usize,
    pub clip: usize,
    pub max_clauses: usize,
    /// Minimum token count for the vocabulary.
    pub min_count: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        let d = ModelDims::default();
        Self {
            word_dim: d.word_dim,
            position_dim: d.position_dim,
            hidden: d.hidden,
            attention_dim: d.attention_dim,
            clip: d.clip,
            max_clauses: d.max_clauses,
            min_count: 1,
        }
    }
}

impl ModelSettings {
    pub fn dims(&self, vocab_size: usize) -> ModelDims {
        ModelDims {
            vocab_size,
            word_dim: self.word_dim,
            position_dim: self.position_dim,
            hidden: self.hidden,
            attention_dim: self.attention_dim,
            clip: self.clip,
            max_clauses: self.max_clauses,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSettings {
    pub out: Option<PathBuf>,
    pub generator: GeneratorConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model: ModelSettings,
    pub train: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub checkpoint: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub oracle_dgl: bool,
    /// Largest tolerated share of corpus tokens unknown to the checkpoint.
    pub max_oov_rate: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { checkpoint: None, corpus: None, out: None, oracle_dgl: false, max_oov_rate: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateSettings {
    pub corpus: Option<PathBuf>,
    /// Line-delimited results; the text table goes to the same path with `.txt`.
    pub out: Option<PathBuf>,
    pub variants: Vec<String>,
    pub repetitions: usize,
    pub train_fraction: f64,
    pub record_timing: bool,
    pub model: ModelSettings,
    /// `train.seed` is the base seed from which repetition seeds are derived.
    pub train: TrainConfig,
}

impl Default for AblateSettings {
    fn default() -> Self {
        Self {
            corpus: None,
            out: None,
            variants: [Variant::Bilstm, Variant::Pae, Variant::PaeDgl]
                .iter()
                .map(|v| v.name().to_string())
                .collect(),
            repetitions: 5,
            train_fraction: 0.9,
            record_timing: true,
            model: ModelSettings::default(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckSettings {
    pub seed: u64,
    pub tolerance: f64,
    pub step: f64,
    pub floor: f64,
    pub max_entries: usize,
    pub out: Option<PathBuf>,
}

impl Default for GradcheckSettings {
    fn default() -> Self {
        let c = emocause::numerics::GradCheckConfig::default();
        Self {
            seed: 0,
            tolerance: c.tolerance,
            step: c.step,
            floor: c.floor,
            max_entries: c.max_entries,
            out: None,
        }
    }
}

macro_rules! overlay {
    ($target:expr, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $field { $target.$field = v; })+
    };
}

#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub word_dim: Option<usize>,
    #[arg(long)]
    pub position_dim: Option<usize>,
    /// Per-direction LSTM width.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub attention_dim: Option<usize>,
    /// Relative positions are clipped to [-clip, clip].
    #[arg(long)]
    pub clip: Option<usize>,
    /// Maximum clauses per document (label-history length).
    #[arg(long)]
    pub max_clauses: Option<usize>,
    #[arg(long)]
    pub min_count: Option<usize>,
}

impl ModelArgs {
    pub fn apply(self, m: &mut ModelSettings) {
        let ModelArgs { word_dim, position_dim, hidden, attention_dim, clip, max_clauses, min_count } = self;
        overlay!(m, word_dim, position_dim, hidden, attention_dim, clip, max_clauses, min_count);
    }
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    #[arg(long)]
    pub lambda_p: Option<f64>,
    #[arg(long)]
    pub lambda_c: Option<f64>,
    /// L2 coefficient.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Global gradient-norm clip (0 disables).
    #[arg(long)]
    pub clip_norm: Option<f64>,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    /// sgd or adam.
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    #[arg(long)]
    pub use_position: Option<bool>,
    /// pae, pl or pec.
    #[arg(long)]
    pub position_mode: Option<PositionMode>,
    #[arg(long)]
    pub use_pae_loss: Option<bool>,
    #[arg(long)]
    pub use_dgl: Option<bool>,
    /// reordered or original.
    #[arg(long)]
    pub order_mode: Option<OrderMode>,
}

impl TrainArgs {
    pub fn apply(self, t: &mut TrainConfig) {
        let TrainArgs {
            lambda_p,
            lambda_c,
            lambda,
            learning_rate,
            epochs,
            clip_norm,
            seed,
            optimizer,
            use_position,
            position_mode,
            use_pae_loss,
            use_dgl,
            order_mode,
        } = self;
        overlay!(
            t,
            lambda_p,
            lambda_c,
            lambda,
            learning_rate,
            epochs,
            clip_norm,
            seed,
            optimizer,
            use_position,
            position_mode,
            use_pae_loss,
            use_dgl,
            order_mode,
        );
    }
}
