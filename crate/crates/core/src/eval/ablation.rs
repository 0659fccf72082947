use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{cause_count_histogram, compute_metrics, CauseCountHistogram, Metrics};
use crate::corpus::{build_vocab, Document, Vocabulary};
use crate::dgl::{infer_document, InferenceMode};
use crate::error::{Error, Result};
use crate::model::{encode_corpus, EncodedDocument, Model, ModelDims, ModelFlags, OrderMode, PositionMode};
use crate::training::{train_model, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    Bilstm,
    Pl,
    Pec,
    Pae,
    PaeDgl,
    DglPo,
    DglUpperBound,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Bilstm,
        Variant::Pl,
        Variant::Pec,
        Variant::Pae,
        Variant::PaeDgl,
        Variant::DglPo,
        Variant::DglUpperBound,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            Variant::Bilstm => "bilstm",
            Variant::Pl => "pl",
            Variant::Pec => "pec",
            Variant::Pae => "pae",
            Variant::PaeDgl => "pae-dgl",
            Variant::DglPo => "dgl-po",
            Variant::DglUpperBound => "dgl-upper-bound",
        }
    }

    /// Table label.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Bilstm => "BiLSTM",
            Variant::Pl => "PL",
            Variant::Pec => "PEC",
            Variant::Pae => "PAE",
            Variant::PaeDgl => "PAE-DGL",
            Variant::DglPo => "DGL-P°",
            Variant::DglUpperBound => "DGL-UpperBound",
        }
    }

    /// `base` with the architecture switches of this variant applied.
    pub fn train_config(self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        let (position, pae_loss, dgl, order) = match self {
            Variant::Bilstm => (None, false, false, OrderMode::Reordered),
            Variant::Pl => (Some(PositionMode::Pl), false, false, OrderMode::Reordered),
            Variant::Pec => (Some(PositionMode::Pec), false, false, OrderMode::Reordered),
            Variant::Pae => (Some(PositionMode::Pae), true, false, OrderMode::Reordered),
            Variant::PaeDgl | Variant::DglUpperBound => (Some(PositionMode::Pae), true, true, OrderMode::Reordered),
            Variant::DglPo => (Some(PositionMode::Pae), true, true, OrderMode::Original),
        };
        cfg.use_position = position.is_some();
        if let Some(p) = position {
            cfg.position_mode = p;
        }
        cfg.use_pae_loss = pae_loss;
        cfg.use_dgl = dgl;
        cfg.order_mode = order;
        cfg
    }

    pub fn inference_mode(self) -> InferenceMode {
        match self {
            Variant::DglUpperBound => InferenceMode::Oracle,
            _ => InferenceMode::Predicted,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == key || v.label().to_ascii_lowercase() == key)
            .ok_or_else(|| {
                let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
                Error::Config(format!("unknown variant `{s}` (expected one of: {})", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub variant: Variant,
    pub repetitions: usize,
    pub train_fraction: f64,
}

impl AblationSpec {
    pub fn new(variant: Variant) -> Self {
        Self { variant, repetitions: 5, train_fraction: 0.9 }
    }
}

/// Settings shared by every cell of an ablation run.
#[derive(Clone, Debug, PartialEq)]
pub struct AblationConfig {
    /// Optimization settings; architecture switches are overridden per variant.
    pub train: TrainConfig,
    /// Model sizes; `vocab_size` is replaced by the split's vocabulary size.
    pub dims: ModelDims,
    pub min_count: usize,
    pub seed: u64,
    /// When false, wall-clock fields are written as 0 so outputs are byte-stable.
    pub record_timing: bool,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            dims: ModelDims::default(),
            min_count: 1,
            seed: 0,
            record_timing: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub repetition: usize,
    pub seed: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub zero_cause_share: f64,
    pub multi_cause_share: f64,
    pub wall_clock_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AblationResults {
    pub rows: Vec<AblationRow>,
}

/// Mean of each column over the repetitions of one variant.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantSummary {
    pub variant: String,
    pub repetitions: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub zero_cause_share: f64,
    pub multi_cause_share: f64,
}

impl AblationResults {
    pub fn rows_for(&self, variant: Variant) -> impl Iterator<Item = &AblationRow> {
        self.rows.iter().filter(move |r| r.variant == variant.label())
    }

    pub fn summary(&self) -> Vec<VariantSummary> {
        let mut order: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !order.contains(&r.variant.as_str()) {
                order.push(&r.variant);
            }
        }
        order
            .into_iter()
            .map(|name| {
                let rows: Vec<&AblationRow> = self.rows.iter().filter(|r| r.variant == name).collect();
                let mean = |f: fn(&AblationRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64;
                VariantSummary {
                    variant: name.to_string(),
                    repetitions: rows.len(),
                    precision: mean(|r| r.precision),
                    recall: mean(|r| r.recall),
                    f1: mean(|r| r.f1),
                    zero_cause_share: mean(|r| r.zero_cause_share),
                    multi_cause_share: mean(|r| r.multi_cause_share),
                }
            })
            .collect()
    }

    pub fn mean_f1(&self, variant: Variant) -> Option<f64> {
        let label = variant.label();
        self.summary().into_iter().find(|s| s.variant == label).map(|s| s.f1)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>4} {:>9} {:>9} {:>9} {:>9} {:>9}",
            "variant", "reps", "P", "R", "F", "zero", ">=2"
        );
        for s in self.summary() {
            let _ = writeln!(
                out,
                "{:<16} {:>4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
                s.variant, s.repetitions, s.precision, s.recall, s.f1, s.zero_cause_share, s.multi_cause_share
            );
        }
        out
    }
}

/// Seed of one repetition; the same for every variant so splits line up.
pub fn repetition_seed(seed: u64, repetition: usize) -> u64 {
    let mut z = seed.wrapping_add((repetition as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded shuffle then split; the first part holds `floor(fraction * n)` documents.
pub fn split_corpus(docs: &[Document], fraction: f64, seed: u64) -> Result<(Vec<Document>, Vec<Document>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("train fraction must be in (0, 1), got {fraction}")));
    }
    let n_train = (fraction * docs.len() as f64).floor() as usize;
    if n_train == 0 || n_train == docs.len() {
        return Err(Error::Config(format!(
            "corpus of {} documents is too small for a {fraction} split",
            docs.len()
        )));
    }
    let mut idx: Vec<usize> = (0..docs.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |ids: &[usize]| ids.iter().map(|&i| docs[i].clone()).collect::<Vec<_>>();
    Ok((pick(&idx[..n_train]), pick(&idx[n_train..])))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub histogram: CauseCountHistogram,
    pub predictions: Vec<Vec<bool>>,
}

pub fn evaluate(model: &Model, docs: &[EncodedDocument], mode: InferenceMode) -> Result<Evaluation> {
    let predictions = docs
        .iter()
        .map(|d| infer_document(d, model, mode))
        .collect::<Result<Vec<_>>>()?;
    let gold: Vec<Vec<bool>> = docs.iter().map(|d| d.gold.clone()).collect();
    Ok(Evaluation {
        metrics: compute_metrics(&predictions, &gold)?,
        histogram: cause_count_histogram(&predictions)?,
        predictions,
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    repetition: usize,
    fraction_bits: u64,
    flags: ModelFlags,
}

struct Trained {
    model: Model,
    vocab: Vocabulary,
    seconds: f64,
}

/// Trains and evaluates every (spec, repetition) cell. Variants whose training
/// setup coincides (PAE-DGL and its oracle-inference upper bound) share one model.
pub fn run_ablation(docs: &[Document], specs: &[AblationSpec], cfg: &AblationConfig) -> Result<AblationResults> {
    cfg.train.validate()?;
    let mut cache: HashMap<CacheKey, Trained> = HashMap::new();
    let mut rows = Vec::new();
    for spec in specs {
        let train_cfg = spec.variant.train_config(&cfg.train);
        for rep in 0..spec.repetitions {
            let seed = repetition_seed(cfg.seed, rep);
            let (train_docs, test_docs) = split_corpus(docs, spec.train_fraction, seed)?;
            let key = CacheKey {
                repetition: rep,
                fraction_bits: spec.train_fraction.to_bits(),
                flags: train_cfg.model_flags(),
            };
            let trained = match cache.entry(key) {
                Entry::Occupied(e) => e.into_mut(),
                Entry::Vacant(e) => {
                    let start = Instant::now();
                    let vocab = build_vocab(&train_docs, cfg.min_count)?;
                    let dims = ModelDims { vocab_size: vocab.len(), ..cfg.dims };
                    let encoded = encode_corpus(&train_docs, &vocab, dims.clip);
                    let rep_cfg = TrainConfig { seed, ..train_cfg.clone() };
                    let init = Model::init(dims, rep_cfg.model_flags(), seed)?;
                    let model = train_model(init, &encoded, &rep_cfg)?.model;
                    e.insert(Trained { model, vocab, seconds: start.elapsed().as_secs_f64() })
                }
            };
            let start = Instant::now();
            let test = encode_corpus(&test_docs, &trained.vocab, trained.model.dims().clip);
            let result = evaluate(&trained.model, &test, spec.variant.inference_mode())?;
            let seconds = trained.seconds + start.elapsed().as_secs_f64();
            rows.push(AblationRow {
                variant: spec.variant.label().to_string(),
                repetition: rep,
                seed,
                precision: result.metrics.precision,
                recall: result.metrics.recall,
                f1: result.metrics.f1,
                zero_cause_share: result.histogram.zero(),
                multi_cause_share: result.histogram.at_least_two(),
                wall_clock_seconds: if cfg.record_timing { seconds } else { 0.0 },
            });
        }
    }
    Ok(AblationResults { rows })
}
