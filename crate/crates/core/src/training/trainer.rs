use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{document_loss_and_grad, LossBreakdown};
use super::optim::{clip_grad_norm, Adam, Optimizer, Sgd};
use super::{OptimizerKind, TrainConfig};
use crate::corpus::{Document, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{encode_corpus, EncodedDocument, Model, ModelDims};

/// Mean per-document losses over one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean: LossBreakdown,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub log: Vec<EpochLog>,
}

/// Trains a freshly initialized model on raw documents.
pub fn train(docs: &[Document], vocab: &Vocabulary, dims: ModelDims, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let dims = ModelDims { vocab_size: vocab.len(), ..dims };
    let encoded = encode_corpus(docs, vocab, dims.clip);
    let model = Model::init(dims, cfg.model_flags(), cfg.seed)?;
    train_model(model, &encoded, cfg)
}

/// Continues training `model` in place of its current parameters.
pub fn train_model(mut model: Model, docs: &[EncodedDocument], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(Error::Argument("training corpus is empty".into()));
    }
    for doc in docs {
        model.arch.check_capacity(doc)?;
    }
    let weights = cfg.weights();
    let mut optimizer: Box<dyn Optimizer> = match cfg.optimizer {
        OptimizerKind::Sgd => Box::new(Sgd { learning_rate: cfg.learning_rate }),
        OptimizerKind::Adam => Box::new(Adam::new(cfg.learning_rate)),
    };
    // Shuffling stream is independent of the initialization stream.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = LossBreakdown::default();
        for &k in &order {
            let doc = &docs[k];
            model.store.zero_grads();
            let loss = document_loss_and_grad(doc, &mut model, &weights)?;
            let norm = model.store.grad_norm();
            if !loss.is_finite() || !norm.is_finite() {
                return Err(Error::Divergence {
                    doc_id: doc.doc_id.clone(),
                    epoch,
                    detail: format!(
                        "position={} cause={} l2={} total={} grad_norm={}",
                        loss.position, loss.cause, loss.l2, loss.total, norm
                    ),
                });
            }
            clip_grad_norm(&mut model.store, cfg.clip_norm);
            optimizer.step(&mut model.store);
            sum.position += loss.position;
            sum.cause += loss.cause;
            sum.l2 += loss.l2;
            sum.total += loss.total;
        }
        let n = docs.len() as f64;
        log.push(EpochLog {
            epoch,
            mean: LossBreakdown {
                position: sum.position / n,
                cause: sum.cause / n,
                l2: sum.l2 / n,
                total: sum.total / n,
            },
        });
    }
    model.store.zero_grads();
    Ok(TrainOutcome { model, log })
}
