//! Finite-difference verification of the complete objective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{document_loss, document_loss_and_grad};
use super::LossWeights;
use crate::corpus::RelativePosition;
use crate::error::Result;
use crate::model::{EncodedDocument, Model, ModelDims, ModelFlags};
use crate::numerics::{grad_check, GradCheckConfig, GradCheckReport, ParameterStore};

/// Small dimensions for verification runs.
pub fn toy_dims() -> ModelDims {
    ModelDims {
        vocab_size: 6,
        word_dim: 3,
        position_dim: 2,
        hidden: 2,
        attention_dim: 3,
        clip: 2,
        max_clauses: 4,
    }
}

/// Random document with `clauses` clauses of 1 to 3 tokens and at least one cause.
pub fn random_document(rng: &mut impl Rng, clauses: usize, dims: &ModelDims) -> EncodedDocument {
    let emotion = rng.gen_range(0..clauses) as i32;
    let tokens = (0..clauses)
        .map(|_| (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..dims.vocab_size)).collect())
        .collect();
    let positions = (0..clauses as i32)
        .map(|i| RelativePosition::new(i - emotion, dims.clip))
        .collect();
    let mut gold: Vec<bool> = (0..clauses).map(|_| rng.gen_bool(0.4)).collect();
    if !gold.contains(&true) {
        gold[rng.gen_range(0..clauses)] = true;
    }
    EncodedDocument { doc_id: "random".into(), tokens, positions, gold }
}

/// Checks every tensor of a randomly initialized full model (all mechanisms
/// on) on a random 3-clause document.
pub fn model_grad_check(seed: u64, cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let dims = toy_dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let doc = random_document(&mut rng, 3, &dims);
    let weights = LossWeights { lambda_p: 0.7, lambda_c: 1.3, lambda: 0.01 };
    let mut model = Model::init_uniform(dims, ModelFlags::default(), rng.gen(), 0.5)?;
    model.store.zero_grads();
    document_loss_and_grad(&doc, &mut model, &weights)?;
    let arch = model.arch.clone();
    let loss = |s: &ParameterStore| {
        let probe = Model { arch: arch.clone(), store: s.clone() };
        document_loss(&doc, &probe, &weights).map(|l| l.total).unwrap_or(f64::NAN)
    };
    grad_check(loss, &model.store, &GradCheckConfig { seed, ..cfg.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passes_for_several_seeds() {
        for seed in 0..3 {
            let report = model_grad_check(seed, &GradCheckConfig::default()).unwrap();
            assert!(report.passed(), "seed {seed}: {report:#?}");
            assert_eq!(report.tensors.len(), 15);
        }
    }

    #[test]
    fn absurd_tolerance_reports_failures() {
        let cfg = GradCheckConfig { tolerance: 1e-12, ..Default::default() };
        let report = model_grad_check(1, &cfg).unwrap();
        assert!(!report.passed());
        assert_eq!(report, model_grad_check(1, &cfg).unwrap());
    }
}
