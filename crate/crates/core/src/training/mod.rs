//! Objective, optimizers, the training loop and checkpoints.

mod checkpoint;
mod config;
mod loss;
mod optim;
mod trainer;
mod verify;

pub use checkpoint::{
    checkpoint_bytes, checkpoint_from_bytes, load_checkpoint, save_checkpoint, Checkpoint,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::{LossWeights, OptimizerKind, TrainConfig};
pub use loss::{document_loss, document_loss_and_grad, l2_penalty, teacher_forced_states, LossBreakdown};
pub use optim::{clip_grad_norm, Adam, Optimizer, Sgd};
pub use trainer::{train, train_model, EpochLog, TrainOutcome};
pub use verify::{model_grad_check, random_document, toy_dims};
