//! Auxiliary relative-position classifier over clause vectors.
//!
//! The head only shapes the representation during training; it is never
//! used to make decisions at inference time.

use crate::corpus::{position_classes, RelativePosition};
use crate::error::{shape_err, Result};
use crate::numerics::{affine, cross_entropy, one_hot, softmax, Matrix};

/// `W_s` is `(2L+1) x d`, `b_s` has length `2L+1`.
#[derive(Clone, Copy, Debug)]
pub struct PositionHead<'a> {
    pub w: &'a Matrix,
    pub b: &'a [f64],
    pub clip: usize,
}

impl PositionHead<'_> {
    fn check(&self) -> Result<()> {
        let classes = position_classes(self.clip);
        if self.w.rows() != classes || self.b.len() != classes {
            return Err(shape_err(
                "PositionHead",
                format!("W_s {}x{}, b_s {}", self.w.rows(), self.w.cols(), self.b.len()),
                format!("{classes} position classes"),
            ));
        }
        Ok(())
    }
}

/// Distribution over position classes: `softmax(W_s r + b_s)`.
pub fn predict_position(r: &[f64], head: &PositionHead<'_>) -> Result<Vec<f64>> {
    head.check()?;
    softmax(&affine(r, head.w, head.b)?)
}

/// Summed cross-entropy against one-hot true position classes.
pub fn position_loss(
    predictions: &[Vec<f64>],
    truth: &[RelativePosition],
    clip: usize,
) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(shape_err("position_loss", predictions.len(), truth.len()));
    }
    let classes = position_classes(clip);
    predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| cross_entropy(p, &one_hot(classes, t.class_index(clip)?)))
        .sum()
}
