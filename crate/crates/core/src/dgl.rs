//! Reordered sequential prediction with a dynamic global label vector.
//!
//! Clauses are visited nearest-first (0, -1, +1, -2, +2, ...). Each decision
//! is written into the next slot of a length-`q` vector (+1 cause, -1 not a
//! cause) that is appended to the features of every later clause.

use crate::corpus::RelativePosition;
use crate::error::{shape_err, Error, Result};
use crate::model::{EncodedDocument, Model, OrderMode};
use crate::numerics::{affine, cross_entropy, one_hot, softmax, Matrix};

/// Visiting order over the clauses of one document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReorderPlan {
    positions: Vec<RelativePosition>,
    order: Vec<usize>,
}

impl ReorderPlan {
    pub fn identity(positions: &[RelativePosition]) -> Self {
        Self {
            positions: positions.to_vec(),
            order: (0..positions.len()).collect(),
        }
    }

    pub fn for_mode(positions: &[RelativePosition], mode: OrderMode) -> Self {
        match mode {
            OrderMode::Reordered => reorder(positions),
            OrderMode::Original => Self::identity(positions),
        }
    }

    /// Clause indices in visiting order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn original_positions(&self) -> &[RelativePosition] {
        &self.positions
    }

    pub fn visited_positions(&self) -> Vec<RelativePosition> {
        self.order.iter().map(|&i| self.positions[i]).collect()
    }

    /// `inverse()[clause] = step at which the clause is visited`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.order.len()];
        for (step, &i) in self.order.iter().enumerate() {
            inv[i] = step;
        }
        inv
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Stable sort by `(|p|, p > 0)`; clipped duplicates keep document order.
pub fn reorder(positions: &[RelativePosition]) -> ReorderPlan {
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by_key(|&i| {
        let p = positions[i].value();
        (p.unsigned_abs(), p > 0)
    });
    ReorderPlan {
        positions: positions.to_vec(),
        order,
    }
}

/// Label history: slots before `step` hold +-1, the rest 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DglState {
    slots: Vec<i8>,
    step: usize,
}

impl DglState {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Argument("label history needs capacity >= 1".into()));
        }
        Ok(Self {
            slots: vec![0; capacity],
            step: 0,
        })
    }

    pub fn push(&mut self, is_cause: bool) -> Result<()> {
        if self.step == self.slots.len() {
            return Err(Error::Capacity(format!(
                "label history is full ({} slots)",
                self.slots.len()
            )));
        }
        self.slots[self.step] = if is_cause { 1 } else { -1 };
        self.step += 1;
        Ok(())
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[i8] {
        &self.slots
    }

    pub fn as_features(&self) -> impl Iterator<Item = f64> + '_ {
        self.slots.iter().map(|&s| f64::from(s))
    }
}

pub fn dgl_init(capacity: usize) -> Result<DglState> {
    DglState::new(capacity)
}

pub fn dgl_update(state: &DglState, is_cause: bool) -> Result<DglState> {
    let mut next = state.clone();
    next.push(is_cause)?;
    Ok(next)
}

/// `W_c` is `2 x (d + q)`; row 1 scores "cause".
#[derive(Clone, Copy, Debug)]
pub struct CauseHead<'a> {
    pub w: &'a Matrix,
    pub b: &'a [f64],
}

/// `softmax(W_c [r ; DGL] + b_c)`; index 1 is the cause probability.
pub fn predict_cause(r: &[f64], state: &DglState, head: &CauseHead<'_>) -> Result<[f64; 2]> {
    if head.w.rows() != 2 || head.b.len() != 2 {
        return Err(shape_err("predict_cause", format!("W_c {}x{}", head.w.rows(), head.w.cols()), "2 classes"));
    }
    if head.w.cols() != r.len() + state.capacity() {
        return Err(shape_err(
            "predict_cause",
            format!("W_c cols {}", head.w.cols()),
            format!("d {} + q {}", r.len(), state.capacity()),
        ));
    }
    let features: Vec<f64> = r.iter().copied().chain(state.as_features()).collect();
    cause_distribution(&features, head)
}

pub(crate) fn cause_distribution(features: &[f64], head: &CauseHead<'_>) -> Result<[f64; 2]> {
    let p = softmax(&affine(features, head.w, head.b)?)?;
    Ok([p[0], p[1]])
}

/// Argmax decision; a tie goes to "not a cause".
pub fn is_cause(p: &[f64; 2]) -> bool {
    p[1] > p[0]
}

pub fn cause_loss(predictions: &[[f64; 2]], gold: &[bool]) -> Result<f64> {
    if predictions.len() != gold.len() {
        return Err(shape_err("cause_loss", predictions.len(), gold.len()));
    }
    predictions
        .iter()
        .zip(gold)
        .map(|(p, &g)| cross_entropy(p, &one_hot(2, usize::from(g))))
        .sum()
}

/// Where the label history gets its entries from at inference time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InferenceMode {
    /// The model's own decisions.
    Predicted,
    /// Gold labels of the document (upper-bound diagnostic).
    Oracle,
}

/// Per-clause decisions and cause probabilities, in document order.
#[derive(Clone, Debug, PartialEq)]
pub struct DocumentPrediction {
    pub labels: Vec<bool>,
    pub cause_probability: Vec<f64>,
}

pub fn infer_document(doc: &EncodedDocument, model: &Model, mode: InferenceMode) -> Result<Vec<bool>> {
    predict_document(doc, model, mode).map(|p| p.labels)
}

pub fn predict_document(
    doc: &EncodedDocument,
    model: &Model,
    mode: InferenceMode,
) -> Result<DocumentPrediction> {
    let arch = &model.arch;
    arch.check_capacity(doc)?;
    let values = model.store.values();
    let traces = arch.encode_document(values, doc)?;
    let head = arch.cause_head(values);
    let plan = ReorderPlan::for_mode(&doc.positions, arch.flags.order);
    let mut state = if arch.flags.dgl {
        Some(DglState::new(arch.dims.max_clauses)?)
    } else {
        None
    };
    let n = doc.len();
    let mut labels = vec![false; n];
    let mut probs = vec![0.0; n];
    for &i in plan.order() {
        let features = arch.cause_features(
            values,
            traces[i].representation.as_slice(),
            doc.positions[i],
            state.as_ref(),
        )?;
        let p = cause_distribution(&features, &head)?;
        labels[i] = is_cause(&p);
        probs[i] = p[1];
        if let Some(s) = state.as_mut() {
            let written = match mode {
                InferenceMode::Predicted => labels[i],
                InferenceMode::Oracle => doc.gold[i],
            };
            s.push(written)?;
        }
    }
    Ok(DocumentPrediction {
        labels,
        cause_probability: probs,
    })
}
