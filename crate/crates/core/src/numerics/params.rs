use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

/// Role of a tensor; decides whether it is subject to L2 regularization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Weight,
    Bias,
    Embedding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named parameter tensors with one gradient buffer of identical shape each.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterStore {
    names: Vec<String>,
    kinds: Vec<ParamKind>,
    values: Vec<Matrix>,
    grads: Vec<Matrix>,
    index: BTreeMap<String, ParamId>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, kind: ParamKind, value: Matrix) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::Argument(format!("duplicate parameter `{name}`")));
        }
        let id = ParamId(self.values.len());
        self.names.push(name.to_string());
        self.kinds.push(kind);
        self.grads.push(Matrix::zeros(value.rows(), value.cols()));
        self.values.push(value);
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn kind(&self, id: ParamId) -> ParamKind {
        self.kinds[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.values[id.0]
    }

    pub fn grad(&self, id: ParamId) -> &Matrix {
        &self.grads[id.0]
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.grads[id.0]
    }

    pub fn values(&self) -> &[Matrix] {
        &self.values
    }

    /// Values read-only and gradients writable at the same time.
    pub fn split_mut(&mut self) -> (&[Matrix], &mut [Matrix]) {
        (&self.values, &mut self.grads)
    }

    /// Values writable and gradients read-only, for optimizer updates.
    pub fn split_mut_values(&mut self) -> (&mut [Matrix], &[Matrix]) {
        (&mut self.values, &self.grads)
    }

    pub fn zero_grads(&mut self) {
        self.grads.iter_mut().for_each(|g| g.fill(0.0));
    }

    pub fn grad_norm(&self) -> f64 {
        self.grads.iter().map(Matrix::squared_norm).sum::<f64>().sqrt()
    }

    pub fn scale_grads(&mut self, factor: f64) {
        for g in &mut self.grads {
            g.as_mut_slice().iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grads_match_value_shapes() {
        let mut store = ParameterStore::new();
        let w = store
            .insert("w", ParamKind::Weight, Matrix::zeros(3, 4))
            .unwrap();
        assert_eq!(store.grad(w).shape(), (3, 4));
        assert!(store
            .insert("w", ParamKind::Bias, Matrix::zeros(1, 1))
            .is_err());
    }

    #[test]
    fn zero_grads_clears_everything() {
        let mut store = ParameterStore::new();
        let w = store
            .insert("w", ParamKind::Weight, Matrix::zeros(2, 2))
            .unwrap();
        store.grad_mut(w).fill(3.0);
        assert!((store.grad_norm() - 6.0).abs() < 1e-12);
        store.zero_grads();
        assert_eq!(store.grad_norm(), 0.0);
    }
}
