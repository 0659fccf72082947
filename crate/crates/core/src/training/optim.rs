use crate::numerics::ParameterStore;

/// Applies one update from the gradients currently held in the store.
pub trait Optimizer {
    fn step(&mut self, store: &mut ParameterStore);
}

#[derive(Clone, Debug)]
pub struct Sgd {
    pub learning_rate: f64,
}

impl Optimizer for Sgd {
    fn step(&mut self, store: &mut ParameterStore) {
        let lr = self.learning_rate;
        if lr == 0.0 {
            return;
        }
        let (values, grads) = store.split_mut_values();
        for (value, grad) in values.iter_mut().zip(grads.iter()) {
            for (v, g) in value.as_mut_slice().iter_mut().zip(grad.as_slice()) {
                *v -= lr * g;
            }
        }
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }
}

impl Optimizer for Adam {
    fn step(&mut self, store: &mut ParameterStore) {
        if self.learning_rate == 0.0 {
            return;
        }
        if self.m.is_empty() {
            self.m = store.ids().map(|id| vec![0.0; store.value(id).len()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (values, grads) = store.split_mut_values();
        for (k, (value, grad)) in values.iter_mut().zip(grads.iter()).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for (j, (x, g)) in value.as_mut_slice().iter_mut().zip(grad.as_slice()).enumerate() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g * g;
                *x -= self.learning_rate * (m[j] / c1) / ((v[j] / c2).sqrt() + self.epsilon);
            }
        }
    }
}

/// Rescales gradients so their global norm is at most `max_norm`; returns the
/// norm before clipping. `max_norm == 0` disables clipping.
pub fn clip_grad_norm(store: &mut ParameterStore, max_norm: f64) -> f64 {
    let norm = store.grad_norm();
    if max_norm > 0.0 && norm > max_norm {
        store.scale_grads(max_norm / norm);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Matrix, ParamKind};

    fn store() -> ParameterStore {
        let mut s = ParameterStore::new();
        let w = s
            .insert("w", ParamKind::Weight, Matrix::from_vec(1, 2, vec![1.0, -2.0]).unwrap())
            .unwrap();
        s.grad_mut(w).as_mut_slice().copy_from_slice(&[3.0, 4.0]);
        s
    }

    #[test]
    fn sgd_moves_against_gradient() {
        let mut s = store();
        Sgd { learning_rate: 0.5 }.step(&mut s);
        assert_eq!(s.values()[0].as_slice(), &[-0.5, -4.0]);
    }

    #[test]
    fn clipping_caps_norm() {
        let mut s = store();
        let before = clip_grad_norm(&mut s, 1.0);
        assert_eq!(before, 5.0);
        assert!((s.grad_norm() - 1.0).abs() < 1e-12);
        let mut s = store();
        clip_grad_norm(&mut s, 10.0);
        assert_eq!(s.grad_norm(), 5.0);
    }

    #[test]
    fn adam_first_step_is_learning_rate_sized() {
        let mut s = store();
        Adam::new(0.1).step(&mut s);
        let v = s.values()[0].as_slice();
        assert!((v[0] - 0.9).abs() < 1e-6);
        assert!((v[1] + 2.1).abs() < 1e-6);
    }
}
