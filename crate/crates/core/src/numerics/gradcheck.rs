//! Central-difference gradient verification.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ParameterStore;
use crate::error::{Error, Result};

/// Central differences of a scalar function of a flat vector.
pub fn finite_difference<F>(f: F, point: &[f64], step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = point.to_vec();
    (0..point.len())
        .map(|i| {
            x[i] = point[i] + step;
            let plus = f(&x);
            x[i] = point[i] - step;
            let minus = f(&x);
            x[i] = point[i];
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    pub step: f64,
    pub tolerance: f64,
    /// Denominator floor of the relative error, so entries whose true
    /// gradient is ~0 are judged on absolute error.
    pub floor: f64,
    /// Tensors larger than this are checked on a seeded random sample.
    pub max_entries: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-4,
            floor: 1e-6,
            max_entries: 256,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub checked: usize,
    pub total: usize,
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.tensors.iter().all(|t| t.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &TensorCheck> {
        self.tensors.iter().filter(|t| !t.passed)
    }

    pub fn max_relative_error(&self) -> f64 {
        self.tensors
            .iter()
            .map(|t| t.max_relative_error)
            .fold(0.0, f64::max)
    }
}

/// Compares the gradients already stored in `params` against central
/// differences of `loss`.
pub fn grad_check<F>(loss: F, params: &ParameterStore, cfg: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: Fn(&ParameterStore) -> f64,
{
    let first = loss(params);
    let second = loss(params);
    if first.to_bits() != second.to_bits() {
        return Err(Error::Determinism { first, second });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut probe = params.clone();
    let mut tensors = Vec::with_capacity(params.len());
    for id in params.ids() {
        let total = params.value(id).len();
        let indices: Vec<usize> = if total > cfg.max_entries {
            let mut s = rand::seq::index::sample(&mut rng, total, cfg.max_entries).into_vec();
            s.sort_unstable();
            s
        } else {
            (0..total).collect()
        };
        let mut worst = (0.0_f64, 0_usize);
        for &k in &indices {
            let orig = params.value(id).as_slice()[k];
            probe.value_mut(id).as_mut_slice()[k] = orig + cfg.step;
            let plus = loss(&probe);
            probe.value_mut(id).as_mut_slice()[k] = orig - cfg.step;
            let minus = loss(&probe);
            probe.value_mut(id).as_mut_slice()[k] = orig;
            let numeric = (plus - minus) / (2.0 * cfg.step);
            let analytic = params.grad(id).as_slice()[k];
            let rel = relative_error(analytic, numeric, cfg.floor);
            if rel > worst.0 || rel.is_nan() {
                worst = (if rel.is_nan() { f64::INFINITY } else { rel }, k);
            }
        }
        tensors.push(TensorCheck {
            name: params.name(id).to_string(),
            checked: indices.len(),
            total,
            max_relative_error: worst.0,
            worst_index: worst.1,
            passed: worst.0 < cfg.tolerance,
        });
    }
    Ok(GradCheckReport {
        tolerance: cfg.tolerance,
        tensors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Matrix, ParamKind};
    use std::cell::Cell;

    fn quadratic_store() -> ParameterStore {
        let mut store = ParameterStore::new();
        let x = store
            .insert(
                "x",
                ParamKind::Weight,
                Matrix::column(&[0.3, -1.7, 2.5, 0.01]),
            )
            .unwrap();
        let g: Vec<f64> = store.value(x).as_slice().iter().map(|v| 2.0 * v).collect();
        store.grad_mut(x).as_mut_slice().copy_from_slice(&g);
        store
    }

    fn sq_norm(store: &ParameterStore) -> f64 {
        store.ids().map(|id| store.value(id).squared_norm()).sum()
    }

    #[test]
    fn quadratic_passes_tightly() {
        let store = quadratic_store();
        let cfg = GradCheckConfig {
            tolerance: 1e-7,
            ..Default::default()
        };
        let report = grad_check(sq_norm, &store, &cfg).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn corrupted_gradient_is_flagged() {
        let mut store = quadratic_store();
        let id = store.id("x").unwrap();
        store.grad_mut(id).as_mut_slice()[2] *= 1.1;
        let report = grad_check(sq_norm, &store, &GradCheckConfig::default()).unwrap();
        assert!(!report.passed());
        let bad: Vec<_> = report.failures().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].name, "x");
        assert_eq!(bad[0].worst_index, 2);
    }

    #[test]
    fn nondeterministic_closure_is_rejected() {
        let store = quadratic_store();
        let counter = Cell::new(0.0);
        let flaky = |s: &ParameterStore| {
            counter.set(counter.get() + 1.0);
            sq_norm(s) + counter.get()
        };
        assert!(matches!(
            grad_check(flaky, &store, &GradCheckConfig::default()),
            Err(Error::Determinism { .. })
        ));
    }

    #[test]
    fn large_tensors_are_sampled() {
        let mut store = ParameterStore::new();
        let vals: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let id = store
            .insert("big", ParamKind::Weight, Matrix::column(&vals))
            .unwrap();
        let g: Vec<f64> = vals.iter().map(|v| 2.0 * v).collect();
        store.grad_mut(id).as_mut_slice().copy_from_slice(&g);
        let cfg = GradCheckConfig {
            max_entries: 50,
            ..Default::default()
        };
        let report = grad_check(sq_norm, &store, &cfg).unwrap();
        assert_eq!(report.tensors[0].checked, 50);
        assert_eq!(report.tensors[0].total, 1000);
        assert!(report.passed());
    }
}
