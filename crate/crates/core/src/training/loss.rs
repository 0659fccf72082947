//! Per-document objective: weighted position loss, weighted cause loss and
//! an L2 penalty on weight matrices.
//!
//! The cause classifier runs in visiting order with the label history built
//! from gold labels (teacher forcing).

use serde::{Deserialize, Serialize};

use super::LossWeights;
use crate::dgl::{cause_distribution, DglState, ReorderPlan};
use crate::encoder::encode_clause_backward;
use crate::error::Result;
use crate::model::{EncodedDocument, Model};
use crate::numerics::{
    affine_backward, cross_entropy, cross_entropy_backward, one_hot, softmax_backward, Matrix,
    ParamKind, ParameterStore,
};
use crate::pae::predict_position;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub position: f64,
    pub cause: f64,
    pub l2: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn combine(position: f64, cause: f64, l2: f64, w: &LossWeights) -> Self {
        Self {
            position,
            cause,
            l2,
            total: w.lambda_p * position + w.lambda_c * cause + w.lambda * l2,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.cause.is_finite() && self.l2.is_finite() && self.total.is_finite()
    }
}

/// Sum of squared entries over all weight tensors (biases and embeddings excluded).
pub fn l2_penalty(store: &ParameterStore) -> f64 {
    store
        .ids()
        .filter(|&id| store.kind(id) == ParamKind::Weight)
        .map(|id| store.value(id).squared_norm())
        .sum()
}

pub fn document_loss(doc: &EncodedDocument, model: &Model, weights: &LossWeights) -> Result<LossBreakdown> {
    let kinds: Vec<ParamKind> = model.store.ids().map(|id| model.store.kind(id)).collect();
    pass(model, model.store.values(), &kinds, None, doc, weights, None)
}

/// Loss plus gradients accumulated into `model.store`. Does not zero first.
pub fn document_loss_and_grad(
    doc: &EncodedDocument,
    model: &mut Model,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    let kinds: Vec<ParamKind> = model.store.ids().map(|id| model.store.kind(id)).collect();
    let arch = model.arch.clone();
    let (values, grads) = model.store.split_mut();
    pass_arch(&arch, values, &kinds, Some(grads), doc, weights, None)
}

/// Label-history contents seen before each visiting step under teacher forcing.
pub fn teacher_forced_states(doc: &EncodedDocument, model: &Model) -> Result<Vec<Vec<i8>>> {
    let kinds: Vec<ParamKind> = model.store.ids().map(|id| model.store.kind(id)).collect();
    let mut states = Vec::new();
    pass(
        model,
        model.store.values(),
        &kinds,
        None,
        doc,
        &LossWeights::default(),
        Some(&mut states),
    )?;
    Ok(states)
}

fn pass(
    model: &Model,
    values: &[Matrix],
    kinds: &[ParamKind],
    grads: Option<&mut [Matrix]>,
    doc: &EncodedDocument,
    w: &LossWeights,
    states: Option<&mut Vec<Vec<i8>>>,
) -> Result<LossBreakdown> {
    pass_arch(&model.arch, values, kinds, grads, doc, w, states)
}

fn pass_arch(
    arch: &crate::model::Architecture,
    values: &[Matrix],
    kinds: &[ParamKind],
    mut grads: Option<&mut [Matrix]>,
    doc: &EncodedDocument,
    w: &LossWeights,
    mut states: Option<&mut Vec<Vec<i8>>>,
) -> Result<LossBreakdown> {
    arch.check_capacity(doc)?;
    let traces = arch.encode_document(values, doc)?;
    let n = doc.len();
    let d = arch.dims.representation_dim();
    let mut dr = vec![vec![0.0; d]; n];

    let mut position_loss = 0.0;
    if let (Some(head), Some((hw, hb))) = (arch.position_head(values), arch.position_head_id()) {
        let classes = head.w.rows();
        for i in 0..n {
            let r = traces[i].representation.as_slice();
            let p = predict_position(r, &head)?;
            let truth = one_hot(classes, doc.positions[i].class_index(arch.dims.clip)?);
            position_loss += cross_entropy(&p, &truth)?;
            if let Some(g) = grads.as_deref_mut() {
                let dz: Vec<f64> = softmax_backward(&p, &cross_entropy_backward(&p, &truth))
                    .into_iter()
                    .map(|v| v * w.lambda_p)
                    .collect();
                let [gw, gb] = g
                    .get_disjoint_mut([hw.index(), hb.index()])
                    .expect("distinct head ids");
                affine_backward(r, head.w, &dz, gw, gb.as_mut_slice(), Some(&mut dr[i]));
            }
        }
    }

    let head = arch.cause_head(values);
    let (cw, cb) = arch.cause_head_id();
    let plan = ReorderPlan::for_mode(&doc.positions, arch.flags.order);
    let mut state = if arch.flags.dgl {
        Some(DglState::new(arch.dims.max_clauses)?)
    } else {
        None
    };
    let mut cause_loss = 0.0;
    for &i in plan.order() {
        if let (Some(rec), Some(s)) = (states.as_deref_mut(), state.as_ref()) {
            rec.push(s.slots().to_vec());
        }
        let features = arch.cause_features(
            values,
            traces[i].representation.as_slice(),
            doc.positions[i],
            state.as_ref(),
        )?;
        let p = cause_distribution(&features, &head)?;
        let truth = one_hot(2, usize::from(doc.gold[i]));
        cause_loss += cross_entropy(&p, &truth)?;
        if let Some(g) = grads.as_deref_mut() {
            let dz: Vec<f64> = softmax_backward(&p, &cross_entropy_backward(&p, &truth))
                .into_iter()
                .map(|v| v * w.lambda_c)
                .collect();
            let mut dfeat = vec![0.0; features.len()];
            {
                let [gw, gb] = g
                    .get_disjoint_mut([cw.index(), cb.index()])
                    .expect("distinct head ids");
                affine_backward(&features, head.w, &dz, gw, gb.as_mut_slice(), Some(&mut dfeat));
            }
            arch.scatter_feature_grads(g, &dfeat, doc.positions[i], &mut dr[i])?;
        }
        if let Some(s) = state.as_mut() {
            s.push(doc.gold[i])?;
        }
    }

    let mut l2 = 0.0;
    for (k, kind) in kinds.iter().enumerate() {
        if *kind != ParamKind::Weight {
            continue;
        }
        l2 += values[k].squared_norm();
        if let Some(g) = grads.as_deref_mut() {
            let scale = 2.0 * w.lambda;
            for (gv, v) in g[k].as_mut_slice().iter_mut().zip(values[k].as_slice()) {
                *gv += scale * v;
            }
        }
    }

    if let Some(g) = grads {
        let params = arch.encoder_params(values);
        for i in 0..n {
            let dx = {
                let mut eg = arch.encoder_grads(g);
                encode_clause_backward(&traces[i], &dr[i], &params, &mut eg)
            };
            arch.scatter_input_grads(g, &doc.tokens[i], doc.positions[i], &dx)?;
        }
    }

    Ok(LossBreakdown::combine(position_loss, cause_loss, l2, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RelativePosition;
    use crate::model::{ModelDims, ModelFlags};
    use crate::numerics::{grad_check, GradCheckConfig};

    pub(crate) fn toy_dims() -> ModelDims {
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

    pub(crate) fn toy_doc() -> EncodedDocument {
        EncodedDocument {
            doc_id: "toy".into(),
            tokens: vec![vec![1, 2], vec![3, 4, 5], vec![0, 2]],
            positions: [-1, 0, 1].iter().map(|&p| RelativePosition::new(p, 2)).collect(),
            gold: vec![true, false, false],
        }
    }

    #[test]
    fn combine_is_exact() {
        let w = LossWeights { lambda_p: 0.3, lambda_c: 1.7, lambda: 1e-3 };
        let b = LossBreakdown::combine(1.25, 2.5, 7.0, &w);
        assert_eq!(b.total, 0.3 * 1.25 + 1.7 * 2.5 + 1e-3 * 7.0);
    }

    #[test]
    fn l2_is_direct_sum_over_weights() {
        let m = Model::init_uniform(toy_dims(), ModelFlags::default(), 1, 0.5).unwrap();
        let expected: f64 = m
            .store
            .ids()
            .filter(|id| m.store.name(*id).ends_with(".wx")
                || m.store.name(*id).ends_with(".wh")
                || m.store.name(*id).ends_with(".w")
                || m.store.name(*id) == "attention.v")
            .map(|id| m.store.value(id).as_slice().iter().map(|v| v * v).sum::<f64>())
            .sum();
        assert!((l2_penalty(&m.store) - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_position_weight_leaves_head_untouched() {
        let mut m = Model::init_uniform(toy_dims(), ModelFlags::default(), 2, 0.5).unwrap();
        let w = LossWeights { lambda_p: 0.0, ..Default::default() };
        document_loss_and_grad(&toy_doc(), &mut m, &w).unwrap();
        let (hw, hb) = m.arch.position_head_id().unwrap();
        // only the L2 term touches the head weights
        let l2_only: Vec<f64> = m.store.value(hw).as_slice().iter().map(|v| 2.0 * w.lambda * v).collect();
        assert_eq!(m.store.grad(hw).as_slice(), &l2_only[..]);
        assert!(m.store.grad(hb).as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn full_model_gradients_pass_finite_differences() {
        let doc = toy_doc();
        let w = LossWeights { lambda_p: 0.7, lambda_c: 1.3, lambda: 0.01 };
        let mut m = Model::init_uniform(toy_dims(), ModelFlags::default(), 3, 0.5).unwrap();
        m.store.zero_grads();
        document_loss_and_grad(&doc, &mut m, &w).unwrap();
        let arch = m.arch.clone();
        let loss = |s: &ParameterStore| {
            let probe = Model { arch: arch.clone(), store: s.clone() };
            document_loss(&doc, &probe, &w).unwrap().total
        };
        let report = grad_check(loss, &m.store, &GradCheckConfig::default()).unwrap();
        assert!(report.passed(), "{report:#?}");
    }

    #[test]
    fn teacher_forcing_ignores_parameters() {
        let doc = toy_doc();
        let a = Model::init_uniform(toy_dims(), ModelFlags::default(), 4, 0.5).unwrap();
        let b = Model::init_uniform(toy_dims(), ModelFlags::default(), 5, 3.0).unwrap();
        let sa = teacher_forced_states(&doc, &a).unwrap();
        let sb = teacher_forced_states(&doc, &b).unwrap();
        assert_eq!(sa, sb);
        // visiting order 0, -1, +1 -> gold (false, true, false)
        assert_eq!(sa, vec![vec![0, 0, 0, 0], vec![-1, 0, 0, 0], vec![-1, 1, 0, 0]]);
    }
}
