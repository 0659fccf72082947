//! Parameter layout and clause-level forward/backward plumbing shared by
//! training and inference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    position_classes, relative_positions, Document, RelativePosition, Vocabulary, DEFAULT_CLIP,
    DEFAULT_MAX_CLAUSES,
};
use crate::dgl::{CauseHead, DglState};
use crate::encoder::{
    encode_clause_traced, EmbeddingTables, EncoderGrads, EncoderParams, EncoderTrace,
};
use crate::error::{Error, Result};
use crate::numerics::{LstmGrads, LstmWeights, Matrix, ParamId, ParamKind, ParameterStore};
use crate::pae::PositionHead;

/// How relative position enters the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionMode {
    /// Position embedding concatenated to every word embedding.
    Pae,
    /// Position rendered as one extra trailing pseudo-token.
    Pl,
    /// Position embedding concatenated to the clause vector.
    Pec,
}

/// Visiting order of the sequential cause classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderMode {
    /// Ascending |position|, negative before positive.
    Reordered,
    /// Document order.
    Original,
}

impl std::str::FromStr for PositionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pae" => Ok(Self::Pae),
            "pl" => Ok(Self::Pl),
            "pec" => Ok(Self::Pec),
            _ => Err(Error::Config(format!("unknown position mode `{s}` (expected pae, pl or pec)"))),
        }
    }
}

impl std::str::FromStr for OrderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reordered" => Ok(Self::Reordered),
            "original" => Ok(Self::Original),
            _ => Err(Error::Config(format!("unknown order mode `{s}` (expected reordered or original)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab_size: usize,
    pub word_dim: usize,
    pub position_dim: usize,
    /// Per-direction LSTM width; clause vectors have twice this size.
    pub hidden: usize,
    pub attention_dim: usize,
    pub clip: usize,
    /// Maximum clauses per document and length of the label-history vector.
    pub max_clauses: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            vocab_size: 1,
            word_dim: 200,
            position_dim: 50,
            hidden: 100,
            attention_dim: 200,
            clip: DEFAULT_CLIP,
            max_clauses: DEFAULT_MAX_CLAUSES,
        }
    }
}

impl ModelDims {
    pub fn representation_dim(&self) -> usize {
        2 * self.hidden
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("vocab_size", self.vocab_size),
            ("word_dim", self.word_dim),
            ("position_dim", self.position_dim),
            ("hidden", self.hidden),
            ("attention_dim", self.attention_dim),
            ("max_clauses", self.max_clauses),
        ];
        for (name, v) in named {
            if v == 0 {
                return Err(Error::Argument(format!("model dimension `{name}` must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelFlags {
    pub position: Option<PositionMode>,
    pub position_head: bool,
    pub dgl: bool,
    pub order: OrderMode,
}

impl Default for ModelFlags {
    fn default() -> Self {
        Self {
            position: Some(PositionMode::Pae),
            position_head: true,
            dgl: true,
            order: OrderMode::Reordered,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct LstmIds {
    wx: ParamId,
    wh: ParamId,
    b: ParamId,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct ParamIds {
    word: ParamId,
    position: Option<ParamId>,
    fwd: LstmIds,
    bwd: LstmIds,
    att_w: ParamId,
    att_b: ParamId,
    att_v: ParamId,
    pos_w: Option<ParamId>,
    pos_b: Option<ParamId>,
    cause_w: ParamId,
    cause_b: ParamId,
}

/// Shapes, switches and parameter handles; the values live in a [`ParameterStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub dims: ModelDims,
    pub flags: ModelFlags,
    ids: ParamIds,
}

fn value(values: &[Matrix], id: ParamId) -> &Matrix {
    &values[id.index()]
}

impl Architecture {
    /// Registers every tensor (zero-valued) in a fresh store.
    pub fn build(dims: ModelDims, flags: ModelFlags) -> Result<(Self, ParameterStore)> {
        dims.validate()?;
        let mut store = ParameterStore::new();
        let classes = position_classes(dims.clip);
        let d = dims.representation_dim();
        let h = dims.hidden;
        let m = dims.word_dim;
        let n = dims.position_dim;

        let word = store.insert("embedding.word", ParamKind::Embedding, Matrix::zeros(dims.vocab_size, m))?;
        let position = match flags.position {
            None => None,
            Some(PositionMode::Pl) => Some(store.insert(
                "embedding.position",
                ParamKind::Embedding,
                Matrix::zeros(classes, m),
            )?),
            Some(PositionMode::Pae | PositionMode::Pec) => Some(store.insert(
                "embedding.position",
                ParamKind::Embedding,
                Matrix::zeros(classes, n),
            )?),
        };
        let input = if flags.position == Some(PositionMode::Pae) { m + n } else { m };
        let mut lstm = |dir: &str| -> Result<LstmIds> {
            Ok(LstmIds {
                wx: store.insert(&format!("encoder.{dir}.wx"), ParamKind::Weight, Matrix::zeros(4 * h, input))?,
                wh: store.insert(&format!("encoder.{dir}.wh"), ParamKind::Weight, Matrix::zeros(4 * h, h))?,
                b: store.insert(&format!("encoder.{dir}.b"), ParamKind::Bias, Matrix::zeros(4 * h, 1))?,
            })
        };
        let fwd = lstm("forward")?;
        let bwd = lstm("backward")?;
        let a = dims.attention_dim;
        let att_w = store.insert("attention.w", ParamKind::Weight, Matrix::zeros(a, d))?;
        let att_b = store.insert("attention.b", ParamKind::Bias, Matrix::zeros(a, 1))?;
        let att_v = store.insert("attention.v", ParamKind::Weight, Matrix::zeros(a, 1))?;
        let (pos_w, pos_b) = if flags.position_head {
            (
                Some(store.insert("position_head.w", ParamKind::Weight, Matrix::zeros(classes, d))?),
                Some(store.insert("position_head.b", ParamKind::Bias, Matrix::zeros(classes, 1))?),
            )
        } else {
            (None, None)
        };
        let feature = d
            + if flags.position == Some(PositionMode::Pec) { n } else { 0 }
            + if flags.dgl { dims.max_clauses } else { 0 };
        let cause_w = store.insert("cause_head.w", ParamKind::Weight, Matrix::zeros(2, feature))?;
        let cause_b = store.insert("cause_head.b", ParamKind::Bias, Matrix::zeros(2, 1))?;
        let ids = ParamIds {
            word,
            position,
            fwd,
            bwd,
            att_w,
            att_b,
            att_v,
            pos_w,
            pos_b,
            cause_w,
            cause_b,
        };
        Ok((Self { dims, flags, ids }, store))
    }

    pub fn input_dim(&self) -> usize {
        match self.flags.position {
            Some(PositionMode::Pae) => self.dims.word_dim + self.dims.position_dim,
            _ => self.dims.word_dim,
        }
    }

    /// Width of the cause-head input.
    pub fn feature_dim(&self) -> usize {
        self.dims.representation_dim()
            + if self.flags.position == Some(PositionMode::Pec) { self.dims.position_dim } else { 0 }
            + if self.flags.dgl { self.dims.max_clauses } else { 0 }
    }

    pub fn cause_head_id(&self) -> (ParamId, ParamId) {
        (self.ids.cause_w, self.ids.cause_b)
    }

    pub fn position_head_id(&self) -> Option<(ParamId, ParamId)> {
        self.ids.pos_w.zip(self.ids.pos_b)
    }

    pub fn position_table_id(&self) -> Option<ParamId> {
        self.ids.position
    }

    pub fn encoder_params<'a>(&self, values: &'a [Matrix]) -> EncoderParams<'a> {
        let cell = |ids: LstmIds| LstmWeights {
            wx: value(values, ids.wx),
            wh: value(values, ids.wh),
            b: value(values, ids.b).as_slice(),
        };
        EncoderParams {
            forward: cell(self.ids.fwd),
            backward: cell(self.ids.bwd),
            att_w: value(values, self.ids.att_w),
            att_b: value(values, self.ids.att_b).as_slice(),
            att_v: value(values, self.ids.att_v).as_slice(),
        }
    }

    pub fn position_head<'a>(&self, values: &'a [Matrix]) -> Option<PositionHead<'a>> {
        Some(PositionHead {
            w: value(values, self.ids.pos_w?),
            b: value(values, self.ids.pos_b?).as_slice(),
            clip: self.dims.clip,
        })
    }

    pub fn cause_head<'a>(&self, values: &'a [Matrix]) -> CauseHead<'a> {
        CauseHead {
            w: value(values, self.ids.cause_w),
            b: value(values, self.ids.cause_b).as_slice(),
        }
    }

    /// Per-token LSTM inputs of one clause under the configured position mode.
    pub fn clause_inputs(
        &self,
        values: &[Matrix],
        tokens: &[usize],
        position: RelativePosition,
    ) -> Result<Vec<Vec<f64>>> {
        let word = value(values, self.ids.word);
        let word_row = |t: usize| -> Result<&[f64]> {
            if t >= word.rows() {
                return Err(Error::Index {
                    what: "token id",
                    index: t as i64,
                    size: word.rows(),
                });
            }
            Ok(word.row(t))
        };
        match (self.flags.position, self.ids.position) {
            (Some(PositionMode::Pae), Some(pid)) => {
                let tables = EmbeddingTables {
                    word,
                    position: value(values, pid),
                    clip: self.dims.clip,
                };
                Ok(crate::encoder::augment_embedding(tokens, position, &tables)?.0)
            }
            (Some(PositionMode::Pl), Some(pid)) => {
                let mut xs: Vec<Vec<f64>> = tokens
                    .iter()
                    .map(|&t| word_row(t).map(<[f64]>::to_vec))
                    .collect::<Result<_>>()?;
                let table = value(values, pid);
                xs.push(table.row(position.class_index(self.dims.clip)?).to_vec());
                Ok(xs)
            }
            _ => tokens
                .iter()
                .map(|&t| word_row(t).map(<[f64]>::to_vec))
                .collect(),
        }
    }

    /// Routes input gradients back into the embedding tables.
    pub fn scatter_input_grads(
        &self,
        grads: &mut [Matrix],
        tokens: &[usize],
        position: RelativePosition,
        dx: &[Vec<f64>],
    ) -> Result<()> {
        let m = self.dims.word_dim;
        let class = position.class_index(self.dims.clip)?;
        for (&t, g) in tokens.iter().zip(dx) {
            let row = grads[self.ids.word.index()].row_mut(t);
            row.iter_mut().zip(&g[..m]).for_each(|(a, b)| *a += b);
        }
        match (self.flags.position, self.ids.position) {
            (Some(PositionMode::Pae), Some(pid)) => {
                let row = grads[pid.index()].row_mut(class);
                for g in dx {
                    row.iter_mut().zip(&g[m..]).for_each(|(a, b)| *a += b);
                }
            }
            (Some(PositionMode::Pl), Some(pid)) => {
                let last = &dx[tokens.len()];
                let row = grads[pid.index()].row_mut(class);
                row.iter_mut().zip(last).for_each(|(a, b)| *a += b);
            }
            _ => {}
        }
        Ok(())
    }

    /// Cause-head input: `[r ; position embedding (PEC only) ; label history]`.
    pub fn cause_features(
        &self,
        values: &[Matrix],
        r: &[f64],
        position: RelativePosition,
        dgl: Option<&DglState>,
    ) -> Result<Vec<f64>> {
        let mut f = Vec::with_capacity(self.feature_dim());
        f.extend_from_slice(r);
        if let (Some(PositionMode::Pec), Some(pid)) = (self.flags.position, self.ids.position) {
            f.extend_from_slice(value(values, pid).row(position.class_index(self.dims.clip)?));
        }
        if self.flags.dgl {
            let state = dgl.ok_or_else(|| Error::Argument("label-history state required".into()))?;
            f.extend(state.as_features());
        }
        Ok(f)
    }

    /// Routes the gradient of the cause-head input back to `dr` and, for PEC,
    /// the position table.
    pub fn scatter_feature_grads(
        &self,
        grads: &mut [Matrix],
        dfeature: &[f64],
        position: RelativePosition,
        dr: &mut [f64],
    ) -> Result<()> {
        let d = self.dims.representation_dim();
        dr.iter_mut().zip(&dfeature[..d]).for_each(|(a, b)| *a += b);
        if let (Some(PositionMode::Pec), Some(pid)) = (self.flags.position, self.ids.position) {
            let n = self.dims.position_dim;
            let row = grads[pid.index()].row_mut(position.class_index(self.dims.clip)?);
            row.iter_mut().zip(&dfeature[d..d + n]).for_each(|(a, b)| *a += b);
        }
        Ok(())
    }

    pub fn encoder_grads<'a>(&self, grads: &'a mut [Matrix]) -> EncoderGrads<'a> {
        let ids = [
            self.ids.fwd.wx,
            self.ids.fwd.wh,
            self.ids.fwd.b,
            self.ids.bwd.wx,
            self.ids.bwd.wh,
            self.ids.bwd.b,
            self.ids.att_w,
            self.ids.att_b,
            self.ids.att_v,
        ]
        .map(ParamId::index);
        let [fwx, fwh, fb, bwx, bwh, bb, aw, ab, av] = grads
            .get_disjoint_mut(ids)
            .expect("encoder parameter ids are distinct");
        EncoderGrads {
            forward: LstmGrads { wx: fwx, wh: fwh, b: fb.as_mut_slice() },
            backward: LstmGrads { wx: bwx, wh: bwh, b: bb.as_mut_slice() },
            att_w: aw,
            att_b: ab.as_mut_slice(),
            att_v: av.as_mut_slice(),
        }
    }

    /// Encodes every clause of a document.
    pub fn encode_document(&self, values: &[Matrix], doc: &EncodedDocument) -> Result<Vec<EncoderTrace>> {
        let params = self.encoder_params(values);
        doc.tokens
            .iter()
            .zip(&doc.positions)
            .map(|(toks, &pos)| {
                let xs = self.clause_inputs(values, toks, pos)?;
                encode_clause_traced(&xs, &params)
            })
            .collect()
    }

    pub fn check_capacity(&self, doc: &EncodedDocument) -> Result<()> {
        if doc.len() > self.dims.max_clauses {
            return Err(Error::Capacity(format!(
                "document `{}` has {} clauses, model supports {}",
                doc.doc_id,
                doc.len(),
                self.dims.max_clauses
            )));
        }
        Ok(())
    }
}

/// A model: architecture plus parameter values.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub arch: Architecture,
    pub store: ParameterStore,
}

/// Half-width of the uniform initializer.
pub const INIT_SCALE: f64 = 0.01;

impl Model {
    /// Every entry i.i.d. uniform on `[-0.01, 0.01]`.
    pub fn init(dims: ModelDims, flags: ModelFlags, seed: u64) -> Result<Self> {
        Self::init_uniform(dims, flags, seed, INIT_SCALE)
    }

    pub fn init_uniform(dims: ModelDims, flags: ModelFlags, seed: u64, scale: f64) -> Result<Self> {
        let (arch, mut store) = Architecture::build(dims, flags)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<ParamId> = store.ids().collect();
        for id in ids {
            for v in store.value_mut(id).as_mut_slice() {
                *v = rng.gen_range(-scale..=scale);
            }
        }
        Ok(Self { arch, store })
    }

    pub fn dims(&self) -> &ModelDims {
        &self.arch.dims
    }

    pub fn flags(&self) -> &ModelFlags {
        &self.arch.flags
    }
}

/// A document mapped to token ids and clipped positions.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedDocument {
    pub doc_id: String,
    pub tokens: Vec<Vec<usize>>,
    pub positions: Vec<RelativePosition>,
    pub gold: Vec<bool>,
}

impl EncodedDocument {
    pub fn new(doc: &Document, vocab: &Vocabulary, clip: usize) -> Self {
        Self {
            doc_id: doc.doc_id().to_string(),
            tokens: doc
                .clauses()
                .iter()
                .map(|c| c.tokens().iter().map(|t| vocab.id(t)).collect())
                .collect(),
            positions: relative_positions(doc, clip),
            gold: doc.gold_causes().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn encode_corpus(docs: &[Document], vocab: &Vocabulary, clip: usize) -> Vec<EncodedDocument> {
    docs.iter().map(|d| EncodedDocument::new(d, vocab, clip)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_dims() -> ModelDims {
        ModelDims {
            vocab_size: 7,
            word_dim: 3,
            position_dim: 2,
            hidden: 2,
            attention_dim: 3,
            clip: 2,
            max_clauses: 5,
        }
    }

    #[test]
    fn init_is_bounded_and_deterministic() {
        let a = Model::init(small_dims(), ModelFlags::default(), 3).unwrap();
        let b = Model::init(small_dims(), ModelFlags::default(), 3).unwrap();
        assert_eq!(a, b);
        for id in a.store.ids() {
            assert!(a.store.value(id).as_slice().iter().all(|v| v.abs() <= 0.01));
        }
        let c = Model::init(small_dims(), ModelFlags::default(), 4).unwrap();
        assert_ne!(a.store, c.store);
    }

    #[test]
    fn zero_dims_are_rejected() {
        let dims = ModelDims { hidden: 0, ..small_dims() };
        assert!(Model::init(dims, ModelFlags::default(), 0).is_err());
    }

    #[test]
    fn feature_widths_per_mode() {
        let dims = small_dims();
        let mk = |position, dgl| {
            Architecture::build(
                dims,
                ModelFlags { position, position_head: false, dgl, order: OrderMode::Reordered },
            )
            .unwrap()
            .0
        };
        assert_eq!(mk(None, false).feature_dim(), 4);
        assert_eq!(mk(Some(PositionMode::Pec), false).feature_dim(), 6);
        assert_eq!(mk(Some(PositionMode::Pae), true).feature_dim(), 9);
        assert_eq!(mk(Some(PositionMode::Pae), false).input_dim(), 5);
        assert_eq!(mk(Some(PositionMode::Pl), false).input_dim(), 3);
    }

    #[test]
    fn pl_appends_a_position_token() {
        let flags = ModelFlags {
            position: Some(PositionMode::Pl),
            position_head: false,
            dgl: false,
            order: OrderMode::Reordered,
        };
        let m = Model::init(small_dims(), flags, 0).unwrap();
        let xs = m
            .arch
            .clause_inputs(m.store.values(), &[1, 2], RelativePosition::new(-1, 2))
            .unwrap();
        assert_eq!(xs.len(), 3);
        let pid = m.arch.position_table_id().unwrap();
        assert_eq!(xs[2], m.store.value(pid).row(1));
    }
}
