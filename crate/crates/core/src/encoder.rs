//! Clause encoder: position-augmented word embeddings, a bidirectional
//! LSTM pass and additive attention pooling into one clause vector.

use crate::corpus::RelativePosition;
use crate::error::{Error, Result};
use crate::numerics::{
    affine, affine_backward, dot, recurrent_cell, recurrent_cell_backward, softmax,
    softmax_backward, CellCache, LstmGrads, LstmWeights, Matrix,
};

/// Word table (`|V| x m`) and position table (`(2L+1) x n`).
#[derive(Clone, Copy, Debug)]
pub struct EmbeddingTables<'a> {
    pub word: &'a Matrix,
    pub position: &'a Matrix,
    pub clip: usize,
}

impl EmbeddingTables<'_> {
    pub fn check(&self) -> Result<()> {
        if self.position.rows() != 2 * self.clip + 1 {
            return Err(Error::Shape {
                op: "EmbeddingTables",
                left: format!("position rows {}", self.position.rows()),
                right: format!("2L+1 = {}", 2 * self.clip + 1),
            });
        }
        if self.word.cols() == 0 || self.position.cols() == 0 {
            return Err(Error::Argument("embedding dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn word_row(&self, id: usize) -> Result<&[f64]> {
        if id >= self.word.rows() {
            return Err(Error::Index {
                what: "token id",
                index: id as i64,
                size: self.word.rows(),
            });
        }
        Ok(self.word.row(id))
    }

    pub fn position_row(&self, position: RelativePosition) -> Result<&[f64]> {
        Ok(self.position.row(position.class_index(self.clip)?))
    }
}

/// Per-token input vectors of one clause.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSequence(pub Vec<Vec<f64>>);

impl AugmentedSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.0
    }
}

/// Each token becomes `word_embedding ++ position_embedding`, with the
/// clause's single position vector repeated on every token.
pub fn augment_embedding(
    tokens: &[usize],
    position: RelativePosition,
    tables: &EmbeddingTables<'_>,
) -> Result<AugmentedSequence> {
    tables.check()?;
    let pos = tables.position_row(position)?;
    tokens
        .iter()
        .map(|&t| Ok([tables.word_row(t)?, pos].concat()))
        .collect::<Result<Vec<_>>>()
        .map(AugmentedSequence)
}

#[derive(Clone, Copy, Debug)]
pub struct EncoderParams<'a> {
    pub forward: LstmWeights<'a>,
    pub backward: LstmWeights<'a>,
    /// Attention projection `a x d`.
    pub att_w: &'a Matrix,
    pub att_b: &'a [f64],
    /// Attention score vector, length `a`.
    pub att_v: &'a [f64],
}

impl EncoderParams<'_> {
    pub fn hidden_dim(&self) -> usize {
        self.forward.hidden() + self.backward.hidden()
    }

    fn check(&self, input: usize) -> Result<()> {
        if self.forward.hidden() != self.backward.hidden() {
            return Err(Error::Shape {
                op: "encode_clause",
                left: format!("forward hidden {}", self.forward.hidden()),
                right: format!("backward hidden {}", self.backward.hidden()),
            });
        }
        if self.forward.input() != input || self.backward.input() != input {
            return Err(Error::Shape {
                op: "encode_clause",
                left: format!("cell input {}", self.forward.input()),
                right: format!("sequence dim {input}"),
            });
        }
        if self.att_w.cols() != self.hidden_dim()
            || self.att_w.rows() != self.att_v.len()
            || self.att_b.len() != self.att_v.len()
        {
            return Err(Error::Shape {
                op: "encode_clause",
                left: format!(
                    "attention W {}x{}, b {}, v {}",
                    self.att_w.rows(),
                    self.att_w.cols(),
                    self.att_b.len(),
                    self.att_v.len()
                ),
                right: format!("hidden dim {}", self.hidden_dim()),
            });
        }
        Ok(())
    }
}

pub struct EncoderGrads<'a> {
    pub forward: LstmGrads<'a>,
    pub backward: LstmGrads<'a>,
    pub att_w: &'a mut Matrix,
    pub att_b: &'a mut [f64],
    pub att_v: &'a mut [f64],
}

/// Attention-weighted sum of hidden states.
#[derive(Clone, Debug, PartialEq)]
pub struct ClauseRepresentation(pub Vec<f64>);

impl ClauseRepresentation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Forward-pass record of one clause, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct EncoderTrace {
    fwd_cache: Vec<CellCache>,
    bwd_cache: Vec<CellCache>,
    pub hidden: Vec<Vec<f64>>,
    att_u: Vec<Vec<f64>>,
    pub attention: Vec<f64>,
    pub representation: ClauseRepresentation,
}

pub fn encode_clause(
    seq: &AugmentedSequence,
    params: &EncoderParams<'_>,
) -> Result<(Vec<Vec<f64>>, ClauseRepresentation)> {
    let trace = encode_clause_traced(seq.vectors(), params)?;
    Ok((trace.hidden, trace.representation))
}

pub fn encode_clause_traced(inputs: &[Vec<f64>], params: &EncoderParams<'_>) -> Result<EncoderTrace> {
    let Some(first) = inputs.first() else {
        return Err(Error::Argument("cannot encode an empty clause".into()));
    };
    params.check(first.len())?;
    let h = params.forward.hidden();
    let len = inputs.len();

    let mut fwd_cache = Vec::with_capacity(len);
    let mut fwd_h = Vec::with_capacity(len);
    let (mut hp, mut cp) = (vec![0.0; h], vec![0.0; h]);
    for x in inputs {
        let (hn, cn, cache) = recurrent_cell(x, &hp, &cp, params.forward)?;
        fwd_cache.push(cache);
        fwd_h.push(hn.clone());
        hp = hn;
        cp = cn;
    }

    // backward direction, stored in token order
    let mut bwd_cache: Vec<Option<CellCache>> = vec![None; len];
    let mut bwd_h = vec![Vec::new(); len];
    let (mut hp, mut cp) = (vec![0.0; h], vec![0.0; h]);
    for j in (0..len).rev() {
        let (hn, cn, cache) = recurrent_cell(&inputs[j], &hp, &cp, params.backward)?;
        bwd_cache[j] = Some(cache);
        bwd_h[j] = hn.clone();
        hp = hn;
        cp = cn;
    }
    let bwd_cache: Vec<CellCache> = bwd_cache.into_iter().map(|c| c.expect("filled")).collect();

    let hidden: Vec<Vec<f64>> = fwd_h
        .into_iter()
        .zip(bwd_h)
        .map(|(f, b)| [f, b].concat())
        .collect();

    let mut att_u = Vec::with_capacity(len);
    let mut scores = Vec::with_capacity(len);
    for hj in &hidden {
        let u: Vec<f64> = affine(hj, params.att_w, params.att_b)?
            .into_iter()
            .map(f64::tanh)
            .collect();
        scores.push(dot(params.att_v, &u));
        att_u.push(u);
    }
    let attention = softmax(&scores)?;
    let d = 2 * h;
    let mut r = vec![0.0; d];
    for (a, hj) in attention.iter().zip(&hidden) {
        for (rk, hk) in r.iter_mut().zip(hj) {
            *rk += a * hk;
        }
    }
    Ok(EncoderTrace {
        fwd_cache,
        bwd_cache,
        hidden,
        att_u,
        attention,
        representation: ClauseRepresentation(r),
    })
}

/// Backward from `dr` (gradient w.r.t. the clause vector). Accumulates
/// parameter gradients and returns the gradient w.r.t. every input vector.
pub fn encode_clause_backward(
    trace: &EncoderTrace,
    dr: &[f64],
    params: &EncoderParams<'_>,
    grads: &mut EncoderGrads<'_>,
) -> Vec<Vec<f64>> {
    let len = trace.hidden.len();
    let h = params.forward.hidden();

    // attention pooling
    let mut dh: Vec<Vec<f64>> = trace
        .attention
        .iter()
        .map(|a| dr.iter().map(|g| a * g).collect())
        .collect();
    let dalpha: Vec<f64> = trace.hidden.iter().map(|hj| dot(dr, hj)).collect();
    let dscores = softmax_backward(&trace.attention, &dalpha);
    for j in 0..len {
        let u = &trace.att_u[j];
        let ds = dscores[j];
        for (gv, uk) in grads.att_v.iter_mut().zip(u) {
            *gv += ds * uk;
        }
        let dpre: Vec<f64> = params
            .att_v
            .iter()
            .zip(u)
            .map(|(v, uk)| ds * v * (1.0 - uk * uk))
            .collect();
        affine_backward(
            &trace.hidden[j],
            params.att_w,
            &dpre,
            grads.att_w,
            grads.att_b,
            Some(&mut dh[j]),
        );
    }

    let input_dim = params.forward.input();
    let mut dx = vec![vec![0.0; input_dim]; len];

    let (mut dh_next, mut dc_next) = (vec![0.0; h], vec![0.0; h]);
    for j in (0..len).rev() {
        let dhj: Vec<f64> = dh[j][..h].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
        let (dxj, dhp, dcp) =
            recurrent_cell_backward(&trace.fwd_cache[j], &dhj, &dc_next, params.forward, &mut grads.forward);
        dx[j].iter_mut().zip(&dxj).for_each(|(a, b)| *a += b);
        dh_next = dhp;
        dc_next = dcp;
    }

    let (mut dh_next, mut dc_next) = (vec![0.0; h], vec![0.0; h]);
    for j in 0..len {
        let dhj: Vec<f64> = dh[j][h..].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
        let (dxj, dhp, dcp) = recurrent_cell_backward(
            &trace.bwd_cache[j],
            &dhj,
            &dc_next,
            params.backward,
            &mut grads.backward,
        );
        dx[j].iter_mut().zip(&dxj).for_each(|(a, b)| *a += b);
        dh_next = dhp;
        dc_next = dcp;
    }
    dx
}
