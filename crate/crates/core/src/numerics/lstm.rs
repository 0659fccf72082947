//! Gated recurrent cell (LSTM) with input, forget and output gates.
//!
//! Gate rows are stacked in the order input, forget, candidate, output, so
//! `wx` is `4h x in`, `wh` is `4h x h` and `b` has length `4h`.

use super::{ops::sigmoid, Matrix};
use crate::error::{shape_err, Result};

#[derive(Clone, Copy, Debug)]
pub struct LstmWeights<'a> {
    pub wx: &'a Matrix,
    pub wh: &'a Matrix,
    pub b: &'a [f64],
}

pub struct LstmGrads<'a> {
    pub wx: &'a mut Matrix,
    pub wh: &'a mut Matrix,
    pub b: &'a mut [f64],
}

impl LstmWeights<'_> {
    pub fn hidden(&self) -> usize {
        self.wh.cols()
    }

    pub fn input(&self) -> usize {
        self.wx.cols()
    }

    fn check(&self) -> Result<()> {
        let h = self.hidden();
        if self.wh.rows() != 4 * h {
            return Err(shape_err("recurrent_cell", "wh rows", format!("{} != 4*{h}", self.wh.rows())));
        }
        if self.wx.rows() != 4 * h {
            return Err(shape_err("recurrent_cell", "wx rows", format!("{} != 4*{h}", self.wx.rows())));
        }
        if self.b.len() != 4 * h {
            return Err(shape_err("recurrent_cell", "b len", format!("{} != 4*{h}", self.b.len())));
        }
        Ok(())
    }
}

/// Everything the backward pass needs from one step.
#[derive(Clone, Debug)]
pub struct CellCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// One recurrent step. Returns `(h, c, cache)`.
pub fn recurrent_cell(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    w: LstmWeights<'_>,
) -> Result<(Vec<f64>, Vec<f64>, CellCache)> {
    w.check()?;
    let h = w.hidden();
    if x.len() != w.input() {
        return Err(shape_err("recurrent_cell", format!("wx cols {}", w.input()), format!("x len {}", x.len())));
    }
    if h_prev.len() != h || c_prev.len() != h {
        return Err(shape_err(
            "recurrent_cell",
            format!("hidden {h}"),
            format!("h_prev {} / c_prev {}", h_prev.len(), c_prev.len()),
        ));
    }
    let mut z = w.b.to_vec();
    let mut tmp = vec![0.0; 4 * h];
    w.wx.matvec_into(x, &mut tmp);
    z.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
    w.wh.matvec_into(h_prev, &mut tmp);
    z.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);

    let i: Vec<f64> = z[..h].iter().map(|v| sigmoid(*v)).collect();
    let f: Vec<f64> = z[h..2 * h].iter().map(|v| sigmoid(*v)).collect();
    let g: Vec<f64> = z[2 * h..3 * h].iter().map(|v| v.tanh()).collect();
    let o: Vec<f64> = z[3 * h..].iter().map(|v| sigmoid(*v)).collect();
    let c: Vec<f64> = (0..h).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let hn: Vec<f64> = (0..h).map(|k| o[k] * tanh_c[k]).collect();
    let cache = CellCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        i,
        f,
        g,
        o,
        tanh_c,
    };
    Ok((hn, c, cache))
}

/// Backward through one step. Accumulates weight gradients and returns
/// `(dx, dh_prev, dc_prev)`.
pub fn recurrent_cell_backward(
    cache: &CellCache,
    dh: &[f64],
    dc: &[f64],
    w: LstmWeights<'_>,
    grads: &mut LstmGrads<'_>,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = w.hidden();
    let mut dz = vec![0.0; 4 * h];
    let mut dc_prev = vec![0.0; h];
    for k in 0..h {
        let do_ = dh[k] * cache.tanh_c[k];
        let dck = dc[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
        let di = dck * cache.g[k];
        let df = dck * cache.c_prev[k];
        let dg = dck * cache.i[k];
        dc_prev[k] = dck * cache.f[k];
        dz[k] = di * cache.i[k] * (1.0 - cache.i[k]);
        dz[h + k] = df * cache.f[k] * (1.0 - cache.f[k]);
        dz[2 * h + k] = dg * (1.0 - cache.g[k] * cache.g[k]);
        dz[3 * h + k] = do_ * cache.o[k] * (1.0 - cache.o[k]);
    }
    grads.wx.outer_acc(&dz, &cache.x);
    grads.wh.outer_acc(&dz, &cache.h_prev);
    grads.b.iter_mut().zip(&dz).for_each(|(a, b)| *a += b);
    let mut dx = vec![0.0; w.input()];
    w.wx.matvec_t_acc(&dz, &mut dx);
    let mut dh_prev = vec![0.0; h];
    w.wh.matvec_t_acc(&dz, &mut dh_prev);
    (dx, dh_prev, dc_prev)
}
