//! Forward primitives and their hand-written backward passes.
//!
//! Backward functions accumulate (`+=`) into the gradient buffers they are
//! handed, so several uses of one parameter within a document sum up.

use super::Matrix;
use crate::error::{shape_err, Error, Result};

/// Clamp applied to probabilities before taking a log.
pub const LOG_EPSILON: f64 = 1e-12;

/// `W x + b`.
pub fn affine(x: &[f64], w: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if w.cols() != x.len() {
        return Err(shape_err(
            "affine",
            format!("W {}x{}", w.rows(), w.cols()),
            format!("x len {}", x.len()),
        ));
    }
    if w.rows() != b.len() {
        return Err(shape_err(
            "affine",
            format!("W {}x{}", w.rows(), w.cols()),
            format!("b len {}", b.len()),
        ));
    }
    let mut out = b.to_vec();
    for (o, row) in out.iter_mut().zip(w.as_slice().chunks_exact(w.cols().max(1))) {
        *o += super::dot(row, x);
    }
    Ok(out)
}

/// Accumulates the gradients of `y = W x + b` given `dy`.
pub fn affine_backward(
    x: &[f64],
    w: &Matrix,
    dy: &[f64],
    dw: &mut Matrix,
    db: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    dw.outer_acc(dy, x);
    for (g, d) in db.iter_mut().zip(dy) {
        *g += d;
    }
    if let Some(dx) = dx {
        w.matvec_t_acc(dy, dx);
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::Argument("softmax of an empty vector".into()));
    }
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    Ok(out)
}

/// Gradient w.r.t. the logits given the gradient w.r.t. the softmax output.
pub fn softmax_backward(p: &[f64], dp: &[f64]) -> Vec<f64> {
    let inner: f64 = p.iter().zip(dp).map(|(a, b)| a * b).sum();
    p.iter().zip(dp).map(|(pi, di)| pi * (di - inner)).collect()
}

/// `-sum truth_j * ln(max(pred_j, eps))`.
pub fn cross_entropy(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(shape_err("cross_entropy", pred.len(), truth.len()));
    }
    Ok(-pred
        .iter()
        .zip(truth)
        .filter(|(_, t)| **t != 0.0)
        .map(|(p, t)| t * p.max(LOG_EPSILON).ln())
        .sum::<f64>())
}

/// Gradient of [`cross_entropy`] w.r.t. `pred`. Zero where the clamp is active.
pub fn cross_entropy_backward(pred: &[f64], truth: &[f64]) -> Vec<f64> {
    pred.iter()
        .zip(truth)
        .map(|(p, t)| if *p > LOG_EPSILON { -t / p } else { 0.0 })
        .collect()
}

pub fn one_hot(len: usize, index: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_difference;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn affine_identity() {
        let y = affine(&[3.0, -1.0], &Matrix::identity(2), &[0.0, 0.0]).unwrap();
        assert_eq!(y, vec![3.0, -1.0]);
    }

    #[test]
    fn affine_arithmetic() {
        let w = Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        let y = affine(&[1.0, 1.0], &w, &[1.0, 1.0]).unwrap();
        assert_eq!(y, vec![4.0, 2.0]);
    }

    #[test]
    fn affine_shape_error_names_operands() {
        let err = affine(&[1.0, 2.0, 3.0], &Matrix::zeros(2, 2), &[0.0; 2]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("W 2x2") && msg.contains("x len 3"), "{msg}");
        assert!(affine(&[1.0, 2.0], &Matrix::zeros(2, 2), &[0.0; 3]).is_err());
    }

    #[test]
    fn affine_weight_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // loss = c . (W x + b), nonlinear enough via squaring
        let loss = |wv: &[f64]| {
            let wm = Matrix::from_vec(3, 4, wv.to_vec()).unwrap();
            let y = affine(&x, &wm, &b).unwrap();
            y.iter().zip(&c).map(|(a, k)| k * a * a).sum::<f64>()
        };
        let wm = Matrix::from_vec(3, 4, w.clone()).unwrap();
        let y = affine(&x, &wm, &b).unwrap();
        let dy: Vec<f64> = y.iter().zip(&c).map(|(a, k)| 2.0 * k * a).collect();
        let mut dw = Matrix::zeros(3, 4);
        let mut db = vec![0.0; 3];
        let mut dx = vec![0.0; 4];
        affine_backward(&x, &wm, &dy, &mut dw, &mut db, Some(&mut dx));
        let numeric = finite_difference(loss, &w, 1e-5);
        for (a, n) in dw.as_slice().iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-12);
            assert!(rel < 1e-6, "analytic {a} numeric {n}");
        }
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        assert!(close(&p, &[1.0 / 3.0; 3], 1e-15));
        let p = softmax(&[0.0, 3f64.ln()]).unwrap();
        assert!(close(&p, &[0.25, 0.75], 1e-15));
        let p = softmax(&[1000.0, 1000.0]).unwrap();
        assert!(close(&p, &[0.5, 0.5], 0.0));
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        let ln2 = 2f64.ln();
        assert!((cross_entropy(&[0.5, 0.5], &[1.0, 0.0]).unwrap() - ln2).abs() < 1e-15);
        assert!((cross_entropy(&[0.5, 0.5], &[0.5, 0.5]).unwrap() - ln2).abs() < 1e-15);
        assert!(cross_entropy(&[0.5], &[0.5, 0.5]).is_err());
        // clamp keeps the value bounded
        let clamped = cross_entropy(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((clamped - (-LOG_EPSILON.ln())).abs() < 1e-9);
    }

    #[test]
    fn softmax_cross_entropy_gradient_is_p_minus_t() {
        let z = [0.3, -1.2, 2.0];
        let t = [0.0, 1.0, 0.0];
        let p = softmax(&z).unwrap();
        let dz = softmax_backward(&p, &cross_entropy_backward(&p, &t));
        let expected: Vec<f64> = p.iter().zip(&t).map(|(a, b)| a - b).collect();
        assert!(close(&dz, &expected, 1e-14));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
