//! Eager kernels. The tape records calls to these and reuses them for
//! the backward pass.

use super::Tensor2D;
use crate::error::{Error, Result};

/// Dot product with eight independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let (x, y) = (&a[i * 8..i * 8 + 8], &b[i * 8..i * 8 + 8]);
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    acc.iter().sum::<f32>() + tail
}

#[inline]
fn axpy(alpha: f32, x: &[f32], y: &mut [f32]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `a · b`.
pub fn matmul(a: &Tensor2D, b: &Tensor2D) -> Result<Tensor2D> {
    if a.cols() != b.rows() {
        return Err(Error::Dimension {
            op: "matmul",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let mut out = Tensor2D::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        let arow = a.row(i);
        let orow = out.row_mut(i);
        for (k, &aik) in arow.iter().enumerate() {
            if aik != 0.0 {
                axpy(aik, b.row(k), orow);
            }
        }
    }
    Ok(out)
}

/// `a · bᵀ`.
pub fn matmul_nt(a: &Tensor2D, b: &Tensor2D) -> Result<Tensor2D> {
    if a.cols() != b.cols() {
        return Err(Error::Dimension {
            op: "matmul_nt",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let mut out = Tensor2D::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        let arow = a.row(i);
        for j in 0..b.rows() {
            out.set(i, j, dot(arow, b.row(j)));
        }
    }
    Ok(out)
}

/// `aᵀ · b`.
pub fn matmul_tn(a: &Tensor2D, b: &Tensor2D) -> Result<Tensor2D> {
    if a.rows() != b.rows() {
        return Err(Error::Dimension {
            op: "matmul_tn",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let mut out = Tensor2D::zeros(a.cols(), b.cols());
    for r in 0..a.rows() {
        let brow = b.row(r);
        for (i, &ari) in a.row(r).iter().enumerate() {
            if ari != 0.0 {
                axpy(ari, brow, out.row_mut(i));
            }
        }
    }
    Ok(out)
}

fn softmax_in_place(row: &mut [f32]) {
    let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut total = 0.0f64;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        total += *x as f64;
    }
    let inv = (1.0 / total) as f32;
    for x in row.iter_mut() {
        *x *= inv;
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(x: &Tensor2D) -> Tensor2D {
    let mut out = x.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

/// Softmax of a square score matrix where row `i` only sees columns `0..=i`.
/// Masked entries are exactly zero.
pub fn causal_softmax(x: &Tensor2D) -> Tensor2D {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let visible = (r + 1).min(row.len());
        softmax_in_place(&mut row[..visible]);
        row[visible..].iter_mut().for_each(|v| *v = 0.0);
    }
    out
}

/// Per-row mean and `1/sqrt(var + eps)`, population variance.
pub(crate) fn row_moments(row: &[f32], eps: f32) -> (f32, f32) {
    let n = row.len() as f64;
    let mean = row.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = row
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    (mean as f32, (1.0 / (var + eps as f64).sqrt()) as f32)
}

/// `(x − mean) / sqrt(var + eps) · gain + bias`, per row.
///
/// `eps = 0` is accepted for hand checks; a constant row then divides by zero,
/// so model code always passes a positive epsilon.
pub fn layer_norm(x: &Tensor2D, gain: &[f32], bias: &[f32], eps: f32) -> Result<Tensor2D> {
    if gain.len() != x.cols() || bias.len() != x.cols() {
        return Err(Error::Dimension {
            op: "layer_norm",
            lhs: x.shape(),
            rhs: (gain.len(), bias.len()),
        });
    }
    let mut out = Tensor2D::zeros(x.rows(), x.cols());
    for r in 0..x.rows() {
        let row = x.row(r);
        let (mean, inv_std) = row_moments(row, eps);
        for (c, o) in out.row_mut(r).iter_mut().enumerate() {
            *o = (row[c] - mean) * inv_std * gain[c] + bias[c];
        }
    }
    Ok(out)
}

/// `−log softmax(logits)[target]`.
pub fn cross_entropy(logits: &[f32], target: usize) -> Result<f32> {
    if target >= logits.len() {
        return Err(Error::Index {
            what: "cross_entropy target",
            index: target,
            limit: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let lse = logits
        .iter()
        .map(|&l| (l as f64 - max).exp())
        .sum::<f64>()
        .ln()
        + max;
    // Rounding can leave a tiny negative value; NaN must pass through.
    let loss = lse - logits[target] as f64;
    Ok(if loss < 0.0 { 0.0 } else { loss as f32 })
}

const GELU_C: f32 = 0.797_884_6; // sqrt(2/pi)

/// Tanh approximation of GELU.
pub fn gelu(x: f32) -> f32 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

pub(crate) fn gelu_grad(x: f32) -> f32 {
    let inner = GELU_C * (x + 0.044715 * x * x * x);
    let t = inner.tanh();
    let dinner = GELU_C * (1.0 + 3.0 * 0.044715 * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner
}
