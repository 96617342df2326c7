//! Layer primitives. The batched kernels work on channel-last buffers
//! (`batch × side × side × channels`); the single-sample functions at the
//! bottom wrap them for direct use.

use crate::error::{Error, Result};

use super::config::{pooled, POOL};

/// `C = A·B + beta·C` for an m×k `A` and k×n `B`, both row-major. A buffer
/// flagged as transposed holds the transpose row-major (`A` as k×m, `B` as n×k).
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_t: bool,
    b: &[f64],
    b_t: bool,
    c: &mut [f64],
    beta: f64,
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserts above bound every index the strides can reach.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Unfolds every f×f×c window of a batch of s×s×c maps into a row of the
/// returned `(batch·o·o) × (f·f·c)` matrix, `o = s − f + 1`.
pub(crate) fn im2col(input: &[f64], batch: usize, s: usize, c: usize, f: usize) -> Vec<f64> {
    let o = s - f + 1;
    let row_len = f * f * c;
    let run = f * c;
    let mut cols = vec![0.0; batch * o * o * row_len];
    for b in 0..batch {
        let img = &input[b * s * s * c..(b + 1) * s * s * c];
        for y in 0..o {
            for x in 0..o {
                let dst = ((b * o + y) * o + x) * row_len;
                for dy in 0..f {
                    let src = ((y + dy) * s + x) * c;
                    cols[dst + dy * run..dst + (dy + 1) * run].copy_from_slice(&img[src..src + run]);
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: accumulates window gradients back onto the maps.
pub(crate) fn col2im_add(dcols: &[f64], batch: usize, s: usize, c: usize, f: usize, dinput: &mut [f64]) {
    let o = s - f + 1;
    let row_len = f * f * c;
    let run = f * c;
    for b in 0..batch {
        let img = &mut dinput[b * s * s * c..(b + 1) * s * s * c];
        for y in 0..o {
            for x in 0..o {
                let src = ((b * o + y) * o + x) * row_len;
                for dy in 0..f {
                    let dst = ((y + dy) * s + x) * c;
                    for (d, g) in img[dst..dst + run]
                        .iter_mut()
                        .zip(&dcols[src + dy * run..src + (dy + 1) * run])
                    {
                        *d += g;
                    }
                }
            }
        }
    }
}

/// Valid cross-correlation of a batch with `filters` rows of f·f·c weights,
/// plus bias. Returns the unfolded input and the `(batch·o·o) × F` output.
pub(crate) fn conv_forward(
    input: &[f64],
    batch: usize,
    s: usize,
    c: usize,
    f: usize,
    weights: &[f64],
    bias: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let filters = bias.len();
    let o = s - f + 1;
    let rows = batch * o * o;
    let cols = im2col(input, batch, s, c, f);
    let mut out = Vec::with_capacity(rows * filters);
    for _ in 0..rows {
        out.extend_from_slice(bias);
    }
    gemm(rows, f * f * c, filters, &cols, false, weights, true, &mut out, 1.0);
    (cols, out)
}

/// 2×2 stride-2 max pooling with partial windows at odd edges.
/// Returns the pooled maps and, per output, the flat input index of its max.
pub(crate) fn maxpool_forward(input: &[f64], batch: usize, s: usize, c: usize) -> (Vec<f64>, Vec<u32>) {
    let o = pooled(s);
    let mut out = vec![f64::NEG_INFINITY; batch * o * o * c];
    let mut arg = vec![0u32; out.len()];
    for b in 0..batch {
        for py in 0..o {
            for px in 0..o {
                let dst = ((b * o + py) * o + px) * c;
                for y in POOL * py..(POOL * py + POOL).min(s) {
                    for x in POOL * px..(POOL * px + POOL).min(s) {
                        let src = ((b * s + y) * s + x) * c;
                        for ch in 0..c {
                            let v = input[src + ch];
                            if v > out[dst + ch] {
                                out[dst + ch] = v;
                                arg[dst + ch] = (src + ch) as u32;
                            }
                        }
                    }
                }
            }
        }
    }
    (out, arg)
}

pub(crate) fn relu_in_place(xs: &mut [f64]) {
    for x in xs {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Row-wise max-shifted softmax over a `rows × k` buffer.
pub(crate) fn softmax_rows(logits: &[f64], k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks(k) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let start = out.len();
        let mut s = 0.0;
        for &l in row {
            let e = (l - m).exp();
            s += e;
            out.push(e);
        }
        out[start..].iter_mut().for_each(|e| *e /= s);
    }
    out
}

pub const PROB_FLOOR: f64 = 1e-10;

/// Mean cross-entropy over rows of `one_hot` and `probs`, both `rows × k`.
/// Probabilities are floored at 1e-10 before the log.
pub fn cross_entropy(one_hot: &[f64], probs: &[f64], k: usize) -> f64 {
    assert_eq!(one_hot.len(), probs.len());
    let rows = probs.len() / k;
    if rows == 0 {
        return 0.0;
    }
    let total: f64 = one_hot
        .iter()
        .zip(probs)
        .filter(|(y, _)| **y != 0.0)
        .map(|(y, p)| -y * p.max(PROB_FLOOR).ln())
        .sum();
    total / rows as f64
}

/// One-hot rows for 1-based labels.
pub fn one_hot(labels: &[u32], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; labels.len() * k];
    for (i, &l) in labels.iter().enumerate() {
        out[i * k + l as usize - 1] = 1.0;
    }
    out
}

/// A single channel-last feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::shape(format!(
                "tensor {height}x{width}x{channels} needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }
}

/// `count` filters of size×size×channels, each stored as one row.
#[derive(Debug, Clone, PartialEq)]
pub struct Filters {
    pub count: usize,
    pub size: usize,
    pub channels: usize,
    pub weights: Vec<f64>,
}

fn require_square(t: &Tensor) -> Result<()> {
    if t.height != t.width {
        return Err(Error::shape(format!("expected a square map, got {}x{}", t.height, t.width)));
    }
    Ok(())
}

/// Valid (unpadded) cross-correlation plus one bias per filter.
pub fn conv2d_valid(input: &Tensor, filters: &Filters, bias: &[f64]) -> Result<Tensor> {
    require_square(input)?;
    if filters.channels != input.channels {
        return Err(Error::shape(format!(
            "filters expect {} channels, input has {}",
            filters.channels, input.channels
        )));
    }
    if filters.size > input.height || filters.size == 0 {
        return Err(Error::shape(format!(
            "filter size {} does not fit a {}x{} input",
            filters.size, input.height, input.width
        )));
    }
    if bias.len() != filters.count
        || filters.weights.len() != filters.count * filters.size * filters.size * filters.channels
    {
        return Err(Error::shape("filter weights or bias have the wrong length"));
    }
    let o = input.height - filters.size + 1;
    let (_, out) = conv_forward(
        &input.data,
        1,
        input.height,
        input.channels,
        filters.size,
        &filters.weights,
        bias,
    );
    Tensor::new(o, o, filters.count, out)
}

/// 2×2 max pooling, stride 2, ceil mode. Also returns the flat input index
/// of every selected maximum.
pub fn maxpool2_ceil(input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    require_square(input)?;
    if input.height == 0 {
        return Err(Error::shape("cannot pool an empty map"));
    }
    let (out, arg) = maxpool_forward(&input.data, 1, input.height, input.channels);
    let o = pooled(input.height);
    Ok((Tensor::new(o, o, input.channels, out)?, arg.into_iter().map(|i| i as usize).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// `act(W x + b)` with `W` stored row-major as `out × in`.
pub fn dense_forward(x: &[f64], weights: &[f64], bias: &[f64], activation: Activation) -> Result<Vec<f64>> {
    let (n_in, n_out) = (x.len(), bias.len());
    if weights.len() != n_in * n_out {
        return Err(Error::shape(format!(
            "weights hold {} values, expected {n_out}x{n_in}",
            weights.len()
        )));
    }
    let mut y = bias.to_vec();
    gemm(1, n_in, n_out, x, false, weights, true, &mut y, 1.0);
    if activation == Activation::Relu {
        relu_in_place(&mut y);
    }
    Ok(y)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    softmax_rows(logits, logits.len().max(1))
}
