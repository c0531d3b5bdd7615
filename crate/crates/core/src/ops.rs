//! Dense numeric kernels: 2-D convolution (forward and backward), average
//! pooling, inference batch norm, tempered softmax, a GRU cell and affine maps.
//!
//! All convolutions are stride 1 with zero padding; downsampling is done by
//! pooling, never by strided convolution. Every function is pure and keeps a
//! fixed summation order per output cell, so results do not depend on how
//! callers distribute work across threads.

use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};
use crate::tensor::{expect_axis, Tensor};

/// 2-D convolution over `[batch, channel, frequency, time]` input.
///
/// `kernel` is `[c_out, c_in, kh, kw]` with odd `kh`, `kw`; `padding` is
/// `(pad_freq, pad_time)` zeros on each side. Output frequency extent is
/// `f + 2*pad_freq - kh + 1`, time analogous.
pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    padding: (usize, usize),
) -> Result<Tensor<T>> {
    let (out_f, out_t) = conv2d_check("conv2d_forward", input, kernel, bias.shape(), padding)?;
    let (batch, c_in, in_f, in_t) = dims4(input);
    let (c_out, _, kh, kw) = dims4(kernel);
    let (ph, pw) = padding;

    let mut out = Tensor::zeros(&[batch, c_out, out_f, out_t]);
    let in_data = input.data();
    let out_data = out.data_mut();
    // Accumulate one kernel tap at a time over contiguous time rows. For a
    // fixed output cell the taps still land in (ci, i, j) order, so the
    // summation order matches the per-cell definition exactly.
    for b in 0..batch {
        for co in 0..c_out {
            let out_base = (b * c_out + co) * out_f * out_t;
            out_data[out_base..out_base + out_f * out_t].fill(bias.data()[co]);
            for ci in 0..c_in {
                let in_base = (b * c_in + ci) * in_f * in_t;
                for i in 0..kh {
                    // Valid output rows: 0 <= f + i - ph < in_f.
                    let f_lo = ph.saturating_sub(i);
                    let f_hi = (in_f + ph).saturating_sub(i).min(out_f);
                    for j in 0..kw {
                        let w = kernel.at4(co, ci, i, j);
                        let t_lo = pw.saturating_sub(j);
                        let t_hi = (in_t + pw).saturating_sub(j).min(out_t);
                        if t_lo >= t_hi {
                            continue;
                        }
                        for f in f_lo..f_hi {
                            let in_row = in_base + (f + i - ph) * in_t + (t_lo + j) - pw;
                            let out_row = out_base + f * out_t + t_lo;
                            let n = t_hi - t_lo;
                            let src = &in_data[in_row..in_row + n];
                            let dst = &mut out_data[out_row..out_row + n];
                            for (o, &x) in dst.iter_mut().zip(src) {
                                *o += w * x;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of [`conv2d_forward`] with respect to input, kernel and bias.
///
/// `grad_out` has the forward output's shape. `grad_bias[co]` is the plain
/// sum of `grad_out` over batch, frequency and time.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    grad_out: &Tensor<T>,
    padding: (usize, usize),
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (c_out, _, kh, kw) = dims4(kernel);
    let (out_f, out_t) = conv2d_check("conv2d_backward", input, kernel, &[c_out], padding)?;
    let (batch, c_in, in_f, in_t) = dims4(input);
    let (ph, pw) = padding;
    if grad_out.shape() != [batch, c_out, out_f, out_t] {
        return Err(Error::invalid(
            "conv2d_backward",
            format!(
                "grad_out shape {:?} does not match forward output [{batch}, {c_out}, {out_f}, {out_t}]",
                grad_out.shape()
            ),
        ));
    }

    let mut grad_input = Tensor::zeros(input.shape());
    let mut grad_kernel = Tensor::zeros(kernel.shape());
    let mut grad_bias = Tensor::zeros(&[c_out]);

    for b in 0..batch {
        for co in 0..c_out {
            for f in 0..out_f {
                for t in 0..out_t {
                    let g = grad_out.at4(b, co, f, t);
                    grad_bias.data_mut()[co] += g;
                    if g == T::zero() {
                        continue;
                    }
                    for ci in 0..c_in {
                        for i in 0..kh {
                            let fi = f + i;
                            if fi < ph || fi - ph >= in_f {
                                continue;
                            }
                            for j in 0..kw {
                                let tj = t + j;
                                if tj < pw || tj - pw >= in_t {
                                    continue;
                                }
                                let x = input.at4(b, ci, fi - ph, tj - pw);
                                let w = kernel.at4(co, ci, i, j);
                                let ko = kernel.off4(co, ci, i, j);
                                grad_kernel.data_mut()[ko] += g * x;
                                let io = input.off4(b, ci, fi - ph, tj - pw);
                                grad_input.data_mut()[io] += g * w;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((grad_input, grad_kernel, grad_bias))
}

fn conv2d_check<T: Scalar>(
    op: &'static str,
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    bias_shape: &[usize],
    padding: (usize, usize),
) -> Result<(usize, usize)> {
    if input.rank() != 4 {
        return Err(Error::invalid(op, format!("input rank {} != 4", input.rank())));
    }
    if kernel.rank() != 4 {
        return Err(Error::invalid(op, format!("kernel rank {} != 4", kernel.rank())));
    }
    let (_, c_in, in_f, in_t) = dims4(input);
    let (c_out, k_cin, kh, kw) = dims4(kernel);
    expect_axis(op, "input channel", c_in, k_cin)?;
    if bias_shape.len() != 1 {
        return Err(Error::invalid(op, "bias must be rank 1".to_string()));
    }
    expect_axis(op, "output channel", c_out, bias_shape[0])?;
    if kh % 2 == 0 || kw % 2 == 0 {
        return Err(Error::invalid(op, format!("kernel extents must be odd, got {kh}x{kw}")));
    }
    let (ph, pw) = padding;
    let f_span = in_f + 2 * ph;
    let t_span = in_t + 2 * pw;
    if f_span < kh || t_span < kw {
        return Err(Error::invalid(
            op,
            format!("kernel {kh}x{kw} exceeds padded input {f_span}x{t_span}"),
        ));
    }
    Ok((f_span - kh + 1, t_span - kw + 1))
}

#[inline]
fn dims4<T: Scalar>(t: &Tensor<T>) -> (usize, usize, usize, usize) {
    (t.dim(0), t.dim(1), t.dim(2), t.dim(3))
}

/// Non-overlapping average pooling with window `(pool_freq, pool_time)`.
///
/// Trailing rows/frames that do not fill a complete window are truncated:
/// the output extents are `f / pool_freq` and `t / pool_time` (floor), so up
/// to `pool_freq - 1` frequency rows and `pool_time - 1` frames are dropped.
pub fn avg_pool2d<T: Scalar>(input: &Tensor<T>, window: (usize, usize)) -> Result<Tensor<T>> {
    if input.rank() != 4 {
        return Err(Error::invalid("avg_pool2d", format!("input rank {} != 4", input.rank())));
    }
    let (batch, ch, in_f, in_t) = dims4(input);
    let (pf, pt) = window;
    if pf == 0 || pt == 0 {
        return Err(Error::invalid("avg_pool2d", "window extents must be >= 1".to_string()));
    }
    if pf > in_f || pt > in_t {
        return Err(Error::invalid(
            "avg_pool2d",
            format!("window {pf}x{pt} larger than input {in_f}x{in_t}"),
        ));
    }
    let out_f = in_f / pf;
    let out_t = in_t / pt;
    let norm = T::one() / T::from_count(pf * pt);

    let mut out = Tensor::zeros(&[batch, ch, out_f, out_t]);
    let out_data = out.data_mut();
    let mut o = 0;
    for b in 0..batch {
        for c in 0..ch {
            for f in 0..out_f {
                for t in 0..out_t {
                    let mut acc = T::zero();
                    for i in 0..pf {
                        for j in 0..pt {
                            acc += input.at4(b, c, f * pf + i, t * pt + j);
                        }
                    }
                    out_data[o] = acc * norm;
                    o += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Per-channel batch normalization with precomputed (running) statistics:
/// `gamma * (x - mean) / sqrt(var + eps) + beta`.
pub fn batch_norm_inference<T: Scalar>(
    input: &Tensor<T>,
    mean: &[T],
    var: &[T],
    gamma: &[T],
    beta: &[T],
    eps: T,
) -> Result<Tensor<T>> {
    if input.rank() != 4 {
        return Err(Error::invalid("batch_norm", format!("input rank {} != 4", input.rank())));
    }
    let ch = input.dim(1);
    expect_axis("batch_norm", "channel", ch, mean.len())?;
    expect_axis("batch_norm", "channel", ch, var.len())?;
    expect_axis("batch_norm", "channel", ch, gamma.len())?;
    expect_axis("batch_norm", "channel", ch, beta.len())?;
    if var.iter().any(|&v| v < T::zero()) {
        return Err(Error::invalid("batch_norm", "negative variance".to_string()));
    }

    let per_ft = input.dim(2) * input.dim(3);
    let mut out = input.clone();
    for b in 0..input.dim(0) {
        for c in 0..ch {
            let scale = gamma[c] / (var[c] + eps).sqrt();
            let start = (b * ch + c) * per_ft;
            for v in &mut out.data_mut()[start..start + per_ft] {
                *v = (*v - mean[c]) * scale + beta[c];
            }
        }
    }
    Ok(out)
}

/// Softmax with temperature: `exp(l_i / tau) / sum_j exp(l_j / tau)`,
/// computed with max subtraction. Larger `tau` flattens toward uniform.
pub fn softmax_tempered<T: Scalar>(logits: &[T], tau: T) -> Result<Vec<T>> {
    if tau <= T::zero() {
        return Err(Error::invalid("softmax_tempered", format!("tau must be > 0, got {tau}")));
    }
    if logits.is_empty() {
        return Err(Error::invalid("softmax_tempered", "empty logits".to_string()));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("softmax_tempered", "non-finite logit".to_string()));
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&l| ((l - max) / tau).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Parameters of a single-direction GRU cell.
///
/// Input-to-hidden matrices are `[hidden, input]`, hidden-to-hidden are
/// `[hidden, hidden]`. The candidate path carries two biases: one applied on
/// the input side and one inside the reset product, matching the common
/// two-bias formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell<T> {
    pub w_update: Tensor<T>,
    pub u_update: Tensor<T>,
    pub b_update: Tensor<T>,
    pub w_reset: Tensor<T>,
    pub u_reset: Tensor<T>,
    pub b_reset: Tensor<T>,
    pub w_cand: Tensor<T>,
    pub u_cand: Tensor<T>,
    pub b_cand_input: Tensor<T>,
    pub b_cand_hidden: Tensor<T>,
}

impl<T: Scalar> GruCell<T> {
    /// Zero-initialized cell.
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            w_update: Tensor::zeros(&[hidden_dim, input_dim]),
            u_update: Tensor::zeros(&[hidden_dim, hidden_dim]),
            b_update: Tensor::zeros(&[hidden_dim]),
            w_reset: Tensor::zeros(&[hidden_dim, input_dim]),
            u_reset: Tensor::zeros(&[hidden_dim, hidden_dim]),
            b_reset: Tensor::zeros(&[hidden_dim]),
            w_cand: Tensor::zeros(&[hidden_dim, input_dim]),
            u_cand: Tensor::zeros(&[hidden_dim, hidden_dim]),
            b_cand_input: Tensor::zeros(&[hidden_dim]),
            b_cand_hidden: Tensor::zeros(&[hidden_dim]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_update.dim(1)
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_update.dim(0)
    }

    fn check(&self) -> Result<()> {
        let (h, i) = (self.hidden_dim(), self.input_dim());
        let mats = [
            (&self.w_update, [h, i]),
            (&self.u_update, [h, h]),
            (&self.w_reset, [h, i]),
            (&self.u_reset, [h, h]),
            (&self.w_cand, [h, i]),
            (&self.u_cand, [h, h]),
        ];
        for (m, want) in mats {
            if m.shape() != want {
                return Err(Error::invalid(
                    "gru_cell",
                    format!("weight shape {:?}, expected {:?}", m.shape(), want),
                ));
            }
        }
        for b in [
            &self.b_update,
            &self.b_reset,
            &self.b_cand_input,
            &self.b_cand_hidden,
        ] {
            expect_axis("gru_cell", "hidden", h, b.len())?;
        }
        Ok(())
    }

    /// One step:
    /// `z = sigma(Wz x + Uz h + bz)`, `r = sigma(Wr x + Ur h + br)`,
    /// `n = tanh(Wn x + r .* (Un h + bhn) + bin)`,
    /// `h' = (1 - z) .* n + z .* h`.
    pub fn forward(&self, x: &[T], h_prev: &[T]) -> Result<Vec<T>> {
        self.check()?;
        expect_axis("gru_cell", "input", self.input_dim(), x.len())?;
        expect_axis("gru_cell", "hidden", self.hidden_dim(), h_prev.len())?;
        let h = self.hidden_dim();

        let zx = matvec(&self.w_update, x);
        let zh = matvec(&self.u_update, h_prev);
        let rx = matvec(&self.w_reset, x);
        let rh = matvec(&self.u_reset, h_prev);
        let nx = matvec(&self.w_cand, x);
        let nh = matvec(&self.u_cand, h_prev);

        let mut out = vec![T::zero(); h];
        for k in 0..h {
            let z = sigmoid(zx[k] + zh[k] + self.b_update.data()[k]);
            let r = sigmoid(rx[k] + rh[k] + self.b_reset.data()[k]);
            let n = (nx[k] + r * (nh[k] + self.b_cand_hidden.data()[k])
                + self.b_cand_input.data()[k])
                .tanh();
            out[k] = (T::one() - z) * n + z * h_prev[k];
        }
        Ok(out)
    }
}

/// `W x + b` with `W` of shape `[rows, cols]`.
pub fn affine<T: Scalar>(x: &[T], w: &Tensor<T>, b: &[T]) -> Result<Vec<T>> {
    if w.rank() != 2 {
        return Err(Error::invalid("affine", format!("weight rank {} != 2", w.rank())));
    }
    expect_axis("affine", "input", w.dim(1), x.len())?;
    expect_axis("affine", "output", w.dim(0), b.len())?;
    let mut out = matvec(w, x);
    for (o, &bi) in out.iter_mut().zip(b) {
        *o += bi;
    }
    Ok(out)
}

fn matvec<T: Scalar>(w: &Tensor<T>, x: &[T]) -> Vec<T> {
    let rows = w.dim(0);
    let cols = w.dim(1);
    debug_assert_eq!(cols, x.len());
    let data = w.data();
    (0..rows)
        .map(|r| {
            let row = &data[r * cols..(r + 1) * cols];
            row.iter().zip(x).map(|(&wi, &xi)| wi * xi).sum()
        })
        .collect()
}
