//! Frequency-adaptive convolution.
//!
//! A layer holds K basis kernels. For every frequency bin of the input, a
//! small attention network (temporal average pool, per-bin squeeze affine,
//! relu, per-bin excite affine, tempered softmax over K) produces mixture
//! weights, and the layer output at that bin is the attention-weighted sum
//! of the K basis convolution outputs. Mixing the outputs is algebraically
//! identical to convolving with the per-bin mixed kernel; both forms are
//! implemented and checked against each other.
//!
//! The backward pass is analytic through every path (convolutions, softmax,
//! excite, relu, squeeze, temporal mean) and is verified against central
//! finite differences by [`finite_diff_gradcheck`].

use crate::error::{Error, Result};
use crate::ops::{conv2d_backward, conv2d_forward, softmax_tempered};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::Rng;

/// One basis kernel: 3x3 convolution weights `[c_out, c_in, 3, 3]` plus bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Frequency-adaptive convolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FdyConvLayer<T> {
    /// K basis kernels, all `[c_out, c_in, 3, 3]`.
    pub basis: Vec<ConvKernel<T>>,
    /// Per-bin squeeze affine `[c_mid, c_in]`, shared across bins.
    pub squeeze_w: Tensor<T>,
    pub squeeze_b: Tensor<T>,
    /// Per-bin excite affine `[K, c_mid]`, shared across bins.
    pub excite_w: Tensor<T>,
    pub excite_b: Tensor<T>,
    /// Softmax temperature over the K mixture logits.
    pub temperature: T,
}

/// Default softmax temperature.
pub const DEFAULT_TEMPERATURE: f64 = 45.0;
/// Default number of basis kernels.
pub const DEFAULT_BASIS_COUNT: usize = 4;
/// Default squeeze ratio (attention bottleneck = c_in / ratio).
pub const DEFAULT_SQUEEZE_RATIO: usize = 4;

impl<T: Scalar> FdyConvLayer<T> {
    /// Zero-initialized layer (uniform attention, zero output).
    pub fn zeros(c_in: usize, c_out: usize, k: usize, squeeze_ratio: usize, temperature: T) -> Self {
        let c_mid = squeeze_width(c_in, squeeze_ratio);
        FdyConvLayer {
            basis: (0..k)
                .map(|_| ConvKernel {
                    weight: Tensor::zeros(&[c_out, c_in, 3, 3]),
                    bias: Tensor::zeros(&[c_out]),
                })
                .collect(),
            squeeze_w: Tensor::zeros(&[c_mid, c_in]),
            squeeze_b: Tensor::zeros(&[c_mid]),
            excite_w: Tensor::zeros(&[k, c_mid]),
            excite_b: Tensor::zeros(&[k]),
            temperature,
        }
    }

    /// Random initialization: basis kernels and biases i.i.d. uniform in
    /// `+-sqrt(1 / (c_in * 9))`, squeeze uniform in `+-sqrt(1 / c_in)`,
    /// excite zero so an untrained layer starts at uniform attention.
    pub fn new_seeded<R: Rng>(
        c_in: usize,
        c_out: usize,
        k: usize,
        squeeze_ratio: usize,
        temperature: T,
        rng: &mut R,
    ) -> Self {
        let mut layer = Self::zeros(c_in, c_out, k, squeeze_ratio, temperature);
        let bound = T::lit((1.0 / (c_in as f64 * 9.0)).sqrt());
        for kernel in &mut layer.basis {
            kernel.weight = Tensor::random_uniform(kernel.weight.shape(), -bound, bound, rng);
            kernel.bias = Tensor::random_uniform(kernel.bias.shape(), -bound, bound, rng);
        }
        let s_bound = T::lit((1.0 / c_in as f64).sqrt());
        layer.squeeze_w = Tensor::random_uniform(layer.squeeze_w.shape(), -s_bound, s_bound, rng);
        layer
    }

    pub fn basis_count(&self) -> usize {
        self.basis.len()
    }

    pub fn c_in(&self) -> usize {
        self.basis[0].weight.dim(1)
    }

    pub fn c_out(&self) -> usize {
        self.basis[0].weight.dim(0)
    }

    pub fn c_mid(&self) -> usize {
        self.squeeze_w.dim(0)
    }

    fn check(&self, input: &Tensor<T>) -> Result<()> {
        if self.basis.is_empty() {
            return Err(Error::invalid("fdy_conv", "no basis kernels"));
        }
        if self.temperature <= T::zero() {
            return Err(Error::invalid("fdy_conv", "temperature must be > 0"));
        }
        let (c_out, c_in) = (self.c_out(), self.c_in());
        for (i, k) in self.basis.iter().enumerate() {
            if k.weight.shape() != [c_out, c_in, 3, 3] {
                return Err(Error::invalid(
                    "fdy_conv",
                    format!("basis {i} shape {:?}, expected [{c_out}, {c_in}, 3, 3]", k.weight.shape()),
                ));
            }
            if k.bias.shape() != [c_out] {
                return Err(Error::invalid("fdy_conv", format!("basis {i} bias length {}", k.bias.len())));
            }
        }
        if input.rank() != 4 {
            return Err(Error::invalid("fdy_conv", format!("input rank {} != 4", input.rank())));
        }
        if input.dim(1) != c_in {
            return Err(Error::AxisMismatch {
                op: "fdy_conv",
                axis: "input channel",
                expected: c_in,
                actual: input.dim(1),
            });
        }
        if self.squeeze_w.dim(1) != c_in
            || self.squeeze_b.len() != self.c_mid()
            || self.excite_w.shape() != [self.basis_count(), self.c_mid()]
            || self.excite_b.len() != self.basis_count()
        {
            return Err(Error::invalid("fdy_conv", "attention parameter shapes inconsistent"));
        }
        Ok(())
    }
}

fn squeeze_width(c_in: usize, ratio: usize) -> usize {
    (c_in / ratio.max(1)).max(1)
}

/// Mixture weights per `(batch, frequency bin)`: `[batch, K, freq]`, each
/// K-column a simplex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap<T> {
    pub values: Tensor<T>,
}

/// Intermediate activations of the attention net, kept for the backward pass.
struct AttentionTrace<T> {
    /// Temporal mean `[batch, c_in, freq]`.
    pooled: Tensor<T>,
    /// Squeeze pre-activation `[batch, c_mid, freq]`.
    pre: Tensor<T>,
    /// relu(pre).
    hidden: Tensor<T>,
    /// `[batch, K, freq]`.
    attention: Tensor<T>,
}

fn attention_trace<T: Scalar>(input: &Tensor<T>, layer: &FdyConvLayer<T>) -> Result<AttentionTrace<T>> {
    layer.check(input)?;
    let (b_n, c_in, n_f, n_t) = (input.dim(0), input.dim(1), input.dim(2), input.dim(3));
    let (c_mid, k_n) = (layer.c_mid(), layer.basis_count());
    let inv_t = T::one() / T::from_count(n_t);

    let mut pooled = Tensor::zeros(&[b_n, c_in, n_f]);
    for b in 0..b_n {
        for c in 0..c_in {
            for f in 0..n_f {
                let mut acc = T::zero();
                for t in 0..n_t {
                    acc += input.at4(b, c, f, t);
                }
                let off = pooled.off3(b, c, f);
                pooled.data_mut()[off] = acc * inv_t;
            }
        }
    }

    let mut pre = Tensor::zeros(&[b_n, c_mid, n_f]);
    for b in 0..b_n {
        for f in 0..n_f {
            for m in 0..c_mid {
                let mut acc = layer.squeeze_b.data()[m];
                for c in 0..c_in {
                    acc += layer.squeeze_w.at2(m, c) * pooled.at3(b, c, f);
                }
                let off = pre.off3(b, m, f);
                pre.data_mut()[off] = acc;
            }
        }
    }
    let hidden = pre.map(|v| v.max(T::zero()));

    let mut attention = Tensor::zeros(&[b_n, k_n, n_f]);
    let mut logits = vec![T::zero(); k_n];
    for b in 0..b_n {
        for f in 0..n_f {
            for (k, logit) in logits.iter_mut().enumerate() {
                let mut acc = layer.excite_b.data()[k];
                for m in 0..c_mid {
                    acc += layer.excite_w.at2(k, m) * hidden.at3(b, m, f);
                }
                *logit = acc;
            }
            let soft = softmax_tempered(&logits, layer.temperature)?;
            for (k, &a) in soft.iter().enumerate() {
                let off = attention.off3(b, k, f);
                attention.data_mut()[off] = a;
            }
        }
    }

    Ok(AttentionTrace {
        pooled,
        pre,
        hidden,
        attention,
    })
}

/// Per-bin mixture weights for an input batch.
pub fn frequency_attention<T: Scalar>(
    input: &Tensor<T>,
    layer: &FdyConvLayer<T>,
) -> Result<AttentionMap<T>> {
    Ok(AttentionMap {
        values: attention_trace(input, layer)?.attention,
    })
}

/// Forward pass with same padding: `[b, c_out, f, t]` matching the input
/// frequency and time extents. Output rows mix the K basis convolution
/// outputs with the per-bin attention weights.
pub fn fdy_conv_forward<T: Scalar>(input: &Tensor<T>, layer: &FdyConvLayer<T>) -> Result<Tensor<T>> {
    let trace = attention_trace(input, layer)?;
    let conv_outs = basis_convolutions(input, layer)?;
    Ok(mix_outputs(input, layer, &trace.attention, &conv_outs))
}

fn basis_convolutions<T: Scalar>(
    input: &Tensor<T>,
    layer: &FdyConvLayer<T>,
) -> Result<Vec<Tensor<T>>> {
    layer
        .basis
        .iter()
        .map(|k| conv2d_forward(input, &k.weight, &k.bias, (1, 1)))
        .collect()
}

fn mix_outputs<T: Scalar>(
    input: &Tensor<T>,
    layer: &FdyConvLayer<T>,
    attention: &Tensor<T>,
    conv_outs: &[Tensor<T>],
) -> Tensor<T> {
    let (b_n, n_f, n_t) = (input.dim(0), input.dim(2), input.dim(3));
    let c_out = layer.c_out();
    let mut out = Tensor::zeros(&[b_n, c_out, n_f, n_t]);
    for (k, conv) in conv_outs.iter().enumerate() {
        for b in 0..b_n {
            for c in 0..c_out {
                for f in 0..n_f {
                    let a = attention.at3(b, k, f);
                    for t in 0..n_t {
                        let off = out.off4(b, c, f, t);
                        out.data_mut()[off] += a * conv.at4(b, c, f, t);
                    }
                }
            }
        }
    }
    out
}

/// Equivalent formulation: convolve each frequency row with its own mixed
/// kernel `W(b, f) = sum_k att[b, k, f] * W_k` and mixed bias. Used to
/// cross-check [`fdy_conv_forward`]; the two must agree to float tolerance.
pub fn fdy_conv_forward_mixed_kernels<T: Scalar>(
    input: &Tensor<T>,
    layer: &FdyConvLayer<T>,
) -> Result<Tensor<T>> {
    let trace = attention_trace(input, layer)?;
    let att = &trace.attention;
    let (b_n, c_in, n_f, n_t) = (input.dim(0), input.dim(1), input.dim(2), input.dim(3));
    let (c_out, k_n) = (layer.c_out(), layer.basis_count());

    let mut out = Tensor::zeros(&[b_n, c_out, n_f, n_t]);
    let mut mixed_w = Tensor::zeros(&[c_out, c_in, 3, 3]);
    let mut mixed_b = vec![T::zero(); c_out];
    for b in 0..b_n {
        for f in 0..n_f {
            mixed_w.data_mut().fill(T::zero());
            mixed_b.fill(T::zero());
            for k in 0..k_n {
                let a = att.at3(b, k, f);
                for (dst, &src) in mixed_w.data_mut().iter_mut().zip(layer.basis[k].weight.data()) {
                    *dst += a * src;
                }
                for (dst, &src) in mixed_b.iter_mut().zip(layer.basis[k].bias.data()) {
                    *dst += a * src;
                }
            }
            for co in 0..c_out {
                for t in 0..n_t {
                    let mut acc = mixed_b[co];
                    for ci in 0..c_in {
                        for i in 0..3 {
                            let fi = f + i;
                            if fi < 1 || fi > n_f {
                                continue;
                            }
                            for j in 0..3 {
                                let tj = t + j;
                                if tj < 1 || tj > n_t {
                                    continue;
                                }
                                acc += input.at4(b, ci, fi - 1, tj - 1) * mixed_w.at4(co, ci, i, j);
                            }
                        }
                    }
                    let off = out.off4(b, co, f, t);
                    out.data_mut()[off] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of [`fdy_conv_forward`] with respect to the input and every
/// parameter group.
#[derive(Debug, Clone)]
pub struct FdyGradients<T> {
    pub input: Tensor<T>,
    pub basis_weights: Vec<Tensor<T>>,
    pub basis_biases: Vec<Tensor<T>>,
    pub squeeze_w: Tensor<T>,
    pub squeeze_b: Tensor<T>,
    pub excite_w: Tensor<T>,
    pub excite_b: Tensor<T>,
}

/// Analytic backward pass. `grad_out` is the loss gradient at the layer
/// output, shape `[b, c_out, f, t]`.
pub fn fdy_conv_backward<T: Scalar>(
    input: &Tensor<T>,
    layer: &FdyConvLayer<T>,
    grad_out: &Tensor<T>,
) -> Result<FdyGradients<T>> {
    let trace = attention_trace(input, layer)?;
    let (b_n, c_in, n_f, n_t) = (input.dim(0), input.dim(1), input.dim(2), input.dim(3));
    let (c_out, c_mid, k_n) = (layer.c_out(), layer.c_mid(), layer.basis_count());
    if grad_out.shape() != [b_n, c_out, n_f, n_t] {
        return Err(Error::invalid(
            "fdy_conv_backward",
            format!("grad_out shape {:?}, expected [{b_n}, {c_out}, {n_f}, {n_t}]", grad_out.shape()),
        ));
    }
    let conv_outs = basis_convolutions(input, layer)?;
    let att = &trace.attention;

    let mut grad_input = Tensor::zeros(input.shape());
    let mut basis_weights = Vec::with_capacity(k_n);
    let mut basis_biases = Vec::with_capacity(k_n);
    // d(loss)/d(att[b, k, f]) via the mixture, and the conv-path gradients.
    let mut grad_att: Tensor<T> = Tensor::zeros(&[b_n, k_n, n_f]);
    for (k, conv) in conv_outs.iter().enumerate() {
        let mut scaled = grad_out.clone();
        for b in 0..b_n {
            for c in 0..c_out {
                for f in 0..n_f {
                    let a = att.at3(b, k, f);
                    let mut datt = T::zero();
                    for t in 0..n_t {
                        let off = scaled.off4(b, c, f, t);
                        datt += grad_out.at4(b, c, f, t) * conv.at4(b, c, f, t);
                        scaled.data_mut()[off] = grad_out.at4(b, c, f, t) * a;
                    }
                    let go = grad_att.off3(b, k, f);
                    grad_att.data_mut()[go] += datt;
                }
            }
        }
        let (gi, gw, gb) = conv2d_backward(input, &layer.basis[k].weight, &scaled, (1, 1))?;
        for (dst, &src) in grad_input.data_mut().iter_mut().zip(gi.data()) {
            *dst += src;
        }
        basis_weights.push(gw);
        basis_biases.push(gb);
    }

    // Tempered softmax Jacobian: dlogit_k = att_k / tau * (datt_k - sum_j datt_j * att_j).
    let inv_tau = T::one() / layer.temperature;
    let mut grad_logits = Tensor::zeros(&[b_n, k_n, n_f]);
    for b in 0..b_n {
        for f in 0..n_f {
            let mut inner = T::zero();
            for k in 0..k_n {
                inner += grad_att.at3(b, k, f) * att.at3(b, k, f);
            }
            for k in 0..k_n {
                let off = grad_logits.off3(b, k, f);
                grad_logits.data_mut()[off] =
                    att.at3(b, k, f) * inv_tau * (grad_att.at3(b, k, f) - inner);
            }
        }
    }

    // Excite affine.
    let mut grad_excite_w = Tensor::zeros(&[k_n, c_mid]);
    let mut grad_excite_b = Tensor::zeros(&[k_n]);
    let mut grad_hidden = Tensor::zeros(&[b_n, c_mid, n_f]);
    for b in 0..b_n {
        for f in 0..n_f {
            for k in 0..k_n {
                let gl = grad_logits.at3(b, k, f);
                grad_excite_b.data_mut()[k] += gl;
                for m in 0..c_mid {
                    let wo = grad_excite_w.off2(k, m);
                    grad_excite_w.data_mut()[wo] += gl * trace.hidden.at3(b, m, f);
                    let ho = grad_hidden.off3(b, m, f);
                    grad_hidden.data_mut()[ho] += gl * layer.excite_w.at2(k, m);
                }
            }
        }
    }

    // relu mask, then squeeze affine, then the temporal mean.
    let mut grad_squeeze_w = Tensor::zeros(&[c_mid, c_in]);
    let mut grad_squeeze_b = Tensor::zeros(&[c_mid]);
    let inv_t = T::one() / T::from_count(n_t);
    for b in 0..b_n {
        for f in 0..n_f {
            for m in 0..c_mid {
                if trace.pre.at3(b, m, f) <= T::zero() {
                    continue;
                }
                let gp = grad_hidden.at3(b, m, f);
                grad_squeeze_b.data_mut()[m] += gp;
                for c in 0..c_in {
                    let wo = grad_squeeze_w.off2(m, c);
                    grad_squeeze_w.data_mut()[wo] += gp * trace.pooled.at3(b, c, f);
                    // d(pooled)/d(input) distributes the gradient evenly over time.
                    let gpc = gp * layer.squeeze_w.at2(m, c) * inv_t;
                    for t in 0..n_t {
                        let io = grad_input.off4(b, c, f, t);
                        grad_input.data_mut()[io] += gpc;
                    }
                }
            }
        }
    }

    Ok(FdyGradients {
        input: grad_input,
        basis_weights,
        basis_biases,
        squeeze_w: grad_squeeze_w,
        squeeze_b: grad_squeeze_b,
        excite_w: grad_excite_w,
        excite_b: grad_excite_b,
    })
}

/// Scalar reduction applied to the layer output for gradient checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossReduction {
    /// `sum(out^2)`, the default; exercises output-dependent gradients.
    SumOfSquares,
    /// `sum(out)`.
    Sum,
}

impl LossReduction {
    fn value<T: Scalar>(self, out: &Tensor<T>) -> T {
        match self {
            LossReduction::SumOfSquares => out.data().iter().map(|&v| v * v).sum(),
            LossReduction::Sum => out.data().iter().copied().sum(),
        }
    }

    fn grad<T: Scalar>(self, out: &Tensor<T>) -> Tensor<T> {
        match self {
            LossReduction::SumOfSquares => out.map(|v| v + v),
            LossReduction::Sum => Tensor::full(out.shape(), T::one()),
        }
    }
}

/// Per-parameter-group outcome of a finite-difference check.
#[derive(Debug, Clone)]
pub struct GroupReport {
    pub group: String,
    /// Elementwise max of `|a - n| / max(|a|, |n|, 1e-8)`.
    pub max_rel_err: f64,
    /// Flat index of the worst element.
    pub worst_index: usize,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub groups: Vec<GroupReport>,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.groups.iter().map(|g| g.max_rel_err).fold(0.0, f64::max)
    }
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for g in &self.groups {
            writeln!(
                f,
                "{:<16} max rel err {:>12.4e} (worst at {}) {}",
                g.group,
                g.max_rel_err,
                g.worst_index,
                if g.max_rel_err < self.tolerance { "ok" } else { "FAIL" }
            )?;
        }
        write!(f, "overall: {}", if self.passed { "pass" } else { "FAIL" })
    }
}

/// Compare [`fdy_conv_backward`] against central finite differences of the
/// forward pass under `loss`, perturbing every element of every parameter
/// group by `+-h`. Meant to run in f64; f32 cannot separate truncation from
/// round-off at useful tolerances.
pub fn finite_diff_gradcheck<T: Scalar>(
    layer: &FdyConvLayer<T>,
    input: &Tensor<T>,
    loss: LossReduction,
    h: T,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let out = fdy_conv_forward(input, layer)?;
    let grad_out = loss.grad(&out);
    let analytic = fdy_conv_backward(input, layer, &grad_out)?;

    let eval = |layer: &FdyConvLayer<T>, input: &Tensor<T>| -> Result<T> {
        Ok(loss.value(&fdy_conv_forward(input, layer)?))
    };

    let mut groups: Vec<GroupReport> = Vec::new();
    let mut check =
        |name: String, analytic_grad: &Tensor<T>, numeric: &mut dyn FnMut(usize, T) -> Result<T>| -> Result<()> {
            let mut max_rel = 0.0f64;
            let mut worst = 0usize;
            for idx in 0..analytic_grad.len() {
                let plus = numeric(idx, h)?;
                let minus = numeric(idx, -h)?;
                let num = (plus - minus) / (h + h);
                let ana = analytic_grad.data()[idx];
                let (ana_f, num_f) = (
                    ana.to_f64().ok_or_else(|| Error::invalid("gradcheck", format!("non-finite analytic gradient in {name}[{idx}]")))?,
                    num.to_f64().ok_or_else(|| Error::invalid("gradcheck", format!("non-finite numeric gradient in {name}[{idx}]")))?,
                );
                if !ana_f.is_finite() || !num_f.is_finite() {
                    return Err(Error::invalid(
                        "gradcheck",
                        format!("non-finite gradient in {name}[{idx}]: analytic {ana_f}, numeric {num_f}"),
                    ));
                }
                let rel = (ana_f - num_f).abs() / ana_f.abs().max(num_f.abs()).max(1e-8);
                if rel > max_rel {
                    max_rel = rel;
                    worst = idx;
                }
            }
            groups.push(GroupReport {
                group: name,
                max_rel_err: max_rel,
                worst_index: worst,
            });
            Ok(())
        };

    check("input".to_string(), &analytic.input, &mut |idx, d| {
        let mut x = input.clone();
        x.data_mut()[idx] += d;
        eval(layer, &x)
    })?;

    for k in 0..layer.basis_count() {
        check(format!("basis_kernels.{k}"), &analytic.basis_weights[k], &mut |idx, d| {
            let mut l = layer.clone();
            l.basis[k].weight.data_mut()[idx] += d;
            eval(&l, input)
        })?;
        check(format!("basis_bias.{k}"), &analytic.basis_biases[k], &mut |idx, d| {
            let mut l = layer.clone();
            l.basis[k].bias.data_mut()[idx] += d;
            eval(&l, input)
        })?;
    }

    check("squeeze_w".to_string(), &analytic.squeeze_w, &mut |idx, d| {
        let mut l = layer.clone();
        l.squeeze_w.data_mut()[idx] += d;
        eval(&l, input)
    })?;
    check("squeeze_b".to_string(), &analytic.squeeze_b, &mut |idx, d| {
        let mut l = layer.clone();
        l.squeeze_b.data_mut()[idx] += d;
        eval(&l, input)
    })?;
    check("excite_w".to_string(), &analytic.excite_w, &mut |idx, d| {
        let mut l = layer.clone();
        l.excite_w.data_mut()[idx] += d;
        eval(&l, input)
    })?;
    check("excite_b".to_string(), &analytic.excite_b, &mut |idx, d| {
        let mut l = layer.clone();
        l.excite_b.data_mut()[idx] += d;
        eval(&l, input)
    })?;

    let passed = groups.iter().all(|g| g.max_rel_err < tolerance);
    Ok(GradCheckReport {
        groups,
        tolerance,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::rng_from_seed;
    use rand::Rng;

    fn random_layer(c_in: usize, c_out: usize, k: usize, seed: u64) -> FdyConvLayer<f64> {
        let mut rng = rng_from_seed(seed);
        let mut layer = FdyConvLayer::new_seeded(c_in, c_out, k, 4, 45.0, &mut rng);
        // Seeded init leaves excite at zero; perturb everything for tests
        // that need a non-degenerate attention path.
        layer.excite_w = Tensor::random_uniform(layer.excite_w.shape(), -1.0, 1.0, &mut rng);
        layer.excite_b = Tensor::random_uniform(layer.excite_b.shape(), -1.0, 1.0, &mut rng);
        layer.squeeze_b = Tensor::random_uniform(layer.squeeze_b.shape(), -0.5, 0.5, &mut rng);
        layer
    }

    #[test]
    fn zero_excite_gives_uniform_attention() {
        let mut rng = rng_from_seed(1);
        let layer = FdyConvLayer::<f64>::new_seeded(4, 3, 4, 4, 45.0, &mut rng);
        let input = Tensor::random_uniform(&[2, 4, 5, 6], -1.0, 1.0, &mut rng);
        let att = frequency_attention(&input, &layer).unwrap();
        for &v in att.values.data() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_depends_only_on_pooled_features() {
        let mut rng = rng_from_seed(2);
        let layer = random_layer(3, 2, 4, 3);
        // Two frequency rows with identical temporal means.
        let mut input = Tensor::<f64>::zeros(&[1, 3, 2, 4]);
        for c in 0..3 {
            let vals: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean = vals.iter().sum::<f64>() / 4.0;
            for t in 0..4 {
                let o0 = input.off4(0, c, 0, t);
                input.data_mut()[o0] = vals[t];
                // Different values, same mean: reverse order.
                let o1 = input.off4(0, c, 1, t);
                input.data_mut()[o1] = 2.0 * mean - vals[t];
            }
        }
        let att = frequency_attention(&input, &layer).unwrap();
        for k in 0..4 {
            assert!((att.values.at3(0, k, 0) - att.values.at3(0, k, 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_columns_are_simplex_vectors() {
        let mut rng = rng_from_seed(4);
        let layer = random_layer(4, 2, 4, 5);
        let input = Tensor::random_uniform(&[2, 4, 6, 5], -1.0, 1.0, &mut rng);
        let att = frequency_attention(&input, &layer).unwrap();
        for b in 0..2 {
            for f in 0..6 {
                let sum: f64 = (0..4).map(|k| att.values.at3(b, k, f)).sum();
                assert!((sum - 1.0).abs() < 1e-6);
                assert!((0..4).all(|k| att.values.at3(b, k, f) >= 0.0));
            }
        }
    }

    #[test]
    fn huge_temperature_flattens_attention() {
        let mut rng = rng_from_seed(6);
        let mut layer = random_layer(4, 2, 4, 7);
        let input = Tensor::random_uniform(&[1, 4, 8, 5], -2.0, 2.0, &mut rng);

        layer.temperature = 45.0;
        let sharp = frequency_attention(&input, &layer).unwrap();
        layer.temperature = 1e9;
        let flat = frequency_attention(&input, &layer).unwrap();

        let deviation = |att: &AttentionMap<f64>| {
            att.values
                .data()
                .iter()
                .map(|&v| (v - 0.25).abs())
                .fold(0.0f64, f64::max)
        };
        assert!(deviation(&flat) < 1e-3);
        assert!(deviation(&sharp) > deviation(&flat));
    }

    #[test]
    fn raising_temperature_contracts_toward_uniform() {
        let mut rng = rng_from_seed(8);
        let layer = random_layer(4, 2, 4, 9);
        let input = Tensor::random_uniform(&[1, 4, 3, 4], -2.0, 2.0, &mut rng);
        let mut last = f64::INFINITY;
        for exp in 0..10 {
            let mut l = layer.clone();
            l.temperature = 2f64.powi(exp);
            let att = frequency_attention(&input, &l).unwrap();
            let dev = att
                .values
                .data()
                .iter()
                .map(|&v| (v - 0.25).abs())
                .fold(0.0f64, f64::max);
            assert!(dev <= last + 1e-12, "deviation increased at tau=2^{exp}");
            last = dev;
        }
    }

    #[test]
    fn single_basis_reduces_to_static_convolution() {
        let mut rng = rng_from_seed(10);
        let layer = random_layer(3, 2, 1, 11);
        let input = Tensor::random_uniform(&[2, 3, 5, 4], -1.0, 1.0, &mut rng);
        let fdy = fdy_conv_forward(&input, &layer).unwrap();
        let plain =
            crate::ops::conv2d_forward(&input, &layer.basis[0].weight, &layer.basis[0].bias, (1, 1))
                .unwrap();
        assert!(fdy.max_abs_diff(&plain) <= 1e-6);
    }

    #[test]
    fn uniform_attention_equals_mean_kernel() {
        let mut rng = rng_from_seed(12);
        // Zero excite: exact uniform attention.
        let layer = FdyConvLayer::<f64>::new_seeded(3, 4, 4, 4, 45.0, &mut rng);
        let input = Tensor::random_uniform(&[1, 3, 6, 5], -1.0, 1.0, &mut rng);
        let fdy = fdy_conv_forward(&input, &layer).unwrap();

        let mut mean_w = Tensor::<f64>::zeros(&[4, 3, 3, 3]);
        let mut mean_b = Tensor::<f64>::zeros(&[4]);
        for k in &layer.basis {
            for (dst, &src) in mean_w.data_mut().iter_mut().zip(k.weight.data()) {
                *dst += src / 4.0;
            }
            for (dst, &src) in mean_b.data_mut().iter_mut().zip(k.bias.data()) {
                *dst += src / 4.0;
            }
        }
        let mean_conv = crate::ops::conv2d_forward(&input, &mean_w, &mean_b, (1, 1)).unwrap();
        assert!(fdy.max_abs_diff(&mean_conv) <= 1e-5);
    }

    #[test]
    fn forward_matches_per_bin_mixed_kernel_oracle() {
        let mut rng = rng_from_seed(14);
        let layer = random_layer(2, 3, 4, 15);
        let input = Tensor::random_uniform(&[1, 2, 6, 5], -1.0, 1.0, &mut rng);
        let a = fdy_conv_forward(&input, &layer).unwrap();
        let b = fdy_conv_forward_mixed_kernels(&input, &layer).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-5, "mix-outputs vs mix-kernels: {}", a.max_abs_diff(&b));
    }

    #[test]
    fn permuting_bases_with_excite_rows_is_invariant() {
        let mut rng = rng_from_seed(16);
        let layer = random_layer(3, 2, 4, 17);
        let input = Tensor::random_uniform(&[1, 3, 4, 4], -1.0, 1.0, &mut rng);
        let base = fdy_conv_forward(&input, &layer).unwrap();

        let perm = [2usize, 0, 3, 1];
        let mut permuted = layer.clone();
        permuted.basis = perm.iter().map(|&k| layer.basis[k].clone()).collect();
        let c_mid = layer.c_mid();
        for (row, &k) in perm.iter().enumerate() {
            for m in 0..c_mid {
                let off = permuted.excite_w.off2(row, m);
                permuted.excite_w.data_mut()[off] = layer.excite_w.at2(k, m);
            }
            permuted.excite_b.data_mut()[row] = layer.excite_b.data()[k];
        }
        let swapped = fdy_conv_forward(&input, &permuted).unwrap();
        assert!(base.max_abs_diff(&swapped) < 1e-12);
    }

    #[test]
    fn attention_is_constant_along_time() {
        let mut rng = rng_from_seed(18);
        let layer = random_layer(3, 2, 4, 19);
        let input = Tensor::random_uniform(&[1, 3, 4, 5], -1.0, 1.0, &mut rng);
        // Replicate along time: [.., 10] with the same per-frame content.
        let mut doubled = Tensor::<f64>::zeros(&[1, 3, 4, 10]);
        for c in 0..3 {
            for f in 0..4 {
                for t in 0..10 {
                    let off = doubled.off4(0, c, f, t);
                    doubled.data_mut()[off] = input.at4(0, c, f, t % 5);
                }
            }
        }
        let a = frequency_attention(&input, &layer).unwrap();
        let b = frequency_attention(&doubled, &layer).unwrap();
        assert!(a.values.max_abs_diff(&b.values) < 1e-12);
    }

    #[test]
    fn backward_zero_grad_out_is_zero() {
        let mut rng = rng_from_seed(20);
        let layer = random_layer(2, 2, 4, 21);
        let input = Tensor::random_uniform(&[1, 2, 4, 4], -1.0, 1.0, &mut rng);
        let grads = fdy_conv_backward(&input, &layer, &Tensor::zeros(&[1, 2, 4, 4])).unwrap();
        assert!(grads.input.data().iter().all(|&v| v == 0.0));
        assert!(grads.basis_weights.iter().all(|g| g.data().iter().all(|&v| v == 0.0)));
        assert!(grads.squeeze_w.data().iter().all(|&v| v == 0.0));
        assert!(grads.excite_w.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_basis_backward_reduces_to_plain_conv() {
        let mut rng = rng_from_seed(22);
        let layer = random_layer(3, 2, 1, 23);
        let input = Tensor::random_uniform(&[1, 3, 4, 5], -1.0, 1.0, &mut rng);
        let grad_out = Tensor::random_uniform(&[1, 2, 4, 5], -1.0, 1.0, &mut rng);

        let grads = fdy_conv_backward(&input, &layer, &grad_out).unwrap();
        let (gi, gw, gb) =
            crate::ops::conv2d_backward(&input, &layer.basis[0].weight, &grad_out, (1, 1)).unwrap();

        // Softmax over a single logit is constant, so the attention path
        // carries no gradient.
        assert!(grads.excite_w.data().iter().all(|&v| v.abs() < 1e-12));
        assert!(grads.squeeze_w.data().iter().all(|&v| v.abs() < 1e-12));
        assert!(grads.input.max_abs_diff(&gi) < 1e-12);
        assert!(grads.basis_weights[0].max_abs_diff(&gw) < 1e-12);
        assert!(grads.basis_biases[0].max_abs_diff(&gb) < 1e-12);
    }

    #[test]
    fn gradcheck_zero_layer_on_zero_input_passes() {
        let layer = FdyConvLayer::<f64>::zeros(2, 2, 4, 4, 45.0);
        let input = Tensor::zeros(&[1, 2, 3, 3]);
        let report =
            finite_diff_gradcheck(&layer, &input, LossReduction::SumOfSquares, 1e-4, 1e-4).unwrap();
        assert!(report.passed, "{report}");
    }

    #[test]
    fn gradcheck_random_layer_passes() {
        let mut rng = rng_from_seed(24);
        let layer = random_layer(4, 3, 4, 25);
        let input = Tensor::random_uniform(&[1, 4, 8, 6], -1.0, 1.0, &mut rng);
        let report =
            finite_diff_gradcheck(&layer, &input, LossReduction::SumOfSquares, 1e-4, 1e-4).unwrap();
        assert!(report.passed, "{report}");
    }

    #[test]
    fn gradcheck_zero_tolerance_fails() {
        let mut rng = rng_from_seed(26);
        let layer = random_layer(2, 2, 4, 27);
        let input = Tensor::random_uniform(&[1, 2, 4, 4], -1.0, 1.0, &mut rng);
        let report =
            finite_diff_gradcheck(&layer, &input, LossReduction::SumOfSquares, 1e-4, 0.0).unwrap();
        assert!(!report.passed);
    }
}
