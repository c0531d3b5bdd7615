//! CRNN forward pass: a CNN stack whose first block uses a static 3x3
//! convolution and the remaining blocks frequency-adaptive convolutions,
//! followed by two bidirectional GRU layers and two heads. The strong head
//! emits per-frame class probabilities; the weak head pools them into
//! clip-level probabilities with a softmax attention over either the class
//! or the time axis.
//!
//! Block order inside the CNN stack: convolution, batch norm, context
//! gating, dropout (identity at inference), 2-D average pooling.
//!
//! Weights live in a flat name-to-tensor map so the on-disk container, the
//! teacher EMA update and random initialization all share one representation.

use crate::error::{Error, Result};
use crate::fdy::{fdy_conv_forward, ConvKernel, FdyConvLayer};
use crate::ops::{affine, avg_pool2d, batch_norm_inference, conv2d_forward, softmax_tempered, GruCell};
use crate::scalar::{sigmoid, Scalar};
use crate::tensor::Tensor;
use rand::Rng;
use std::collections::BTreeMap;

/// Axis the weak-head attention softmax runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttentionDim {
    /// Softmax across the class axis, per frame.
    Class,
    /// Softmax across the time axis, per class.
    Time,
}

impl std::str::FromStr for AttentionDim {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "class" => Ok(AttentionDim::Class),
            "time" => Ok(AttentionDim::Time),
            other => Err(format!("unknown attention dim `{other}` (class|time)")),
        }
    }
}

impl std::fmt::Display for AttentionDim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AttentionDim::Class => "class",
            AttentionDim::Time => "time",
        })
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    /// Output channels per CNN block.
    pub channels: Vec<usize>,
    /// Pooling window per block as (time, frequency).
    pub pooling: Vec<(usize, usize)>,
    /// Dropout rate; inference treats dropout as identity.
    pub dropout: f64,
    /// GRU hidden width per direction.
    pub gru_hidden: usize,
    pub n_classes: usize,
    pub attention_dim: AttentionDim,
    /// Mel bins expected at the input.
    pub n_mels: usize,
    /// Basis kernel count for the frequency-adaptive blocks.
    pub basis_count: usize,
    /// Attention softmax temperature for those blocks.
    pub temperature: f64,
    pub squeeze_ratio: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            channels: vec![16, 32, 64, 128, 128, 128, 128],
            pooling: vec![(2, 2), (2, 2), (1, 2), (1, 2), (1, 2), (1, 2), (1, 2)],
            dropout: 0.5,
            gru_hidden: 128,
            n_classes: 10,
            attention_dim: AttentionDim::Class,
            n_mels: 128,
            basis_count: 4,
            temperature: 45.0,
            squeeze_ratio: 4,
        }
    }
}

impl ModelConfig {
    pub fn n_blocks(&self) -> usize {
        self.channels.len()
    }

    /// Product of the per-block time poolings.
    pub fn time_pool_factor(&self) -> usize {
        self.pooling.iter().map(|&(t, _)| t).product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.channels.len() != self.pooling.len() {
            return Err(Error::invalid(
                "model_config",
                format!("{} channel entries vs {} pooling entries", self.channels.len(), self.pooling.len()),
            ));
        }
        let freq_product: usize = self.pooling.iter().map(|&(_, f)| f).product();
        if freq_product != self.n_mels {
            return Err(Error::invalid(
                "model_config",
                format!("frequency poolings multiply to {freq_product}, must collapse {} mel bins to 1", self.n_mels),
            ));
        }
        if self.gru_hidden == 0 || self.n_classes == 0 || self.basis_count == 0 {
            return Err(Error::invalid("model_config", "widths must be positive"));
        }
        if self.temperature <= 0.0 {
            return Err(Error::invalid("model_config", "temperature must be > 0"));
        }
        Ok(())
    }

    fn block_c_in(&self, block: usize) -> usize {
        if block == 0 {
            1
        } else {
            self.channels[block - 1]
        }
    }
}

/// Per-frame and clip-level class probabilities for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePredictions<T> {
    /// `[t_frames, n_classes]`, entries in [0, 1].
    pub strong: Tensor<T>,
    /// `[n_classes]`, entries in [0, 1].
    pub weak: Tensor<T>,
    /// Seconds per output frame (0.064 under the default configs).
    pub frame_duration_s: f64,
}

impl<T: Scalar> FramePredictions<T> {
    pub fn n_frames(&self) -> usize {
        self.strong.dim(0)
    }

    pub fn n_classes(&self) -> usize {
        self.strong.dim(1)
    }
}

/// Flat named parameter map. Names are unique; iteration is name-ordered,
/// which fixes the serialization layout.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelWeights<T> {
    tensors: BTreeMap<String, Tensor<T>>,
}

impl<T: Scalar> ModelWeights<T> {
    pub fn new() -> Self {
        ModelWeights {
            tensors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> Result<()> {
        let name = name.into();
        if self.tensors.contains_key(&name) {
            return Err(Error::invalid("weights", format!("duplicate parameter `{name}`")));
        }
        self.tensors.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::invalid("weights", format!("missing parameter `{name}`")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor<T>)> {
        self.tensors.iter()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn cast<U: Scalar>(&self) -> ModelWeights<U> {
        ModelWeights {
            tensors: self
                .tensors
                .iter()
                .map(|(k, v)| (k.clone(), v.cast()))
                .collect(),
        }
    }

    /// Randomly initialized weights for a config: convolution-style uniform
    /// fans for kernels and recurrent matrices, identity batch-norm
    /// statistics, zero excite weights so frequency attention starts
    /// uniform.
    pub fn random<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let mut w = ModelWeights::new();
        let uniform = |shape: &[usize], bound: f64, rng: &mut R| {
            Tensor::random_uniform(shape, -T::lit(bound), T::lit(bound), rng)
        };

        for i in 0..cfg.n_blocks() {
            let c_in = cfg.block_c_in(i);
            let c_out = cfg.channels[i];
            let kb = (1.0 / (c_in as f64 * 9.0)).sqrt();
            if i == 0 {
                w.insert(format!("cnn.{i}.conv.weight"), uniform(&[c_out, c_in, 3, 3], kb, rng))?;
                w.insert(format!("cnn.{i}.conv.bias"), uniform(&[c_out], kb, rng))?;
            } else {
                let layer = FdyConvLayer::<T>::new_seeded(
                    c_in,
                    c_out,
                    cfg.basis_count,
                    cfg.squeeze_ratio,
                    T::lit(cfg.temperature),
                    rng,
                );
                insert_fdy(&mut w, i, &layer)?;
            }
            w.insert(format!("cnn.{i}.bn.mean"), Tensor::zeros(&[c_out]))?;
            w.insert(format!("cnn.{i}.bn.var"), Tensor::full(&[c_out], T::one()))?;
            w.insert(format!("cnn.{i}.bn.gamma"), Tensor::full(&[c_out], T::one()))?;
            w.insert(format!("cnn.{i}.bn.beta"), Tensor::zeros(&[c_out]))?;
            let gb = (1.0 / c_out as f64).sqrt();
            w.insert(format!("cnn.{i}.gate.weight"), uniform(&[c_out, c_out], gb, rng))?;
            w.insert(format!("cnn.{i}.gate.bias"), Tensor::zeros(&[c_out]))?;
        }

        let feat = *cfg.channels.last().unwrap();
        let h = cfg.gru_hidden;
        for layer in 0..2 {
            let input = if layer == 0 { feat } else { 2 * h };
            let hb = (1.0 / h as f64).sqrt();
            for dir in ["fwd", "bwd"] {
                for gate in ["update", "reset", "cand"] {
                    let base = format!("gru.{layer}.{dir}.{gate}");
                    w.insert(format!("{base}.w"), uniform(&[h, input], hb, rng))?;
                    w.insert(format!("{base}.u"), uniform(&[h, h], hb, rng))?;
                    if gate == "cand" {
                        w.insert(format!("{base}.b_in"), uniform(&[h], hb, rng))?;
                        w.insert(format!("{base}.b_hid"), uniform(&[h], hb, rng))?;
                    } else {
                        w.insert(format!("{base}.b"), uniform(&[h], hb, rng))?;
                    }
                }
            }
        }

        let head_in = 2 * h;
        let hb = (1.0 / head_in as f64).sqrt();
        w.insert("head.strong.weight", uniform(&[cfg.n_classes, head_in], hb, rng))?;
        w.insert("head.strong.bias", uniform(&[cfg.n_classes], hb, rng))?;
        w.insert("head.weak_att.weight", uniform(&[cfg.n_classes, head_in], hb, rng))?;
        w.insert("head.weak_att.bias", uniform(&[cfg.n_classes], hb, rng))?;
        Ok(w)
    }

    /// All-zero parameter set with identity batch-norm statistics.
    pub fn zeros(cfg: &ModelConfig) -> Result<Self> {
        // Draw a random set for its name/shape layout, then zero it.
        let mut rng = crate::augment::rng_from_seed(0);
        let mut w = Self::random(cfg, &mut rng)?;
        let keep_one: Vec<String> = w
            .tensors
            .keys()
            .filter(|k| k.ends_with("bn.var") || k.ends_with("bn.gamma"))
            .cloned()
            .collect();
        for (name, t) in w.tensors.iter_mut() {
            if keep_one.contains(name) {
                *t = Tensor::full(t.shape(), T::one());
            } else {
                *t = Tensor::zeros(t.shape());
            }
        }
        Ok(w)
    }
}

fn insert_fdy<T: Scalar>(w: &mut ModelWeights<T>, block: usize, layer: &FdyConvLayer<T>) -> Result<()> {
    for (k, kernel) in layer.basis.iter().enumerate() {
        w.insert(format!("cnn.{block}.fdy.basis.{k}.weight"), kernel.weight.clone())?;
        w.insert(format!("cnn.{block}.fdy.basis.{k}.bias"), kernel.bias.clone())?;
    }
    w.insert(format!("cnn.{block}.fdy.squeeze.weight"), layer.squeeze_w.clone())?;
    w.insert(format!("cnn.{block}.fdy.squeeze.bias"), layer.squeeze_b.clone())?;
    w.insert(format!("cnn.{block}.fdy.excite.weight"), layer.excite_w.clone())?;
    w.insert(format!("cnn.{block}.fdy.excite.bias"), layer.excite_b.clone())?;
    Ok(())
}

fn fdy_layer<T: Scalar>(w: &ModelWeights<T>, cfg: &ModelConfig, block: usize) -> Result<FdyConvLayer<T>> {
    let basis = (0..cfg.basis_count)
        .map(|k| {
            Ok(ConvKernel {
                weight: w.get(&format!("cnn.{block}.fdy.basis.{k}.weight"))?.clone(),
                bias: w.get(&format!("cnn.{block}.fdy.basis.{k}.bias"))?.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FdyConvLayer {
        basis,
        squeeze_w: w.get(&format!("cnn.{block}.fdy.squeeze.weight"))?.clone(),
        squeeze_b: w.get(&format!("cnn.{block}.fdy.squeeze.bias"))?.clone(),
        excite_w: w.get(&format!("cnn.{block}.fdy.excite.weight"))?.clone(),
        excite_b: w.get(&format!("cnn.{block}.fdy.excite.bias"))?.clone(),
        temperature: T::lit(cfg.temperature),
    })
}

fn gru_cell<T: Scalar>(w: &ModelWeights<T>, layer: usize, dir: &str) -> Result<GruCell<T>> {
    let g = |gate: &str, part: &str| w.get(&format!("gru.{layer}.{dir}.{gate}.{part}")).cloned();
    Ok(GruCell {
        w_update: g("update", "w")?,
        u_update: g("update", "u")?,
        b_update: g("update", "b")?,
        w_reset: g("reset", "w")?,
        u_reset: g("reset", "u")?,
        b_reset: g("reset", "b")?,
        w_cand: g("cand", "w")?,
        u_cand: g("cand", "u")?,
        b_cand_input: g("cand", "b_in")?,
        b_cand_hidden: g("cand", "b_hid")?,
    })
}

/// Channelwise context gate: `y = u .* sigmoid(G u + g)` applied at every
/// `(frequency, time)` location.
fn context_gate<T: Scalar>(x: &Tensor<T>, gate_w: &Tensor<T>, gate_b: &Tensor<T>) -> Result<Tensor<T>> {
    let (b_n, c_n, n_f, n_t) = (x.dim(0), x.dim(1), x.dim(2), x.dim(3));
    crate::tensor::expect_axis("context_gate", "channel", c_n, gate_w.dim(0))?;
    crate::tensor::expect_axis("context_gate", "channel", c_n, gate_w.dim(1))?;
    crate::tensor::expect_axis("context_gate", "channel", c_n, gate_b.len())?;

    let mut out = x.clone();
    let mut u = vec![T::zero(); c_n];
    for b in 0..b_n {
        for f in 0..n_f {
            for t in 0..n_t {
                for (c, slot) in u.iter_mut().enumerate() {
                    *slot = x.at4(b, c, f, t);
                }
                for c in 0..c_n {
                    let mut acc = gate_b.data()[c];
                    for (c2, &v) in u.iter().enumerate() {
                        acc += gate_w.at2(c, c2) * v;
                    }
                    let off = out.off4(b, c, f, t);
                    out.data_mut()[off] = u[c] * sigmoid(acc);
                }
            }
        }
    }
    Ok(out)
}

/// Run the CNN stack on a `[batch, 1, n_mels, t]` input. Output is
/// `[batch, channels.last(), 1, t / time_pool_factor]` under a config whose
/// frequency poolings collapse the mel axis.
pub fn cnn_stack_forward<T: Scalar>(
    x: &Tensor<T>,
    weights: &ModelWeights<T>,
    cfg: &ModelConfig,
) -> Result<Tensor<T>> {
    cfg.validate()?;
    if x.rank() != 4 || x.dim(1) != 1 {
        return Err(Error::invalid(
            "cnn_stack",
            format!("expected [batch, 1, n_mels, t] input, got {:?}", x.shape()),
        ));
    }
    if x.dim(2) != cfg.n_mels {
        return Err(Error::AxisMismatch {
            op: "cnn_stack",
            axis: "mel",
            expected: cfg.n_mels,
            actual: x.dim(2),
        });
    }

    let block_err = |i: usize, e: Error| Error::invalid("cnn_stack", format!("block {i}: {e}"));
    let mut cur = x.clone();
    for i in 0..cfg.n_blocks() {
        if cur.dim(1) != cfg.block_c_in(i) {
            return Err(Error::AxisMismatch {
                op: "cnn_stack",
                axis: "channel",
                expected: cfg.block_c_in(i),
                actual: cur.dim(1),
            });
        }
        cur = if i == 0 {
            let kw = weights.get(&format!("cnn.{i}.conv.weight"))?;
            let kb = weights.get(&format!("cnn.{i}.conv.bias"))?;
            conv2d_forward(&cur, kw, kb, (1, 1)).map_err(|e| block_err(i, e))?
        } else {
            let layer = fdy_layer(weights, cfg, i)?;
            fdy_conv_forward(&cur, &layer).map_err(|e| block_err(i, e))?
        };
        cur = batch_norm_inference(
            &cur,
            weights.get(&format!("cnn.{i}.bn.mean"))?.data(),
            weights.get(&format!("cnn.{i}.bn.var"))?.data(),
            weights.get(&format!("cnn.{i}.bn.gamma"))?.data(),
            weights.get(&format!("cnn.{i}.bn.beta"))?.data(),
            T::lit(1e-5),
        )
        .map_err(|e| block_err(i, e))?;
        cur = context_gate(
            &cur,
            weights.get(&format!("cnn.{i}.gate.weight"))?,
            weights.get(&format!("cnn.{i}.gate.bias"))?,
        )
        .map_err(|e| block_err(i, e))?;
        // Dropout is identity at inference.
        let (pool_t, pool_f) = cfg.pooling[i];
        cur = avg_pool2d(&cur, (pool_f, pool_t)).map_err(|e| block_err(i, e))?;
    }
    Ok(cur)
}

fn gru_direction<T: Scalar>(seq: &Tensor<T>, cell: &GruCell<T>, reverse: bool) -> Result<Vec<Vec<T>>> {
    let n_t = seq.dim(0);
    let dim = seq.dim(1);
    let mut h = vec![T::zero(); cell.hidden_dim()];
    let mut out = vec![Vec::new(); n_t];
    let mut x = vec![T::zero(); dim];
    for step in 0..n_t {
        let t = if reverse { n_t - 1 - step } else { step };
        for (c, slot) in x.iter_mut().enumerate() {
            *slot = seq.at2(t, c);
        }
        h = cell.forward(&x, &h)?;
        out[t] = h.clone();
    }
    Ok(out)
}

/// Two stacked bidirectional GRU layers over a `[t, features]` sequence.
/// Each layer concatenates its forward and backward passes; hidden states
/// start at zero. Output is `[t, 2 * gru_hidden]`.
pub fn bigru_forward<T: Scalar>(seq: &Tensor<T>, weights: &ModelWeights<T>) -> Result<Tensor<T>> {
    if seq.rank() != 2 {
        return Err(Error::invalid("bigru", "expected [t, features] input"));
    }
    let mut cur = seq.clone();
    for layer in 0..2 {
        let fwd_cell = gru_cell(weights, layer, "fwd")?;
        let bwd_cell = gru_cell(weights, layer, "bwd")?;
        let fwd = gru_direction(&cur, &fwd_cell, false)?;
        let bwd = gru_direction(&cur, &bwd_cell, true)?;
        let h = fwd_cell.hidden_dim();
        let n_t = cur.dim(0);
        let mut next = Tensor::zeros(&[n_t, 2 * h]);
        for t in 0..n_t {
            for k in 0..h {
                let off = next.off2(t, k);
                next.data_mut()[off] = fwd[t][k];
                let off = next.off2(t, h + k);
                next.data_mut()[off] = bwd[t][k];
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Frame-wise affine plus logistic sigmoid: `[t, features]` to `[t, classes]`.
pub fn strong_head<T: Scalar>(features: &Tensor<T>, weights: &ModelWeights<T>) -> Result<Tensor<T>> {
    head_affine(features, weights, "head.strong", true)
}

/// Frame-wise attention logits for the weak head (no nonlinearity).
pub fn weak_attention_logits<T: Scalar>(
    features: &Tensor<T>,
    weights: &ModelWeights<T>,
) -> Result<Tensor<T>> {
    head_affine(features, weights, "head.weak_att", false)
}

fn head_affine<T: Scalar>(
    features: &Tensor<T>,
    weights: &ModelWeights<T>,
    base: &str,
    squash: bool,
) -> Result<Tensor<T>> {
    let w = weights.get(&format!("{base}.weight"))?;
    let b = weights.get(&format!("{base}.bias"))?;
    let n_t = features.dim(0);
    let dim = features.dim(1);
    let mut out = Tensor::zeros(&[n_t, w.dim(0)]);
    let mut x = vec![T::zero(); dim];
    for t in 0..n_t {
        for (c, slot) in x.iter_mut().enumerate() {
            *slot = features.at2(t, c);
        }
        let row = affine(&x, w, b.data())?;
        for (c, &v) in row.iter().enumerate() {
            let off = out.off2(t, c);
            out.data_mut()[off] = if squash { sigmoid(v) } else { v };
        }
    }
    Ok(out)
}

/// Pool strong predictions into clip-level probabilities.
///
/// The attention is a softmax of `att_logits` over the chosen axis, clamped
/// to `[1e-7, 1]`; the weak probability per class is the attention-weighted
/// mean of the strong column: `sum_t strong * att / sum_t att`.
pub fn weak_head<T: Scalar>(
    strong: &Tensor<T>,
    att_logits: &Tensor<T>,
    dim: AttentionDim,
) -> Result<Tensor<T>> {
    if strong.shape() != att_logits.shape() {
        return Err(Error::invalid(
            "weak_head",
            format!("strong {:?} vs attention {:?}", strong.shape(), att_logits.shape()),
        ));
    }
    let (n_t, n_c) = (strong.dim(0), strong.dim(1));
    let clamp_lo = T::lit(1e-7);

    let mut att = Tensor::zeros(&[n_t, n_c]);
    match dim {
        AttentionDim::Class => {
            for t in 0..n_t {
                let logits: Vec<T> = (0..n_c).map(|c| att_logits.at2(t, c)).collect();
                let soft = softmax_tempered(&logits, T::one())?;
                for (c, &a) in soft.iter().enumerate() {
                    let off = att.off2(t, c);
                    att.data_mut()[off] = a.max(clamp_lo).min(T::one());
                }
            }
        }
        AttentionDim::Time => {
            for c in 0..n_c {
                let logits: Vec<T> = (0..n_t).map(|t| att_logits.at2(t, c)).collect();
                let soft = softmax_tempered(&logits, T::one())?;
                for (t, &a) in soft.iter().enumerate() {
                    let off = att.off2(t, c);
                    att.data_mut()[off] = a.max(clamp_lo).min(T::one());
                }
            }
        }
    }

    let mut weak = Tensor::zeros(&[n_c]);
    for c in 0..n_c {
        let mut num = T::zero();
        let mut den = T::zero();
        for t in 0..n_t {
            num += strong.at2(t, c) * att.at2(t, c);
            den += att.at2(t, c);
        }
        weak.data_mut()[c] = num / den;
    }
    Ok(weak)
}

/// Full forward pass over a normalized log-mel batch `[batch, n_mels, t]`.
/// `frame_hop_s` is the input frame spacing; output frames are that times
/// the configured time pooling.
pub fn model_forward<T: Scalar>(
    batch: &Tensor<T>,
    weights: &ModelWeights<T>,
    cfg: &ModelConfig,
    frame_hop_s: f64,
) -> Result<Vec<FramePredictions<T>>> {
    if batch.rank() != 3 {
        return Err(Error::invalid("model_forward", "expected [batch, n_mels, t] input"));
    }
    let (b_n, n_mels, n_t) = (batch.dim(0), batch.dim(1), batch.dim(2));
    let with_channel = batch.reshape(&[b_n, 1, n_mels, n_t])?;
    let features = cnn_stack_forward(&with_channel, weights, cfg)?;
    let t_out = features.dim(3);
    let feat_c = features.dim(1);
    let frame_duration_s = frame_hop_s * cfg.time_pool_factor() as f64;

    let mut preds = Vec::with_capacity(b_n);
    for b in 0..b_n {
        let mut seq = Tensor::zeros(&[t_out, feat_c]);
        for t in 0..t_out {
            for c in 0..feat_c {
                let off = seq.off2(t, c);
                seq.data_mut()[off] = features.at4(b, c, 0, t);
            }
        }
        let rnn = bigru_forward(&seq, weights)?;
        let strong = strong_head(&rnn, weights)?;
        let att_logits = weak_attention_logits(&rnn, weights)?;
        let weak = weak_head(&strong, &att_logits, cfg.attention_dim)?;
        preds.push(FramePredictions {
            strong,
            weak,
            frame_duration_s,
        });
    }
    Ok(preds)
}

/// Exponential moving average of the student into the teacher:
/// `theta_t <- m * theta_t + (1 - m) * theta_s`.
pub fn mean_teacher_update<T: Scalar>(
    teacher: &ModelWeights<T>,
    student: &ModelWeights<T>,
    momentum: T,
) -> Result<ModelWeights<T>> {
    if momentum < T::zero() || momentum > T::one() {
        return Err(Error::invalid("mean_teacher", format!("momentum {momentum} outside [0, 1]")));
    }
    if teacher.len() != student.len() {
        return Err(Error::invalid(
            "mean_teacher",
            format!("{} teacher parameters vs {} student", teacher.len(), student.len()),
        ));
    }
    let mut out = ModelWeights::new();
    for (name, t_tensor) in teacher.iter() {
        let s_tensor = student
            .get(name)
            .map_err(|_| Error::invalid("mean_teacher", format!("student missing `{name}`")))?;
        if t_tensor.shape() != s_tensor.shape() {
            return Err(Error::invalid(
                "mean_teacher",
                format!("`{name}` shapes {:?} vs {:?}", t_tensor.shape(), s_tensor.shape()),
            ));
        }
        let blended = Tensor::new(
            t_tensor.shape(),
            t_tensor
                .data()
                .iter()
                .zip(s_tensor.data())
                .map(|(&t, &s)| momentum * t + (T::one() - momentum) * s)
                .collect(),
        )?;
        out.insert(name.clone(), blended)?;
    }
    Ok(out)
}

/// Default EMA momentum for the teacher model.
pub const DEFAULT_TEACHER_MOMENTUM: f64 = 0.999;
