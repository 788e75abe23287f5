use std::rc::Rc;

use crate::error::{shape_err, Error, Result};
use crate::graph::AttentionMask;
use crate::tensor::dense::exp_finite;
use crate::tensor::{self, Dense2D, Tape, VarId};

/// Per-head attention hyperparameters.
#[derive(Copy, Clone, Debug)]
pub struct AttentionConfig {
    /// Per-head width.
    pub d: usize,
    /// Head count.
    pub h: usize,
    /// Mask fill value for forbidden edges.
    pub eta: f64,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig { d: 32, h: 8, eta: -9.0e15 }
    }
}

impl AttentionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.h == 0 {
            return Err(Error::Param(format!("attention needs d >= 1 and H >= 1, got d={} H={}", self.d, self.h)));
        }
        if self.eta >= 0.0 {
            return Err(Error::Param(format!("eta must be strongly negative, got {}", self.eta)));
        }
        Ok(())
    }
}

/// One head's key/query/value projections. Biases are optional; a disabled
/// bias is omitted from the parameter set entirely.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HeadParams {
    pub w_k: Dense2D,
    pub w_q: Dense2D,
    pub w_v: Dense2D,
    pub b_k: Option<Dense2D>,
    pub b_q: Option<Dense2D>,
    pub b_v: Option<Dense2D>,
}

impl HeadParams {
    pub fn d_in(&self) -> usize {
        self.w_k.rows
    }

    pub fn d_out(&self) -> usize {
        self.w_k.cols
    }

    pub fn validate(&self) -> Result<()> {
        let (rows, cols) = self.w_k.shape();
        for w in [&self.w_q, &self.w_v] {
            if w.shape() != (rows, cols) {
                return Err(shape_err("head weights", (rows, cols), w.shape()));
            }
        }
        for b in [&self.b_k, &self.b_q, &self.b_v].into_iter().flatten() {
            if b.shape() != (1, cols) {
                return Err(shape_err("head bias", (1, cols), b.shape()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MultiHeadParams {
    pub heads: Vec<HeadParams>,
}

impl MultiHeadParams {
    pub fn validate(&self) -> Result<()> {
        if self.heads.is_empty() {
            return Err(Error::Param("multi-head params need H >= 1".into()));
        }
        let shape = self.heads[0].w_k.shape();
        for h in &self.heads {
            h.validate()?;
            if h.w_k.shape() != shape {
                return Err(shape_err("head widths", shape, h.w_k.shape()));
            }
        }
        Ok(())
    }
}

fn project_one(features: &Dense2D, w: &Dense2D, b: &Option<Dense2D>) -> Result<Dense2D> {
    match b {
        Some(bias) => tensor::linear(features, w, bias.row(0)),
        None => tensor::matmul(features, w),
    }
}

/// Batched projection of node features into this head's key, query, and value
/// matrices, each (T·N x d).
pub fn project_qkv(features: &Dense2D, head: &HeadParams) -> Result<(Dense2D, Dense2D, Dense2D)> {
    if features.cols != head.d_in() {
        return Err(shape_err("project_qkv", features.shape(), head.w_k.shape()));
    }
    let k = project_one(features, &head.w_k, &head.b_k)?;
    let q = project_one(features, &head.w_q, &head.b_q)?;
    let v = project_one(features, &head.w_v, &head.b_v)?;
    Ok((q, k, v))
}

/// Masked batched attention weights: softmax((Q ⊗ Kᵀ / √d) ⊙ M + (1−M)·eta)
/// by rows. Every row sums to 1; entries at mask-0 positions come out ≤ 1e-12.
///
/// Scale, mask, and softmax run as one in-place pass over the score matrix.
/// Each element goes through the same operations in the same order as the
/// composed scale_div → mask_fill → softmax_rows ops, so the result is
/// bit-identical to that pipeline (the gradient tape records it as such).
pub fn masked_weights(
    q: &Dense2D,
    k: &Dense2D,
    mask: &AttentionMask,
    cfg: &AttentionConfig,
) -> Result<Dense2D> {
    if q.shape() != k.shape() || q.cols != cfg.d {
        return Err(shape_err("masked_weights", q.shape(), (k.rows, cfg.d)));
    }
    if q.rows != mask.size {
        return Err(shape_err("masked_weights mask", q.shape(), mask.bits.shape()));
    }
    let scale = (cfg.d as f64).sqrt();
    let mut w = tensor::matmul_nt(q, k)?;
    tensor::masked_softmax_inplace(&mut w, &mask.bits, scale, cfg.eta)?;
    Ok(w)
}

/// The literal per-edge form of the same weights: for each node, iterate only
/// its mask-permitted partners, take scaled dot products, and softmax over
/// that partner set. Forbidden positions stay exactly zero.
pub fn naive_attention_weights(
    q: &Dense2D,
    k: &Dense2D,
    mask: &AttentionMask,
    cfg: &AttentionConfig,
) -> Result<Dense2D> {
    if q.shape() != k.shape() || q.cols != cfg.d {
        return Err(shape_err("naive_attention_weights", q.shape(), (k.rows, cfg.d)));
    }
    if q.rows != mask.size {
        return Err(shape_err("naive_attention_weights mask", q.shape(), mask.bits.shape()));
    }
    let nodes = q.rows;
    let scale = (cfg.d as f64).sqrt();
    let mut weights = Dense2D::zeros(nodes, nodes);
    let mut partners: Vec<usize> = Vec::with_capacity(nodes);
    let mut scores: Vec<f64> = Vec::with_capacity(nodes);
    for a in 0..nodes {
        partners.clear();
        scores.clear();
        let qa = q.row(a);
        let mut max = f64::NEG_INFINITY;
        for b in 0..nodes {
            if !mask.permitted(a, b) {
                continue;
            }
            let kb = k.row(b);
            let mut dot = 0.0f64;
            for t in 0..qa.len() {
                dot = qa[t].mul_add(kb[t], dot);
            }
            let u = dot / scale;
            partners.push(b);
            scores.push(u);
            if u > max {
                max = u;
            }
        }
        let mut denom = 0.0;
        for s in scores.iter_mut() {
            *s = exp_finite(*s - max);
            denom += *s;
        }
        let wrow = weights.row_mut(a);
        for (&b, &e) in partners.iter().zip(scores.iter()) {
            wrow[b] = e / denom;
        }
    }
    Ok(weights)
}

/// Weighted sum of value vectors: weights ⊗ V.
pub fn attend(weights: &Dense2D, v: &Dense2D) -> Result<Dense2D> {
    tensor::matmul(weights, v)
}

/// Full masked multi-head pass: per-head projection, masked weights, attend,
/// then concatenation along the feature axis in head order.
pub fn multi_head(
    features: &Dense2D,
    params: &MultiHeadParams,
    mask: &AttentionMask,
    cfg: &AttentionConfig,
) -> Result<Dense2D> {
    params.validate()?;
    cfg.validate()?;
    let mut outputs = Vec::with_capacity(params.heads.len());
    for head in &params.heads {
        let (q, k, v) = project_qkv(features, head)?;
        let w = masked_weights(&q, &k, mask, cfg)?;
        outputs.push(attend(&w, &v)?);
    }
    let refs: Vec<&Dense2D> = outputs.iter().collect();
    tensor::concat_cols(&refs)
}

/// The per-edge transcription of the whole multi-head pass: per-node
/// projections, per-edge scaled dot products over permitted partners,
/// per-node softmax, and per-edge weighted sums. This is the path the mask
/// formulation replaces; it doubles as the equivalence oracle.
pub fn multi_head_naive(
    features: &Dense2D,
    params: &MultiHeadParams,
    mask: &AttentionMask,
    cfg: &AttentionConfig,
) -> Result<Dense2D> {
    params.validate()?;
    cfg.validate()?;
    let nodes = features.rows;
    if nodes != mask.size {
        return Err(shape_err("multi_head_naive", features.shape(), mask.bits.shape()));
    }
    let d = params.heads[0].d_out();
    if d != cfg.d {
        return Err(Error::Param(format!("head width {d} does not match configured d={}", cfg.d)));
    }
    let scale = (cfg.d as f64).sqrt();
    let h = params.heads.len();
    let mut out = Dense2D::zeros(nodes, h * d);

    let mut q = Dense2D::zeros(nodes, d);
    let mut k = Dense2D::zeros(nodes, d);
    let mut v = Dense2D::zeros(nodes, d);
    let mut partners: Vec<usize> = Vec::with_capacity(nodes);
    let mut alphas: Vec<f64> = Vec::with_capacity(nodes);

    for (hi, head) in params.heads.iter().enumerate() {
        if features.cols != head.d_in() {
            return Err(shape_err("multi_head_naive", features.shape(), head.w_k.shape()));
        }
        // Eq.-style per-node projection: each output coordinate is its own
        // dot product down the feature vector.
        for node in 0..nodes {
            let f = features.row(node);
            for (dst, w, b) in [
                (&mut q, &head.w_q, &head.b_q),
                (&mut k, &head.w_k, &head.b_k),
                (&mut v, &head.w_v, &head.b_v),
            ] {
                let row = dst.row_mut(node);
                for j in 0..d {
                    let mut acc = 0.0f64;
                    for (t, &ft) in f.iter().enumerate() {
                        acc = ft.mul_add(w.get(t, j), acc);
                    }
                    row[j] = match b {
                        Some(bias) => acc + bias.get(0, j),
                        None => acc,
                    };
                }
            }
        }
        // Per-edge scores, per-node softmax over the permitted partner set,
        // then the weighted sum of partner value vectors.
        for a in 0..nodes {
            partners.clear();
            alphas.clear();
            let qa = q.row(a);
            let mut max = f64::NEG_INFINITY;
            for b in 0..nodes {
                if !mask.permitted(a, b) {
                    continue;
                }
                let kb = k.row(b);
                let mut dot = 0.0f64;
                for t in 0..qa.len() {
                    dot = qa[t].mul_add(kb[t], dot);
                }
                let u = dot / scale;
                partners.push(b);
                alphas.push(u);
                if u > max {
                    max = u;
                }
            }
            let mut denom = 0.0;
            for s in alphas.iter_mut() {
                *s = exp_finite(*s - max);
                denom += *s;
            }
            let orow = &mut out.row_mut(a)[hi * d..(hi + 1) * d];
            for (&b, &e) in partners.iter().zip(alphas.iter()) {
                let alpha = e / denom;
                for (o, &vb) in orow.iter_mut().zip(v.row(b)) {
                    *o = alpha.mul_add(vb, *o);
                }
            }
        }
    }
    Ok(out)
}

/// Tape-resident leaf ids for one head's parameters.
#[derive(Copy, Clone, Debug)]
pub struct HeadVars {
    pub w_k: VarId,
    pub w_q: VarId,
    pub w_v: VarId,
    pub b_k: Option<VarId>,
    pub b_q: Option<VarId>,
    pub b_v: Option<VarId>,
}

fn project_one_tape(tape: &mut Tape, x: VarId, w: VarId, b: Option<VarId>) -> Result<VarId> {
    match b {
        Some(bias) => tape.linear(x, w, bias),
        None => tape.matmul(x, w),
    }
}

/// multi_head recorded on a gradient tape; numerically identical to the
/// untaped masked path.
pub fn multi_head_tape(
    tape: &mut Tape,
    features: VarId,
    heads: &[HeadVars],
    mask: &Rc<Dense2D>,
    cfg: &AttentionConfig,
) -> Result<VarId> {
    cfg.validate()?;
    let scale = (cfg.d as f64).sqrt();
    let mut outputs = Vec::with_capacity(heads.len());
    for head in heads {
        let k = project_one_tape(tape, features, head.w_k, head.b_k)?;
        let q = project_one_tape(tape, features, head.w_q, head.b_q)?;
        let v = project_one_tape(tape, features, head.w_v, head.b_v)?;
        let weights = tape.masked_attention(q, k, Rc::clone(mask), scale, cfg.eta)?;
        outputs.push(tape.matmul(weights, v)?);
    }
    tape.concat_cols(&outputs)
}
