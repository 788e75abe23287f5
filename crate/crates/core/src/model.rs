use std::path::Path;
use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attention::{
    multi_head, multi_head_tape, AttentionConfig, HeadParams, HeadVars, MultiHeadParams,
};
use crate::embed::{build_spe, build_tpe, spe_node_rows};
use crate::error::{Error, Result};
use crate::graph::{
    build_full_mask, build_spatial_mask, build_ssg_mask, build_temporal_mask, AttentionMask,
    GraphShape, DEFAULT_HAND_BONES,
};
use crate::tensor::{self, Dense2D, Tape, VarId};

pub const LAYER_NORM_EPS: f64 = 1e-5;
/// Input width: one (x, y, z) coordinate triple per node.
pub const COORD_DIM: usize = 3;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Spatial attention then temporal attention on the fully-connected graph.
    Dgsta,
    /// One attention pass over the whole graph with both embeddings added.
    Gat,
    /// Spatial stage restricted to the sparse skeleton graph.
    Ssg,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Dgsta => "dgsta",
            Variant::Gat => "gat",
            Variant::Ssg => "ssg",
        }
    }
}

/// Architecture hyperparameters with the published defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Joints per frame.
    pub n: usize,
    /// Frames per sequence after sampling.
    pub t: usize,
    /// Width of projected node features entering each attention stage.
    pub feat_dim: usize,
    /// Attention heads per stage.
    pub h: usize,
    /// Per-head width.
    pub d: usize,
    /// Concatenated attention output width (h·d).
    pub attn_out: usize,
    /// Gesture classes: 14 or 28 for the real datasets.
    pub classes: usize,
    pub dropout: f64,
    pub variant: Variant,
    pub temporal_same_joint_only: bool,
    /// Mask fill value.
    pub eta: f64,
    /// Projection biases on the per-head fully-connected layers.
    pub projection_bias: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n: 22,
            t: 8,
            feat_dim: 128,
            h: 8,
            d: 32,
            attn_out: 256,
            classes: 14,
            dropout: 0.2,
            variant: Variant::Dgsta,
            temporal_same_joint_only: false,
            eta: -9.0e15,
            projection_bias: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.attn_out != self.h * self.d {
            return Err(Error::Param(format!(
                "attn_out {} must equal H*d = {}",
                self.attn_out,
                self.h * self.d
            )));
        }
        if self.feat_dim % 2 != 0 || self.feat_dim == 0 {
            return Err(Error::Param(format!(
                "feat_dim must be even and positive for the embeddings, got {}",
                self.feat_dim
            )));
        }
        if self.classes < 2 {
            return Err(Error::Param(format!("need at least 2 classes, got {}", self.classes)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Param(format!("dropout must be in [0,1), got {}", self.dropout)));
        }
        GraphShape::new(self.t, self.n)?;
        Ok(())
    }

    pub fn shape(&self) -> GraphShape {
        GraphShape { t: self.t, n: self.n }
    }

    pub fn attention(&self) -> AttentionConfig {
        AttentionConfig { d: self.d, h: self.h, eta: self.eta }
    }
}

/// Gain/bias pair for one layer-norm site, stored as 1-row matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerNormParams {
    pub gain: Dense2D,
    pub bias: Dense2D,
}

impl LayerNormParams {
    fn identity(width: usize) -> LayerNormParams {
        LayerNormParams {
            gain: Dense2D::from_fn(1, width, |_, _| 1.0),
            bias: Dense2D::zeros(1, width),
        }
    }
}

/// Every learned tensor in the network. The GAT variant has no mid
/// projection or second attention stage, so those fields are absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub input_w: Dense2D,
    pub input_b: Dense2D,
    pub ln1: LayerNormParams,
    pub stage1: MultiHeadParams,
    pub ln2: LayerNormParams,
    pub mid_w: Option<Dense2D>,
    pub mid_b: Option<Dense2D>,
    pub ln3: Option<LayerNormParams>,
    pub stage2: Option<MultiHeadParams>,
    pub ln4: Option<LayerNormParams>,
    pub fc_w: Dense2D,
    pub fc_b: Dense2D,
}

impl ModelParams {
    /// Named views of every learned tensor, in a fixed traversal order shared
    /// by initialization, the optimizer, and the gradient checker.
    pub fn tensors(&self) -> Vec<(String, &Dense2D)> {
        let mut out: Vec<(String, &Dense2D)> = vec![
            ("input.w".into(), &self.input_w),
            ("input.b".into(), &self.input_b),
            ("ln1.gain".into(), &self.ln1.gain),
            ("ln1.bias".into(), &self.ln1.bias),
        ];
        push_heads(&mut out, "stage1", &self.stage1);
        out.push(("ln2.gain".into(), &self.ln2.gain));
        out.push(("ln2.bias".into(), &self.ln2.bias));
        if let (Some(w), Some(b)) = (&self.mid_w, &self.mid_b) {
            out.push(("mid.w".into(), w));
            out.push(("mid.b".into(), b));
        }
        if let Some(ln) = &self.ln3 {
            out.push(("ln3.gain".into(), &ln.gain));
            out.push(("ln3.bias".into(), &ln.bias));
        }
        if let Some(stage2) = &self.stage2 {
            push_heads(&mut out, "stage2", stage2);
        }
        if let Some(ln) = &self.ln4 {
            out.push(("ln4.gain".into(), &ln.gain));
            out.push(("ln4.bias".into(), &ln.bias));
        }
        out.push(("fc.w".into(), &self.fc_w));
        out.push(("fc.b".into(), &self.fc_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Dense2D)> {
        let mut out: Vec<(String, &mut Dense2D)> = vec![
            ("input.w".into(), &mut self.input_w),
            ("input.b".into(), &mut self.input_b),
            ("ln1.gain".into(), &mut self.ln1.gain),
            ("ln1.bias".into(), &mut self.ln1.bias),
        ];
        push_heads_mut(&mut out, "stage1", &mut self.stage1);
        out.push(("ln2.gain".into(), &mut self.ln2.gain));
        out.push(("ln2.bias".into(), &mut self.ln2.bias));
        if let (Some(w), Some(b)) = (&mut self.mid_w, &mut self.mid_b) {
            out.push(("mid.w".into(), w));
            out.push(("mid.b".into(), b));
        }
        if let Some(ln) = &mut self.ln3 {
            out.push(("ln3.gain".into(), &mut ln.gain));
            out.push(("ln3.bias".into(), &mut ln.bias));
        }
        if let Some(stage2) = &mut self.stage2 {
            push_heads_mut(&mut out, "stage2", stage2);
        }
        if let Some(ln) = &mut self.ln4 {
            out.push(("ln4.gain".into(), &mut ln.gain));
            out.push(("ln4.bias".into(), &mut ln.bias));
        }
        out.push(("fc.w".into(), &mut self.fc_w));
        out.push(("fc.b".into(), &mut self.fc_b));
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.data.len()).sum()
    }
}

fn push_heads<'a>(out: &mut Vec<(String, &'a Dense2D)>, prefix: &str, mh: &'a MultiHeadParams) {
    for (i, head) in mh.heads.iter().enumerate() {
        out.push((format!("{prefix}.h{i}.w_k"), &head.w_k));
        out.push((format!("{prefix}.h{i}.w_q"), &head.w_q));
        out.push((format!("{prefix}.h{i}.w_v"), &head.w_v));
        if let Some(b) = &head.b_k {
            out.push((format!("{prefix}.h{i}.b_k"), b));
        }
        if let Some(b) = &head.b_q {
            out.push((format!("{prefix}.h{i}.b_q"), b));
        }
        if let Some(b) = &head.b_v {
            out.push((format!("{prefix}.h{i}.b_v"), b));
        }
    }
}

fn push_heads_mut<'a>(
    out: &mut Vec<(String, &'a mut Dense2D)>,
    prefix: &str,
    mh: &'a mut MultiHeadParams,
) {
    for (i, head) in mh.heads.iter_mut().enumerate() {
        out.push((format!("{prefix}.h{i}.w_k"), &mut head.w_k));
        out.push((format!("{prefix}.h{i}.w_q"), &mut head.w_q));
        out.push((format!("{prefix}.h{i}.w_v"), &mut head.w_v));
        if let Some(b) = &mut head.b_k {
            out.push((format!("{prefix}.h{i}.b_k"), b));
        }
        if let Some(b) = &mut head.b_q {
            out.push((format!("{prefix}.h{i}.b_q"), b));
        }
        if let Some(b) = &mut head.b_v {
            out.push((format!("{prefix}.h{i}.b_v"), b));
        }
    }
}

fn uniform_fan_in(rows: usize, cols: usize, rng: &mut impl Rng) -> Dense2D {
    let bound = (1.0 / rows as f64).sqrt();
    Dense2D::from_fn(rows, cols, |_, _| rng.gen_range(-bound..bound))
}

fn init_heads(cfg: &ModelConfig, d_in: usize, rng: &mut impl Rng) -> MultiHeadParams {
    let heads = (0..cfg.h)
        .map(|_| HeadParams {
            w_k: uniform_fan_in(d_in, cfg.d, rng),
            w_q: uniform_fan_in(d_in, cfg.d, rng),
            w_v: uniform_fan_in(d_in, cfg.d, rng),
            b_k: cfg.projection_bias.then(|| Dense2D::zeros(1, cfg.d)),
            b_q: cfg.projection_bias.then(|| Dense2D::zeros(1, cfg.d)),
            b_v: cfg.projection_bias.then(|| Dense2D::zeros(1, cfg.d)),
        })
        .collect();
    MultiHeadParams { heads }
}

/// Weights uniform in (−√(1/fan_in), √(1/fan_in)), biases zero, layer-norm
/// gain 1 / bias 0. Deterministic for a given generator state.
pub fn init_params(cfg: &ModelConfig, rng: &mut impl Rng) -> Result<ModelParams> {
    cfg.validate()?;
    let two_stage = cfg.variant != Variant::Gat;
    Ok(ModelParams {
        input_w: uniform_fan_in(COORD_DIM, cfg.feat_dim, rng),
        input_b: Dense2D::zeros(1, cfg.feat_dim),
        ln1: LayerNormParams::identity(cfg.feat_dim),
        stage1: init_heads(cfg, cfg.feat_dim, rng),
        ln2: LayerNormParams::identity(cfg.attn_out),
        mid_w: two_stage.then(|| uniform_fan_in(cfg.attn_out, cfg.feat_dim, rng)),
        mid_b: two_stage.then(|| Dense2D::zeros(1, cfg.feat_dim)),
        ln3: two_stage.then(|| LayerNormParams::identity(cfg.feat_dim)),
        stage2: two_stage.then(|| init_heads(cfg, cfg.feat_dim, rng)),
        ln4: two_stage.then(|| LayerNormParams::identity(cfg.attn_out)),
        fc_w: uniform_fan_in(cfg.attn_out, cfg.classes, rng),
        fc_b: Dense2D::zeros(1, cfg.classes),
    })
}

/// Everything the forward pass needs that is a pure function of the config:
/// position-embedding tables expanded to node rows and the attention masks
/// for each stage.
pub struct Constants {
    pub spe_rows: Dense2D,
    pub tpe_rows: Dense2D,
    pub stage1_mask: AttentionMask,
    pub stage2_mask: Option<AttentionMask>,
    stage1_bits: Rc<Dense2D>,
    stage2_bits: Option<Rc<Dense2D>>,
}

impl Constants {
    pub fn build(cfg: &ModelConfig) -> Result<Constants> {
        Self::build_with_bones(cfg, &DEFAULT_HAND_BONES)
    }

    pub fn build_with_bones(cfg: &ModelConfig, bones: &[(usize, usize)]) -> Result<Constants> {
        cfg.validate()?;
        let shape = cfg.shape();
        let spe = build_spe(cfg.n, cfg.feat_dim)?;
        let spe_rows = spe_node_rows(&spe, shape);
        let tpe_rows = build_tpe(shape, cfg.feat_dim)?.values;
        let stage1_mask = match cfg.variant {
            Variant::Dgsta => build_spatial_mask(shape),
            Variant::Ssg => build_ssg_mask(shape, bones)?,
            Variant::Gat => build_full_mask(shape),
        };
        let stage2_mask = match cfg.variant {
            Variant::Gat => None,
            _ => Some(build_temporal_mask(shape, cfg.temporal_same_joint_only)),
        };
        let stage1_bits = Rc::new(stage1_mask.bits.clone());
        let stage2_bits = stage2_mask.as_ref().map(|m| Rc::new(m.bits.clone()));
        Ok(Constants { spe_rows, tpe_rows, stage1_mask, stage2_mask, stage1_bits, stage2_bits })
    }
}

/// Flattens T frames of N (x, y, z) joints into the (T·N x 3) node-feature
/// matrix, in frame-major node order.
pub fn coords_to_features(frames: &[Vec<[f64; 3]>], cfg: &ModelConfig) -> Result<Dense2D> {
    if frames.len() != cfg.t {
        return Err(Error::Param(format!(
            "sequence has {} frames, model expects {}",
            frames.len(),
            cfg.t
        )));
    }
    let mut features = Dense2D::zeros(cfg.t * cfg.n, COORD_DIM);
    for (t, frame) in frames.iter().enumerate() {
        if frame.len() != cfg.n {
            return Err(Error::Param(format!(
                "frame {t} has {} joints, model expects {}",
                frame.len(),
                cfg.n
            )));
        }
        for (i, joint) in frame.iter().enumerate() {
            features.row_mut(t * cfg.n + i).copy_from_slice(joint);
        }
    }
    Ok(features)
}

fn layer_norm_fwd(x: &Dense2D, ln: &LayerNormParams) -> Result<Dense2D> {
    Ok(tensor::layer_norm(x, ln.gain.row(0), ln.bias.row(0), LAYER_NORM_EPS)?.0)
}

fn dropout_fwd(
    x: &Dense2D,
    cfg: &ModelConfig,
    training: bool,
    rng: &mut impl Rng,
) -> Result<Dense2D> {
    Ok(tensor::dropout(x, cfg.dropout, training, rng)?.0)
}

/// Eval/inference forward pass over precomputed constants. Returns the C
/// logits. Deterministic when `training` is false.
pub fn forward_with(
    params: &ModelParams,
    cfg: &ModelConfig,
    consts: &Constants,
    features3: &Dense2D,
    training: bool,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let acfg = cfg.attention();
    let projected = tensor::linear(features3, &params.input_w, params.input_b.row(0))?;
    let x = match cfg.variant {
        Variant::Gat => {
            let with_spe = tensor::add(&projected, &consts.spe_rows)?;
            tensor::add(&with_spe, &consts.tpe_rows)?
        }
        _ => tensor::add(&projected, &consts.spe_rows)?,
    };
    let x = layer_norm_fwd(&x, &params.ln1)?;
    let x = dropout_fwd(&x, cfg, training, rng)?;
    let x = multi_head(&x, &params.stage1, &consts.stage1_mask, &acfg)?;
    let mut x = layer_norm_fwd(&x, &params.ln2)?;

    if cfg.variant != Variant::Gat {
        let (mid_w, mid_b) = (
            params.mid_w.as_ref().expect("two-stage params"),
            params.mid_b.as_ref().expect("two-stage params"),
        );
        let mask2 = consts.stage2_mask.as_ref().expect("two-stage constants");
        let mid = tensor::linear(&x, mid_w, mid_b.row(0))?;
        let with_tpe = tensor::add(&mid, &consts.tpe_rows)?;
        let y = layer_norm_fwd(&with_tpe, params.ln3.as_ref().expect("two-stage params"))?;
        let y = dropout_fwd(&y, cfg, training, rng)?;
        let y = multi_head(&y, params.stage2.as_ref().expect("two-stage params"), mask2, &acfg)?;
        x = layer_norm_fwd(&y, params.ln4.as_ref().expect("two-stage params"))?;
    }

    let pooled = tensor::mean_pool_rows(&x)?;
    let pooled = Dense2D::from_vec(1, pooled.len(), pooled)?;
    let logits = tensor::linear(&pooled, &params.fc_w, params.fc_b.row(0))?;
    Ok(logits.row(0).to_vec())
}

/// Convenience wrapper that builds the constants on the fly.
pub fn forward(
    params: &ModelParams,
    cfg: &ModelConfig,
    frames: &[Vec<[f64; 3]>],
    training: bool,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let consts = Constants::build(cfg)?;
    let features = coords_to_features(frames, cfg)?;
    forward_with(params, cfg, &consts, &features, training, rng)
}

/// Argmax with ties broken toward the lowest class index.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

pub fn predict(
    params: &ModelParams,
    cfg: &ModelConfig,
    consts: &Constants,
    features3: &Dense2D,
) -> Result<usize> {
    use rand::SeedableRng;
    // Dropout is disabled in eval, so this generator is never consulted.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let logits = forward_with(params, cfg, consts, features3, false, &mut rng)?;
    Ok(argmax(&logits))
}

/// Tape-resident leaf ids mirroring ModelParams; used by the training loop
/// and the gradient checker to harvest per-tensor gradients.
pub struct ParamLeaves {
    pub ids: Vec<(String, VarId)>,
    input_w: VarId,
    input_b: VarId,
    ln1: (VarId, VarId),
    stage1: Vec<HeadVars>,
    ln2: (VarId, VarId),
    mid: Option<(VarId, VarId)>,
    ln3: Option<(VarId, VarId)>,
    stage2: Option<Vec<HeadVars>>,
    ln4: Option<(VarId, VarId)>,
    fc_w: VarId,
    fc_b: VarId,
}

fn bind_heads(tape: &mut Tape, prefix: &str, mh: &MultiHeadParams, ids: &mut Vec<(String, VarId)>) -> Vec<HeadVars> {
    mh.heads
        .iter()
        .enumerate()
        .map(|(i, head)| {
            let mut bind = |name: &str, t: &Dense2D| {
                let id = tape.leaf(t.clone());
                ids.push((format!("{prefix}.h{i}.{name}"), id));
                id
            };
            HeadVars {
                w_k: bind("w_k", &head.w_k),
                w_q: bind("w_q", &head.w_q),
                w_v: bind("w_v", &head.w_v),
                b_k: head.b_k.as_ref().map(|b| bind("b_k", b)),
                b_q: head.b_q.as_ref().map(|b| bind("b_q", b)),
                b_v: head.b_v.as_ref().map(|b| bind("b_v", b)),
            }
        })
        .collect()
}

impl ParamLeaves {
    pub fn bind(tape: &mut Tape, params: &ModelParams) -> ParamLeaves {
        let mut ids = Vec::new();
        let bind = |name: &str, t: &Dense2D, ids: &mut Vec<(String, VarId)>, tape: &mut Tape| {
            let id = tape.leaf(t.clone());
            ids.push((name.to_string(), id));
            id
        };
        let input_w = bind("input.w", &params.input_w, &mut ids, tape);
        let input_b = bind("input.b", &params.input_b, &mut ids, tape);
        let ln1 = (
            bind("ln1.gain", &params.ln1.gain, &mut ids, tape),
            bind("ln1.bias", &params.ln1.bias, &mut ids, tape),
        );
        let stage1 = bind_heads(tape, "stage1", &params.stage1, &mut ids);
        let ln2 = (
            bind("ln2.gain", &params.ln2.gain, &mut ids, tape),
            bind("ln2.bias", &params.ln2.bias, &mut ids, tape),
        );
        let mid = match (&params.mid_w, &params.mid_b) {
            (Some(w), Some(b)) => Some((
                bind("mid.w", w, &mut ids, tape),
                bind("mid.b", b, &mut ids, tape),
            )),
            _ => None,
        };
        let ln3 = params.ln3.as_ref().map(|ln| {
            (
                bind("ln3.gain", &ln.gain, &mut ids, tape),
                bind("ln3.bias", &ln.bias, &mut ids, tape),
            )
        });
        let stage2 = params
            .stage2
            .as_ref()
            .map(|mh| bind_heads(tape, "stage2", mh, &mut ids));
        let ln4 = params.ln4.as_ref().map(|ln| {
            (
                bind("ln4.gain", &ln.gain, &mut ids, tape),
                bind("ln4.bias", &ln.bias, &mut ids, tape),
            )
        });
        let fc_w = bind("fc.w", &params.fc_w, &mut ids, tape);
        let fc_b = bind("fc.b", &params.fc_b, &mut ids, tape);
        ParamLeaves {
            ids,
            input_w,
            input_b,
            ln1,
            stage1,
            ln2,
            mid,
            ln3,
            stage2,
            ln4,
            fc_w,
            fc_b,
        }
    }
}

/// Training forward pass recorded on a tape. Returns the logits node (1xC
/// after pooling and the classifier).
pub fn forward_tape(
    tape: &mut Tape,
    leaves: &ParamLeaves,
    cfg: &ModelConfig,
    consts: &Constants,
    features3: &Dense2D,
    training: bool,
    rng: &mut impl Rng,
) -> Result<VarId> {
    let acfg = cfg.attention();
    let f = tape.leaf(features3.clone());
    let projected = tape.linear(f, leaves.input_w, leaves.input_b)?;
    let x = match cfg.variant {
        Variant::Gat => {
            let with_spe = tape.add_const(projected, &consts.spe_rows)?;
            tape.add_const(with_spe, &consts.tpe_rows)?
        }
        _ => tape.add_const(projected, &consts.spe_rows)?,
    };
    let x = tape.layer_norm(x, leaves.ln1.0, leaves.ln1.1, LAYER_NORM_EPS)?;
    let x = tape.dropout(x, cfg.dropout, training, rng)?;
    let x = multi_head_tape(tape, x, &leaves.stage1, &consts.stage1_bits, &acfg)?;
    let mut x = tape.layer_norm(x, leaves.ln2.0, leaves.ln2.1, LAYER_NORM_EPS)?;

    if cfg.variant != Variant::Gat {
        let (mid_w, mid_b) = leaves.mid.expect("two-stage leaves");
        let ln3 = leaves.ln3.expect("two-stage leaves");
        let ln4 = leaves.ln4.expect("two-stage leaves");
        let stage2 = leaves.stage2.as_ref().expect("two-stage leaves");
        let bits2 = consts.stage2_bits.as_ref().expect("two-stage constants");
        let mid = tape.linear(x, mid_w, mid_b)?;
        let with_tpe = tape.add_const(mid, &consts.tpe_rows)?;
        let y = tape.layer_norm(with_tpe, ln3.0, ln3.1, LAYER_NORM_EPS)?;
        let y = tape.dropout(y, cfg.dropout, training, rng)?;
        let y = multi_head_tape(tape, y, stage2, bits2, &acfg)?;
        x = tape.layer_norm(y, ln4.0, ln4.1, LAYER_NORM_EPS)?;
    }

    let pooled = tape.mean_pool_rows(x)?;
    tape.linear(pooled, leaves.fc_w, leaves.fc_b)
}

/// Self-describing checkpoint: config plus every named parameter tensor.
/// serde_json prints f64 values with round-trip precision, so save→load is
/// bit-exact.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub config: ModelConfig,
    pub params: ModelParams,
}

pub const CHECKPOINT_FORMAT: &str = "dgsta-checkpoint-v1";

pub fn save_checkpoint(path: &Path, cfg: &ModelConfig, params: &ModelParams) -> Result<()> {
    let ckpt = Checkpoint {
        format: CHECKPOINT_FORMAT.to_string(),
        config: cfg.clone(),
        params: params.clone(),
    };
    let json = serde_json::to_string(&ckpt)
        .map_err(|e| Error::Checkpoint(format!("serialize failed: {e}")))?;
    std::fs::write(path, json).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelConfig, ModelParams)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let ckpt: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| Error::Checkpoint(format!("{}: parse failed: {e}", path.display())))?;
    if ckpt.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!(
            "{}: unsupported format {:?}",
            path.display(),
            ckpt.format
        )));
    }
    ckpt.config.validate()?;
    Ok((ckpt.config, ckpt.params))
}
