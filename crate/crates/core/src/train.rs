use std::io::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::data::{Dataset, Frame, Split};
use crate::error::{Error, Result};
use crate::model::{
    coords_to_features, init_params, Constants, ModelConfig, ModelParams, ParamLeaves,
};
use crate::seeding;
use crate::tensor::{Dense2D, Tape};

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 0.001, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Bias-corrected Adam accumulators, one moment pair per named tensor in the
/// model's fixed traversal order.
pub struct AdamState {
    pub cfg: AdamConfig,
    pub step: u64,
    names: Vec<String>,
    m: Vec<Dense2D>,
    v: Vec<Dense2D>,
}

impl AdamState {
    pub fn new(params: &ModelParams, cfg: AdamConfig) -> AdamState {
        let tensors = params.tensors();
        AdamState {
            cfg,
            step: 0,
            names: tensors.iter().map(|(n, _)| n.clone()).collect(),
            m: tensors.iter().map(|(_, t)| Dense2D::zeros(t.rows, t.cols)).collect(),
            v: tensors.iter().map(|(_, t)| Dense2D::zeros(t.rows, t.cols)).collect(),
        }
    }
}

/// One Adam update over an explicit named-tensor list. Gradient names and
/// shapes must match the state exactly.
pub fn adam_step_tensors(
    tensors: &mut [(String, &mut Dense2D)],
    grads: &[(String, Dense2D)],
    state: &mut AdamState,
) -> Result<()> {
    if tensors.len() != state.names.len() || grads.len() != state.names.len() {
        return Err(Error::Train(format!(
            "optimizer state covers {} tensors, got {} params and {} gradients",
            state.names.len(),
            tensors.len(),
            grads.len()
        )));
    }
    state.step += 1;
    let t = state.step;
    let AdamConfig { lr, beta1, beta2, eps } = state.cfg;
    let bc1 = 1.0 - beta1.powi(t as i32);
    let bc2 = 1.0 - beta2.powi(t as i32);
    for (i, (name, param)) in tensors.iter_mut().enumerate() {
        let (gname, grad) = &grads[i];
        if gname != name || state.names[i] != *name {
            return Err(Error::Train(format!(
                "gradient order mismatch at {i}: param {name}, grad {gname}, state {}",
                state.names[i]
            )));
        }
        if grad.shape() != param.shape() {
            return Err(Error::Train(format!(
                "gradient shape {:?} does not match parameter {name} {:?}",
                grad.shape(),
                param.shape()
            )));
        }
        if grad.data.iter().any(|g| !g.is_finite()) {
            return Err(Error::Train(format!("non-finite gradient in parameter group {name}")));
        }
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for ((p, g), (mi, vi)) in param
            .data
            .iter_mut()
            .zip(&grad.data)
            .zip(m.data.iter_mut().zip(v.data.iter_mut()))
        {
            *mi = beta1 * *mi + (1.0 - beta1) * g;
            *vi = beta2 * *vi + (1.0 - beta2) * g * g;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

pub fn adam_step(
    params: &mut ModelParams,
    grads: &[(String, Dense2D)],
    state: &mut AdamState,
) -> Result<()> {
    let mut tensors = params.tensors_mut();
    adam_step_tensors(&mut tensors, grads, state)
}

/// Frame indices for compressing a length-`len` recording to `t` frames.
/// Eval: floor(k*len/t). Training: one uniform draw per stratum
/// [k*len/t, (k+1)*len/t); empty strata (len < t) fall back to the floor
/// index, which repeat-pads short recordings.
pub fn sample_indices(
    len: usize,
    t: usize,
    training: bool,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    if len == 0 {
        return Err(Error::Dataset("cannot sample frames from an empty sequence".into()));
    }
    let mut out = Vec::with_capacity(t);
    for k in 0..t {
        let lo = k * len / t;
        let hi = (k + 1) * len / t;
        out.push(if training && hi > lo { rng.gen_range(lo..hi) } else { lo });
    }
    Ok(out)
}

pub fn sample_frames(
    frames: &[Frame],
    t: usize,
    training: bool,
    rng: &mut impl Rng,
) -> Result<Vec<Frame>> {
    let indices = sample_indices(frames.len(), t, training, rng)?;
    Ok(indices.into_iter().map(|i| frames[i].clone()).collect())
}

/// Translates the whole recording so the first frame's palm joint sits at
/// the origin.
pub fn palm_align(frames: &[Frame], palm_joint: usize) -> Result<Vec<Frame>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Dataset("cannot align an empty sequence".into()))?;
    let origin = *first.get(palm_joint).ok_or_else(|| {
        Error::Param(format!(
            "palm joint {palm_joint} out of range for {}-joint frames",
            first.len()
        ))
    })?;
    Ok(frames
        .iter()
        .map(|f| {
            f.iter()
                .map(|j| [j[0] - origin[0], j[1] - origin[1], j[2] - origin[2]])
                .collect()
        })
        .collect())
}

/// Augmentation toggles. `None`/`false`/zero disables the respective part;
/// fully disabled means `augment` is the identity and draws nothing from
/// the generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AugmentConfig {
    /// Global scale factor range, drawn uniformly.
    pub scale: Option<(f64, f64)>,
    /// Global shift extent: each axis drawn from U[-extent, extent].
    pub shift: Option<f64>,
    /// Linearly resample to a length jittered by U[0.8, 1.2].
    pub time_interpolation: bool,
    /// Per-coordinate Gaussian noise; 0 disables.
    pub noise_sigma: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            scale: Some((0.8, 1.2)),
            shift: Some(0.1),
            time_interpolation: true,
            noise_sigma: 0.001,
        }
    }
}

impl AugmentConfig {
    pub fn disabled() -> Self {
        AugmentConfig {
            scale: None,
            shift: None,
            time_interpolation: false,
            noise_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.scale {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::Param(format!("scale range ({lo}, {hi}) must be positive and increasing")));
            }
        }
        if let Some(extent) = self.shift {
            if !(extent > 0.0) {
                return Err(Error::Param(format!("shift extent {extent} must be positive")));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Param(format!("noise sigma {} must be >= 0", self.noise_sigma)));
        }
        Ok(())
    }
}

fn resample_linear(frames: &[Frame], new_len: usize) -> Vec<Frame> {
    let len = frames.len();
    if len == 1 || new_len == len {
        return if new_len == len {
            frames.to_vec()
        } else {
            vec![frames[0].clone(); new_len]
        };
    }
    let mut out = Vec::with_capacity(new_len);
    for k in 0..new_len {
        let pos = k as f64 * (len - 1) as f64 / (new_len - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(len - 1);
        let frac = pos - lo as f64;
        let frame: Frame = frames[lo]
            .iter()
            .zip(&frames[hi])
            .map(|(a, b)| {
                [
                    a[0] + (b[0] - a[0]) * frac,
                    a[1] + (b[1] - a[1]) * frac,
                    a[2] + (b[2] - a[2]) * frac,
                ]
            })
            .collect();
        out.push(frame);
    }
    out
}

/// Applies, in order: global scale, global shift, temporal resampling to a
/// jittered length, additive Gaussian noise.
pub fn augment(frames: &[Frame], cfg: &AugmentConfig, rng: &mut impl Rng) -> Result<Vec<Frame>> {
    cfg.validate()?;
    let mut out: Vec<Frame> = frames.to_vec();
    if let Some((lo, hi)) = cfg.scale {
        let s = rng.gen_range(lo..hi);
        for frame in &mut out {
            for joint in frame.iter_mut() {
                for v in joint.iter_mut() {
                    *v *= s;
                }
            }
        }
    }
    if let Some(extent) = cfg.shift {
        let delta = [
            rng.gen_range(-extent..extent),
            rng.gen_range(-extent..extent),
            rng.gen_range(-extent..extent),
        ];
        for frame in &mut out {
            for joint in frame.iter_mut() {
                for (v, d) in joint.iter_mut().zip(delta) {
                    *v += d;
                }
            }
        }
    }
    if cfg.time_interpolation && out.len() >= 2 {
        let jitter = rng.gen_range(0.8..1.2);
        let new_len = ((out.len() as f64 * jitter).round() as usize).max(2);
        out = resample_linear(&out, new_len);
    }
    if cfg.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_sigma)
            .map_err(|e| Error::Param(format!("noise sigma: {e}")))?;
        for frame in &mut out {
            for joint in frame.iter_mut() {
                for v in joint.iter_mut() {
                    *v += noise.sample(rng);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum FoldSpec {
    Loso { subject: u32 },
    FixedSplit,
}

impl FoldSpec {
    pub fn describe(&self) -> String {
        match self {
            FoldSpec::Loso { subject } => format!("loso:subject={subject}"),
            FoldSpec::FixedSplit => "fixed_split".to_string(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Protocol {
    Loso,
    FixedSplit,
}

/// LOSO: one fold per distinct subject. Fixed: the dataset's own split tags.
pub fn folds_for(dataset: &Dataset, protocol: Protocol) -> Result<Vec<FoldSpec>> {
    match protocol {
        Protocol::Loso => {
            let subjects = dataset.subjects();
            if subjects.len() < 2 {
                return Err(Error::Dataset(format!(
                    "LOSO needs at least 2 subjects, found {}",
                    subjects.len()
                )));
            }
            Ok(subjects.into_iter().map(|subject| FoldSpec::Loso { subject }).collect())
        }
        Protocol::FixedSplit => {
            if dataset.sequences.iter().any(|s| s.split.is_none()) {
                return Err(Error::Dataset(
                    "fixed-split protocol needs split tags on every sequence".into(),
                ));
            }
            Ok(vec![FoldSpec::FixedSplit])
        }
    }
}

/// Train/test row indices for one fold. Both sides are always non-empty.
pub fn fold_membership(dataset: &Dataset, fold: &FoldSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, seq) in dataset.sequences.iter().enumerate() {
        let is_test = match fold {
            FoldSpec::Loso { subject } => seq.subject == *subject,
            FoldSpec::FixedSplit => match seq.split {
                Some(Split::Test) => true,
                Some(Split::Train) => false,
                None => {
                    return Err(Error::Dataset(format!("sequence {i} has no split tag")));
                }
            },
        };
        if is_test {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Dataset(format!(
            "fold {} splits into {} train / {} test sequences",
            fold.describe(),
            train.len(),
            test.len()
        )));
    }
    Ok((train, test))
}

/// Sequence-level preprocessing shared by training and evaluation.
#[derive(Clone, Debug)]
pub struct Preprocess {
    pub palm_joint: usize,
    pub augment: AugmentConfig,
}

impl Default for Preprocess {
    fn default() -> Self {
        Preprocess { palm_joint: crate::data::PALM_JOINT, augment: AugmentConfig::default() }
    }
}

/// palm alignment -> (training only) augmentation -> frame sampling ->
/// flattened (T*N x 3) node features.
pub fn sequence_features(
    frames: &[Frame],
    cfg: &ModelConfig,
    prep: &Preprocess,
    training: bool,
    aug_rng: &mut ChaCha8Rng,
    sample_rng: &mut ChaCha8Rng,
) -> Result<Dense2D> {
    let aligned = palm_align(frames, prep.palm_joint)?;
    let processed = if training {
        augment(&aligned, &prep.augment, aug_rng)?
    } else {
        aligned
    };
    let sampled = sample_frames(&processed, cfg.t, training, sample_rng)?;
    coords_to_features(&sampled, cfg)
}

/// Cross-entropy loss, per-tensor gradients, and the predicted class for one
/// sample.
pub fn sample_gradients(
    params: &ModelParams,
    cfg: &ModelConfig,
    consts: &Constants,
    features: &Dense2D,
    label: usize,
    training: bool,
    dropout_rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<(String, Dense2D)>, usize)> {
    let mut tape = Tape::new();
    let leaves = ParamLeaves::bind(&mut tape, params);
    let logits =
        crate::model::forward_tape(&mut tape, &leaves, cfg, consts, features, training, dropout_rng)?;
    let pred = crate::model::argmax(tape.value(logits).row(0));
    let loss_id = tape.cross_entropy(logits, label)?;
    let loss = tape.value(loss_id).data[0];
    let mut grads = tape.backward(loss_id)?;
    let named = params.tensors();
    let out = leaves
        .ids
        .iter()
        .zip(&named)
        .map(|((name, id), (_, tensor))| (name.clone(), grads.take(*id, tensor)))
        .collect();
    Ok((loss, out, pred))
}

pub struct EpochStats {
    pub mean_loss: f64,
    pub train_acc: f64,
}

/// One optimization pass over pre-assembled batches: per-batch gradients are
/// the mean of per-sample gradients, applied with a single Adam step.
pub fn train_epoch(
    params: &mut ModelParams,
    cfg: &ModelConfig,
    consts: &Constants,
    state: &mut AdamState,
    batches: &[Vec<(Dense2D, usize)>],
    dropout_rng: &mut ChaCha8Rng,
) -> Result<EpochStats> {
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    let mut total = 0usize;
    for (bi, batch) in batches.iter().enumerate() {
        if batch.is_empty() {
            continue;
        }
        let mut acc: Option<Vec<(String, Dense2D)>> = None;
        for (features, label) in batch {
            let (loss, grads, pred) =
                sample_gradients(params, cfg, consts, features, *label, true, dropout_rng)?;
            if !loss.is_finite() {
                return Err(Error::Train(format!("non-finite loss in batch {bi}")));
            }
            loss_sum += loss;
            total += 1;
            if pred == *label {
                correct += 1;
            }
            match &mut acc {
                None => acc = Some(grads),
                Some(acc) => {
                    for ((_, a), (_, g)) in acc.iter_mut().zip(&grads) {
                        for (x, y) in a.data.iter_mut().zip(&g.data) {
                            *x += y;
                        }
                    }
                }
            }
        }
        let mut mean_grads = acc.expect("non-empty batch");
        let scale = 1.0 / batch.len() as f64;
        for (_, g) in &mut mean_grads {
            for v in &mut g.data {
                *v *= scale;
            }
        }
        adam_step(params, &mean_grads, state)?;
    }
    if total == 0 {
        return Err(Error::Train("epoch had no samples".into()));
    }
    Ok(EpochStats { mean_loss: loss_sum / total as f64, train_acc: correct as f64 / total as f64 })
}

/// Seeded shuffle, preprocessing, and size-`batch_size` chunking (the last
/// batch may be smaller).
pub fn assemble_batches(
    dataset: &Dataset,
    indices: &[usize],
    cfg: &ModelConfig,
    prep: &Preprocess,
    batch_size: usize,
    shuffle_rng: &mut ChaCha8Rng,
    aug_rng: &mut ChaCha8Rng,
    sample_rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<(Dense2D, usize)>>> {
    if batch_size == 0 {
        return Err(Error::Param("batch size must be >= 1".into()));
    }
    let mut order: Vec<usize> = indices.to_vec();
    order.shuffle(shuffle_rng);
    let mut batches = Vec::with_capacity(order.len().div_ceil(batch_size));
    for chunk in order.chunks(batch_size) {
        let mut batch = Vec::with_capacity(chunk.len());
        for &i in chunk {
            let seq = &dataset.sequences[i];
            let features = sequence_features(&seq.frames, cfg, prep, true, aug_rng, sample_rng)?;
            batch.push((features, seq.label));
        }
        batches.push(batch);
    }
    Ok(batches)
}

#[derive(Clone, Debug, Serialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// confusion[true_class][predicted_class]
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

/// Deterministic eval-mode accuracy and confusion matrix over the given rows.
pub fn evaluate(
    params: &ModelParams,
    cfg: &ModelConfig,
    consts: &Constants,
    dataset: &Dataset,
    indices: &[usize],
    palm_joint: usize,
) -> Result<Evaluation> {
    if indices.is_empty() {
        return Err(Error::Dataset("evaluation set is empty".into()));
    }
    let mut confusion = vec![vec![0usize; cfg.classes]; cfg.classes];
    let mut correct = 0usize;
    let prep = Preprocess { palm_joint, augment: AugmentConfig::disabled() };
    // Eval never consults these generators; any fixed stream works.
    let mut aug_rng = seeding::stream_rng(0, seeding::AUGMENT, 0);
    let mut sample_rng = seeding::stream_rng(0, seeding::FRAME_SAMPLING, 0);
    for &i in indices {
        let seq = &dataset.sequences[i];
        let features =
            sequence_features(&seq.frames, cfg, &prep, false, &mut aug_rng, &mut sample_rng)?;
        let pred = crate::model::predict(params, cfg, consts, &features)?;
        confusion[seq.label][pred] += 1;
        if pred == seq.label {
            correct += 1;
        }
    }
    Ok(Evaluation {
        accuracy: correct as f64 / indices.len() as f64,
        confusion,
        total: indices.len(),
    })
}

#[derive(Clone, Debug)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub augment: AugmentConfig,
    pub palm_joint: usize,
    pub seed: u64,
    pub fold_id: u64,
    /// Per-epoch metrics file (`epoch,loss,train_acc,test_acc`).
    pub csv_path: Option<PathBuf>,
    /// Best-on-validation checkpoint destination.
    pub checkpoint_path: Option<PathBuf>,
    /// Stop once held-out accuracy reaches this level.
    pub stop_at_test_acc: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 200,
            batch_size: 32,
            lr: AdamConfig::default().lr,
            augment: AugmentConfig::default(),
            palm_joint: crate::data::PALM_JOINT,
            seed: 0,
            fold_id: 0,
            csv_path: None,
            checkpoint_path: None,
            stop_at_test_acc: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FoldOutcome {
    pub fold: String,
    /// Held-out accuracy of the best epoch.
    pub accuracy: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub history: Vec<EpochRecord>,
    pub checkpoint: Option<PathBuf>,
}

fn train_loop(
    dataset: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
    cfg: &ModelConfig,
    opts: &TrainOptions,
    fold_desc: String,
) -> Result<FoldOutcome> {
    cfg.validate()?;
    opts.augment.validate()?;
    if opts.epochs == 0 {
        return Err(Error::Param("training needs epochs >= 1".into()));
    }
    let consts = Constants::build(cfg)?;
    let mut init_rng = seeding::stream_rng(opts.seed, seeding::INIT, opts.fold_id);
    let mut shuffle_rng = seeding::stream_rng(opts.seed, seeding::SHUFFLE, opts.fold_id);
    let mut aug_rng = seeding::stream_rng(opts.seed, seeding::AUGMENT, opts.fold_id);
    let mut dropout_rng = seeding::stream_rng(opts.seed, seeding::DROPOUT, opts.fold_id);
    let mut sample_rng = seeding::stream_rng(opts.seed, seeding::FRAME_SAMPLING, opts.fold_id);

    let mut params = init_params(cfg, &mut init_rng)?;
    let mut state = AdamState::new(&params, AdamConfig { lr: opts.lr, ..AdamConfig::default() });
    let prep = Preprocess { palm_joint: opts.palm_joint, augment: opts.augment.clone() };

    let mut csv = match &opts.csv_path {
        Some(path) => {
            let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            writeln!(file, "epoch,loss,train_acc,test_acc").map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            Some((file, path.clone()))
        }
        None => None,
    };

    let mut history = Vec::with_capacity(opts.epochs);
    let mut best_acc = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut best_params = params.clone();
    for epoch in 1..=opts.epochs {
        let batches = assemble_batches(
            dataset,
            train_idx,
            cfg,
            &prep,
            opts.batch_size,
            &mut shuffle_rng,
            &mut aug_rng,
            &mut sample_rng,
        )?;
        let stats = train_epoch(&mut params, cfg, &consts, &mut state, &batches, &mut dropout_rng)?;
        let eval = evaluate(&params, cfg, &consts, dataset, test_idx, opts.palm_joint)?;
        let record = EpochRecord {
            epoch,
            loss: stats.mean_loss,
            train_acc: stats.train_acc,
            test_acc: eval.accuracy,
        };
        if let Some((file, path)) = &mut csv {
            writeln!(file, "{},{},{},{}", record.epoch, record.loss, record.train_acc, record.test_acc)
                .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        }
        if eval.accuracy > best_acc {
            best_acc = eval.accuracy;
            best_epoch = epoch;
            best_params = params.clone();
        }
        history.push(record);
        if let Some(target) = opts.stop_at_test_acc {
            if eval.accuracy >= target {
                break;
            }
        }
    }

    if let Some(path) = &opts.checkpoint_path {
        crate::model::save_checkpoint(path, cfg, &best_params)?;
    }
    Ok(FoldOutcome {
        fold: fold_desc,
        accuracy: best_acc,
        best_epoch,
        epochs_run: history.len(),
        history,
        checkpoint: opts.checkpoint_path.clone(),
    })
}

/// Trains from a fresh init on the fold's training side and reports held-out
/// accuracy for its best epoch.
pub fn run_fold(
    dataset: &Dataset,
    fold: &FoldSpec,
    cfg: &ModelConfig,
    opts: &TrainOptions,
) -> Result<FoldOutcome> {
    let (train_idx, test_idx) = fold_membership(dataset, fold)?;
    train_loop(dataset, &train_idx, &test_idx, cfg, opts, fold.describe())
}

/// Memorization harness: trains on every sequence and scores eval-mode
/// accuracy on that same training set, so `test_acc` tracks how fast the
/// model commits the data to memory.
pub fn run_overfit(dataset: &Dataset, cfg: &ModelConfig, opts: &TrainOptions) -> Result<FoldOutcome> {
    let all: Vec<usize> = (0..dataset.sequences.len()).collect();
    if all.is_empty() {
        return Err(Error::Dataset("dataset is empty".into()));
    }
    train_loop(dataset, &all, &all, cfg, opts, "overfit".to_string())
}
