use std::rc::Rc;

use crate::error::{shape_err, Error, Result};
use crate::tensor::dense::{self, Dense2D, LayerNormCache};

/// Handle to a value recorded on a [`Tape`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct VarId(usize);

enum Op {
    Leaf,
    /// x ⊗ w + bias row.
    Linear { x: VarId, w: VarId, b: VarId },
    Matmul { a: VarId, b: VarId },
    /// a ⊗ bᵀ.
    MatmulNt { a: VarId, b: VarId },
    Add { a: VarId, b: VarId },
    /// x + a constant table (position embeddings); gradient passes through.
    AddConst { x: VarId },
    ScaleDiv { x: VarId, divisor: f64 },
    MaskFill { x: VarId, mask: Rc<Dense2D> },
    SoftmaxRows { x: VarId },
    /// softmax_rows((q ⊗ kᵀ / divisor) ⊙ M + (1 − M)·eta) as one node. The
    /// scores matrix never hits the tape; backward rebuilds its gradient in a
    /// single sweep and is element-for-element the same arithmetic as the
    /// MatmulNt → ScaleDiv → MaskFill → SoftmaxRows chain.
    MaskedAttention { q: VarId, k: VarId, mask: Rc<Dense2D>, divisor: f64 },
    LayerNorm { x: VarId, gain: VarId, bias: VarId, cache: LayerNormCache },
    Dropout { x: VarId, mask: Option<Vec<f64>> },
    MeanPoolRows { x: VarId },
    ConcatCols { parts: Vec<VarId> },
    /// Scalar −log softmax(logits)[label]; logits are a 1×C row.
    CrossEntropy { logits: VarId, label: usize, probs: Vec<f64> },
}

struct Node {
    value: Dense2D,
    op: Op,
}

/// Reverse-mode gradient tape. Forward calls record one node per operation;
/// `backward` replays the record in reverse, accumulating a gradient for
/// every node reachable from the loss. Single-owner: one tape per recorded
/// forward pass, dropped after its gradients are harvested.
pub struct Tape {
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Tape {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: VarId) -> &Dense2D {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Dense2D, op: Op) -> VarId {
        self.nodes.push(Node { value, op });
        VarId(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Dense2D) -> VarId {
        self.push(value, Op::Leaf)
    }

    /// Bias is a 1×n leaf so its gradient is collected like any other parameter.
    pub fn linear(&mut self, x: VarId, w: VarId, b: VarId) -> Result<VarId> {
        let bias = &self.nodes[b.0].value;
        if bias.rows != 1 {
            return Err(shape_err("linear bias", bias.shape(), (1, bias.cols)));
        }
        let value = dense::linear(
            &self.nodes[x.0].value,
            &self.nodes[w.0].value,
            self.nodes[b.0].value.row(0),
        )?;
        Ok(self.push(value, Op::Linear { x, w, b }))
    }

    pub fn matmul(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let value = dense::matmul(&self.nodes[a.0].value, &self.nodes[b.0].value)?;
        Ok(self.push(value, Op::Matmul { a, b }))
    }

    pub fn matmul_nt(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let value = dense::matmul_nt(&self.nodes[a.0].value, &self.nodes[b.0].value)?;
        Ok(self.push(value, Op::MatmulNt { a, b }))
    }

    pub fn add(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let value = dense::add(&self.nodes[a.0].value, &self.nodes[b.0].value)?;
        Ok(self.push(value, Op::Add { a, b }))
    }

    pub fn add_const(&mut self, x: VarId, table: &Dense2D) -> Result<VarId> {
        let value = dense::add(&self.nodes[x.0].value, table)?;
        Ok(self.push(value, Op::AddConst { x }))
    }

    pub fn scale_div(&mut self, x: VarId, divisor: f64) -> VarId {
        let value = dense::scale_div(&self.nodes[x.0].value, divisor);
        self.push(value, Op::ScaleDiv { x, divisor })
    }

    pub fn mask_fill(&mut self, x: VarId, mask: Rc<Dense2D>, eta: f64) -> Result<VarId> {
        let value = dense::mask_fill(&self.nodes[x.0].value, &mask, eta)?;
        Ok(self.push(value, Op::MaskFill { x, mask }))
    }

    pub fn softmax_rows(&mut self, x: VarId) -> VarId {
        let value = dense::softmax_rows(&self.nodes[x.0].value);
        self.push(value, Op::SoftmaxRows { x })
    }

    /// Masked scaled-dot-product attention weights over q, k.
    pub fn masked_attention(
        &mut self,
        q: VarId,
        k: VarId,
        mask: Rc<Dense2D>,
        divisor: f64,
        eta: f64,
    ) -> Result<VarId> {
        let mut value = dense::matmul_nt(&self.nodes[q.0].value, &self.nodes[k.0].value)?;
        dense::masked_softmax_inplace(&mut value, &mask, divisor, eta)?;
        Ok(self.push(value, Op::MaskedAttention { q, k, mask, divisor }))
    }

    pub fn layer_norm(&mut self, x: VarId, gain: VarId, bias: VarId, eps: f64) -> Result<VarId> {
        let g = &self.nodes[gain.0].value;
        let b = &self.nodes[bias.0].value;
        if g.rows != 1 || b.rows != 1 {
            return Err(shape_err("layer_norm affine", g.shape(), b.shape()));
        }
        let (value, cache) =
            dense::layer_norm(&self.nodes[x.0].value, g.row(0), b.row(0), eps)?;
        Ok(self.push(value, Op::LayerNorm { x, gain, bias, cache }))
    }

    pub fn dropout(
        &mut self,
        x: VarId,
        rate: f64,
        training: bool,
        rng: &mut impl rand::Rng,
    ) -> Result<VarId> {
        let (value, mask) = dense::dropout(&self.nodes[x.0].value, rate, training, rng)?;
        Ok(self.push(value, Op::Dropout { x, mask }))
    }

    /// Output is a 1×cols row.
    pub fn mean_pool_rows(&mut self, x: VarId) -> Result<VarId> {
        let pooled = dense::mean_pool_rows(&self.nodes[x.0].value)?;
        let cols = pooled.len();
        let value = Dense2D::from_vec(1, cols, pooled)?;
        Ok(self.push(value, Op::MeanPoolRows { x }))
    }

    pub fn concat_cols(&mut self, parts: &[VarId]) -> Result<VarId> {
        let blocks: Vec<&Dense2D> = parts.iter().map(|p| &self.nodes[p.0].value).collect();
        let value = dense::concat_cols(&blocks)?;
        Ok(self.push(value, Op::ConcatCols { parts: parts.to_vec() }))
    }

    /// Loss node: 1×1.
    pub fn cross_entropy(&mut self, logits: VarId, label: usize) -> Result<VarId> {
        let lv = &self.nodes[logits.0].value;
        if lv.rows != 1 {
            return Err(shape_err("cross_entropy logits", lv.shape(), (1, lv.cols)));
        }
        let (loss, probs) = dense::cross_entropy(lv.row(0), label)?;
        let value = Dense2D::from_vec(1, 1, vec![loss])?;
        Ok(self.push(value, Op::CrossEntropy { logits, label, probs }))
    }

    /// Runs the backward sweep from `root` (seeded with gradient 1) and
    /// returns per-node gradients; nodes not reachable from the root have none.
    pub fn backward(&self, root: VarId) -> Result<Gradients> {
        let rv = &self.nodes[root.0].value;
        if rv.rows != 1 || rv.cols != 1 {
            return Err(Error::Param(format!(
                "backward root must be a 1x1 scalar, got {}x{}",
                rv.rows, rv.cols
            )));
        }
        let mut grads: Vec<Option<Dense2D>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Dense2D::from_vec(1, 1, vec![1.0])?);

        for idx in (0..=root.0).rev() {
            let Some(gout) = grads[idx].take() else { continue };
            match &self.nodes[idx].op {
                Op::Leaf => {
                    grads[idx] = Some(gout);
                    continue;
                }
                Op::Linear { x, w, b } => {
                    let dx = dense::matmul_nt(&gout, &self.nodes[w.0].value)?;
                    let xt = self.nodes[x.0].value.transpose();
                    let dw = dense::matmul(&xt, &gout)?;
                    let mut db = Dense2D::zeros(1, gout.cols);
                    for r in 0..gout.rows {
                        for (acc, &g) in db.row_mut(0).iter_mut().zip(gout.row(r)) {
                            *acc += g;
                        }
                    }
                    accumulate(&mut grads, *x, dx)?;
                    accumulate(&mut grads, *w, dw)?;
                    accumulate(&mut grads, *b, db)?;
                }
                Op::Matmul { a, b } => {
                    let da = dense::matmul_nt(&gout, &self.nodes[b.0].value)?;
                    let at = self.nodes[a.0].value.transpose();
                    let db = dense::matmul(&at, &gout)?;
                    accumulate(&mut grads, *a, da)?;
                    accumulate(&mut grads, *b, db)?;
                }
                Op::MatmulNt { a, b } => {
                    let da = dense::matmul(&gout, &self.nodes[b.0].value)?;
                    let gt = gout.transpose();
                    let db = dense::matmul(&gt, &self.nodes[a.0].value)?;
                    accumulate(&mut grads, *a, da)?;
                    accumulate(&mut grads, *b, db)?;
                }
                Op::Add { a, b } => {
                    accumulate(&mut grads, *a, gout.clone())?;
                    accumulate(&mut grads, *b, gout)?;
                }
                Op::AddConst { x } => {
                    accumulate(&mut grads, *x, gout)?;
                }
                Op::ScaleDiv { x, divisor } => {
                    accumulate(&mut grads, *x, dense::scale_div(&gout, *divisor))?;
                }
                Op::MaskFill { x, mask } => {
                    let mut dx = gout;
                    for (g, &m) in dx.data.iter_mut().zip(&mask.data) {
                        *g *= m;
                    }
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::SoftmaxRows { x } => {
                    let y = &self.nodes[idx].value;
                    let mut dx = Dense2D::zeros(y.rows, y.cols);
                    for r in 0..y.rows {
                        let yr = y.row(r);
                        let gr = gout.row(r);
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for (d, (&yv, &gv)) in dx.row_mut(r).iter_mut().zip(yr.iter().zip(gr)) {
                            *d = (gv - dot) * yv;
                        }
                    }
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::MaskedAttention { q, k, mask, divisor } => {
                    let y = &self.nodes[idx].value;
                    let mut ds = Dense2D::zeros(y.rows, y.cols);
                    for r in 0..y.rows {
                        let yr = y.row(r);
                        let gr = gout.row(r);
                        let mr = mask.row(r);
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for (j, d) in ds.row_mut(r).iter_mut().enumerate() {
                            *d = (gr[j] - dot) * yr[j] * mr[j] / divisor;
                        }
                    }
                    let dq = dense::matmul(&ds, &self.nodes[k.0].value)?;
                    let st = ds.transpose();
                    let dk = dense::matmul(&st, &self.nodes[q.0].value)?;
                    accumulate(&mut grads, *q, dq)?;
                    accumulate(&mut grads, *k, dk)?;
                }
                Op::LayerNorm { x, gain, bias, cache } => {
                    let g = self.nodes[gain.0].value.row(0);
                    let xhat = &cache.xhat;
                    let n = xhat.cols as f64;
                    let mut dx = Dense2D::zeros(xhat.rows, xhat.cols);
                    let mut dgain = Dense2D::zeros(1, xhat.cols);
                    let mut dbias = Dense2D::zeros(1, xhat.cols);
                    for r in 0..xhat.rows {
                        let xh = xhat.row(r);
                        let go = gout.row(r);
                        let mut sum_dxhat = 0.0;
                        let mut sum_dxhat_xhat = 0.0;
                        for j in 0..xhat.cols {
                            let dxh = go[j] * g[j];
                            sum_dxhat += dxh;
                            sum_dxhat_xhat += dxh * xh[j];
                            dgain.data[j] += go[j] * xh[j];
                            dbias.data[j] += go[j];
                        }
                        let is = cache.inv_std[r];
                        for j in 0..xhat.cols {
                            let dxh = go[j] * g[j];
                            dx.row_mut(r)[j] =
                                (is / n) * (n * dxh - sum_dxhat - xh[j] * sum_dxhat_xhat);
                        }
                    }
                    accumulate(&mut grads, *x, dx)?;
                    accumulate(&mut grads, *gain, dgain)?;
                    accumulate(&mut grads, *bias, dbias)?;
                }
                Op::Dropout { x, mask } => {
                    let mut dx = gout;
                    if let Some(m) = mask {
                        for (g, &s) in dx.data.iter_mut().zip(m) {
                            *g *= s;
                        }
                    }
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::MeanPoolRows { x } => {
                    let xv = &self.nodes[x.0].value;
                    let scale = 1.0 / xv.rows as f64;
                    let mut dx = Dense2D::zeros(xv.rows, xv.cols);
                    for r in 0..xv.rows {
                        for (d, &g) in dx.row_mut(r).iter_mut().zip(gout.row(0)) {
                            *d = g * scale;
                        }
                    }
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::ConcatCols { parts } => {
                    let mut off = 0;
                    for p in parts {
                        let pv = &self.nodes[p.0].value;
                        let mut dp = Dense2D::zeros(pv.rows, pv.cols);
                        for r in 0..pv.rows {
                            dp.row_mut(r)
                                .copy_from_slice(&gout.row(r)[off..off + pv.cols]);
                        }
                        off += pv.cols;
                        accumulate(&mut grads, *p, dp)?;
                    }
                }
                Op::CrossEntropy { logits, label, probs } => {
                    let gl = gout.data[0];
                    let mut dl = Dense2D::zeros(1, probs.len());
                    for (j, (d, &p)) in dl.row_mut(0).iter_mut().zip(probs).enumerate() {
                        *d = gl * (p - if j == *label { 1.0 } else { 0.0 });
                    }
                    accumulate(&mut grads, *logits, dl)?;
                }
            }
        }
        Ok(Gradients { grads })
    }
}

pub struct Gradients {
    grads: Vec<Option<Dense2D>>,
}

impl Gradients {
    /// Gradient of the backward root with respect to `id`; zeros if the node
    /// did not influence the root.
    pub fn take(&mut self, id: VarId, like: &Dense2D) -> Dense2D {
        self.grads[id.0]
            .take()
            .unwrap_or_else(|| Dense2D::zeros(like.rows, like.cols))
    }

    pub fn get(&self, id: VarId) -> Option<&Dense2D> {
        self.grads[id.0].as_ref()
    }
}

fn accumulate(grads: &mut [Option<Dense2D>], id: VarId, delta: Dense2D) -> Result<()> {
    match &mut grads[id.0] {
        Some(existing) => {
            if existing.shape() != delta.shape() {
                return Err(shape_err("grad accumulate", existing.shape(), delta.shape()));
            }
            for (a, b) in existing.data.iter_mut().zip(&delta.data) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(delta),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::fdcheck::{fd_check_scalar_fn, FD_TOLERANCE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn randmat(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Dense2D {
        use rand::Rng;
        Dense2D::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    // Scalar test head: sum every element via mean_pool and a fixed linear map
    // so backward gets a 1x1 root.
    fn pool_to_scalar(tape: &mut Tape, x: VarId) -> VarId {
        let cols = tape.value(x).cols;
        let rows = tape.value(x).rows as f64;
        let pooled = tape.mean_pool_rows(x).unwrap();
        let w = tape.leaf(Dense2D::from_fn(cols, 1, |_, _| rows));
        let b = tape.leaf(Dense2D::zeros(1, 1));
        tape.linear(pooled, w, b).unwrap()
    }

    #[test]
    fn matmul_gradient_matches_fd() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a0 = randmat(3, 4, &mut rng);
            let b0 = randmat(4, 2, &mut rng);
            let run = |a: &Dense2D, b: &Dense2D| {
                let mut tape = Tape::new();
                let av = tape.leaf(a.clone());
                let bv = tape.leaf(b.clone());
                let c = tape.matmul(av, bv).unwrap();
                let s = pool_to_scalar(&mut tape, c);
                (tape, av, bv, s)
            };
            let (tape, av, bv, s) = run(&a0, &b0);
            let mut grads = tape.backward(s).unwrap();
            let ga = grads.take(av, &a0);
            let gb = grads.take(bv, &b0);
            let rel_a = fd_check_scalar_fn(&a0, &ga, |a| {
                let (tape, _, _, s) = run(a, &b0);
                tape.value(s).data[0]
            });
            let rel_b = fd_check_scalar_fn(&b0, &gb, |b| {
                let (tape, _, _, s) = run(&a0, b);
                tape.value(s).data[0]
            });
            assert!(rel_a <= FD_TOLERANCE, "seed {seed}: dA rel err {rel_a}");
            assert!(rel_b <= FD_TOLERANCE, "seed {seed}: dB rel err {rel_b}");
        }
    }

    #[test]
    fn softmax_gradient_matches_fd() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let x0 = randmat(4, 5, &mut rng);
            let run = |x: &Dense2D| {
                let mut tape = Tape::new();
                let xv = tape.leaf(x.clone());
                let y = tape.softmax_rows(xv);
                // Weight rows asymmetrically so the softmax Jacobian is exercised
                // beyond the all-ones direction (where it vanishes).
                let w = tape.leaf(Dense2D::from_fn(5, 1, |r, _| (r + 1) as f64));
                let b = tape.leaf(Dense2D::zeros(1, 1));
                let proj = tape.matmul(y, w).unwrap();
                let s = pool_to_scalar(&mut tape, proj);
                (tape, xv, s)
            };
            let (tape, xv, s) = run(&x0);
            let mut grads = tape.backward(s).unwrap();
            let gx = grads.take(xv, &x0);
            let rel = fd_check_scalar_fn(&x0, &gx, |x| {
                let (tape, _, s) = run(x);
                tape.value(s).data[0]
            });
            assert!(rel <= FD_TOLERANCE, "seed {seed}: rel err {rel}");
        }
    }

    #[test]
    fn layer_norm_gradient_matches_fd() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            let x0 = randmat(3, 6, &mut rng);
            let g0 = randmat(1, 6, &mut rng);
            let b0 = randmat(1, 6, &mut rng);
            let run = |x: &Dense2D, g: &Dense2D, b: &Dense2D| {
                let mut tape = Tape::new();
                let xv = tape.leaf(x.clone());
                let gv = tape.leaf(g.clone());
                let bv = tape.leaf(b.clone());
                let y = tape.layer_norm(xv, gv, bv, 1e-5).unwrap();
                let w = tape.leaf(Dense2D::from_fn(6, 1, |r, _| 0.3 * (r as f64) - 0.7));
                let bias = tape.leaf(Dense2D::zeros(1, 1));
                let proj = tape.matmul(y, w).unwrap();
                let s = pool_to_scalar(&mut tape, proj);
                (tape, xv, gv, bv, s)
            };
            let (tape, xv, gv, bv, s) = run(&x0, &g0, &b0);
            let mut grads = tape.backward(s).unwrap();
            let gx = grads.take(xv, &x0);
            let gg = grads.take(gv, &g0);
            let gb = grads.take(bv, &b0);
            let rel_x = fd_check_scalar_fn(&x0, &gx, |x| {
                let (t, _, _, _, s) = run(x, &g0, &b0);
                t.value(s).data[0]
            });
            let rel_g = fd_check_scalar_fn(&g0, &gg, |g| {
                let (t, _, _, _, s) = run(&x0, g, &b0);
                t.value(s).data[0]
            });
            let rel_b = fd_check_scalar_fn(&b0, &gb, |b| {
                let (t, _, _, _, s) = run(&x0, &g0, b);
                t.value(s).data[0]
            });
            assert!(rel_x <= 1e-5, "seed {seed}: dX rel err {rel_x}");
            assert!(rel_g <= 1e-5, "seed {seed}: dGain rel err {rel_g}");
            assert!(rel_b <= 1e-5, "seed {seed}: dBias rel err {rel_b}");
        }
    }

    #[test]
    fn linear_and_cross_entropy_gradients_match_fd() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
            let x0 = randmat(1, 4, &mut rng);
            let w0 = randmat(4, 3, &mut rng);
            let b0 = randmat(1, 3, &mut rng);
            let loss_of = |x: &Dense2D, w: &Dense2D, b: &Dense2D| {
                let mut tape = Tape::new();
                let xv = tape.leaf(x.clone());
                let wv = tape.leaf(w.clone());
                let bv = tape.leaf(b.clone());
                let logits = tape.linear(xv, wv, bv).unwrap();
                let loss = tape.cross_entropy(logits, 1).unwrap();
                (tape, [xv, wv, bv], loss)
            };
            let (tape, leaves, loss) = loss_of(&x0, &w0, &b0);
            let mut grads = tape.backward(loss).unwrap();
            let gx = grads.take(leaves[0], &x0);
            let gw = grads.take(leaves[1], &w0);
            let gb = grads.take(leaves[2], &b0);
            let rel_x = fd_check_scalar_fn(&x0, &gx, |m| {
                let (t, _, l) = loss_of(m, &w0, &b0);
                t.value(l).data[0]
            });
            let rel_w = fd_check_scalar_fn(&w0, &gw, |m| {
                let (t, _, l) = loss_of(&x0, m, &b0);
                t.value(l).data[0]
            });
            let rel_b = fd_check_scalar_fn(&b0, &gb, |m| {
                let (t, _, l) = loss_of(&x0, &w0, m);
                t.value(l).data[0]
            });
            assert!(rel_x <= FD_TOLERANCE, "seed {seed} x: rel err {rel_x}");
            assert!(rel_w <= FD_TOLERANCE, "seed {seed} w: rel err {rel_w}");
            assert!(rel_b <= FD_TOLERANCE, "seed {seed} b: rel err {rel_b}");
        }
    }

    #[test]
    fn masked_attention_matches_composed_ops_exactly() {
        use rand::Rng;
        const ETA: f64 = -9.0e15;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
            let q0 = randmat(6, 4, &mut rng);
            let k0 = randmat(6, 4, &mut rng);
            let mask = Rc::new(Dense2D::from_fn(6, 6, |i, j| {
                // keep the diagonal so no row softmaxes over eta alone
                if i == j || rng.gen_bool(0.4) { 1.0 } else { 0.0 }
            }));
            let consume = |tape: &mut Tape, w: VarId| {
                let wfix = tape.leaf(Dense2D::from_fn(6, 1, |r, _| 0.5 * r as f64 - 1.2));
                let proj = tape.matmul(w, wfix).unwrap();
                pool_to_scalar(tape, proj)
            };

            let mut composed = Tape::new();
            let (qa, ka) = (composed.leaf(q0.clone()), composed.leaf(k0.clone()));
            let scores = composed.matmul_nt(qa, ka).unwrap();
            let scaled = composed.scale_div(scores, 2.0);
            let filled = composed.mask_fill(scaled, Rc::clone(&mask), ETA).unwrap();
            let wts_a = composed.softmax_rows(filled);
            let root_a = consume(&mut composed, wts_a);

            let mut fused = Tape::new();
            let (qb, kb) = (fused.leaf(q0.clone()), fused.leaf(k0.clone()));
            let wts_b = fused.masked_attention(qb, kb, Rc::clone(&mask), 2.0, ETA).unwrap();
            let root_b = consume(&mut fused, wts_b);

            assert_eq!(composed.value(wts_a).data, fused.value(wts_b).data, "seed {seed}");
            assert_eq!(composed.value(root_a).data, fused.value(root_b).data, "seed {seed}");
            let mut ga = composed.backward(root_a).unwrap();
            let mut gb = fused.backward(root_b).unwrap();
            assert_eq!(ga.take(qa, &q0).data, gb.take(qb, &q0).data, "seed {seed} dq");
            assert_eq!(ga.take(ka, &k0).data, gb.take(kb, &k0).data, "seed {seed} dk");
        }
    }

    #[test]
    fn mask_fill_blocks_gradient_flow() {
        let mut tape = Tape::new();
        let x0 = Dense2D::from_vec(2, 2, vec![0.3, -0.2, 0.5, 0.9]).unwrap();
        let mask = Rc::new(Dense2D::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let xv = tape.leaf(x0.clone());
        let filled = tape.mask_fill(xv, mask, -9.0e15).unwrap();
        let sm = tape.softmax_rows(filled);
        let w = tape.leaf(Dense2D::from_fn(2, 1, |r, _| (r + 1) as f64));
        let b = tape.leaf(Dense2D::zeros(1, 1));
        let proj = tape.matmul(sm, w).unwrap();
        let s = pool_to_scalar(&mut tape, proj);
        let mut grads = tape.backward(s).unwrap();
        let gx = grads.take(xv, &x0);
        assert_eq!(gx.get(0, 1), 0.0);
        assert_eq!(gx.get(1, 0), 0.0);
    }

    #[test]
    fn concat_and_mean_pool_gradients() {
        let mut tape = Tape::new();
        let a0 = Dense2D::from_vec(2, 1, vec![1.0, 2.0]).unwrap();
        let b0 = Dense2D::from_vec(2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let av = tape.leaf(a0.clone());
        let bv = tape.leaf(b0.clone());
        let cat = tape.concat_cols(&[av, bv]).unwrap();
        let pooled = tape.mean_pool_rows(cat).unwrap();
        let w = tape.leaf(Dense2D::from_fn(3, 1, |r, _| (r + 1) as f64));
        let bias = tape.leaf(Dense2D::zeros(1, 1));
        let s = tape.linear(pooled, w, bias).unwrap();
        let mut grads = tape.backward(s).unwrap();
        // d/da of (mean(col0)*1 + mean(col1)*2 + mean(col2)*3): each a element
        // feeds col0's mean, so gradient is 1/2 per element.
        let ga = grads.take(av, &a0);
        assert_eq!(ga.data, vec![0.5, 0.5]);
        let gb = grads.take(bv, &b0);
        assert_eq!(gb.data, vec![1.0, 1.5, 1.0, 1.5]);
    }
}
