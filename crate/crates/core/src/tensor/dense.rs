use crate::error::{shape_err, Error, Result};
use serde::{Deserialize, Serialize};

/// Dense row-major 2-D array of f64. The only tensor type in the crate;
/// every matrix-valued quantity (features, projections, attention weights,
/// masks) lives in one of these.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense2D {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Dense2D {
    pub fn zeros(rows: usize, cols: usize) -> Dense2D {
        Dense2D { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Dense2D> {
        if data.len() != rows * cols {
            return Err(Error::Param(format!(
                "data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Dense2D { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Dense2D {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Dense2D { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn transpose(&self) -> Dense2D {
        let mut out = Dense2D::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// One RB×W output block: out[i0+r][j0+u] = Σ_k a[i0+r][k]·b[k][j0+u].
/// The accumulator block lives in registers across the whole k sweep; RB·W/8
/// independent fma chains keep the vector units busy. Each output element
/// still accumulates its products over ascending k, so the result is
/// bit-identical to a per-element fma-accumulated dot product.
#[inline]
fn mm_block<const RB: usize, const W: usize>(
    a: &[f64],
    kdim: usize,
    i0: usize,
    b: &[f64],
    n: usize,
    j0: usize,
    out: &mut [f64],
) {
    let mut acc = [[0.0f64; W]; RB];
    for k in 0..kdim {
        let brow = &b[k * n + j0..k * n + j0 + W];
        for r in 0..RB {
            let aik = a[(i0 + r) * kdim + k];
            for u in 0..W {
                acc[r][u] = aik.mul_add(brow[u], acc[r][u]);
            }
        }
    }
    for r in 0..RB {
        let row0 = (i0 + r) * n + j0;
        out[row0..row0 + W].copy_from_slice(&acc[r]);
    }
}

/// All column tiles of `RB` consecutive output rows.
#[inline]
fn mm_rows<const RB: usize>(a: &[f64], kdim: usize, i0: usize, b: &[f64], n: usize, out: &mut [f64]) {
    let mut j0 = 0;
    while j0 + 16 <= n {
        mm_block::<RB, 16>(a, kdim, i0, b, n, j0, out);
        j0 += 16;
    }
    if j0 + 8 <= n {
        mm_block::<RB, 8>(a, kdim, i0, b, n, j0, out);
        j0 += 8;
    }
    if j0 < n {
        for r in 0..RB {
            let arow = &a[(i0 + r) * kdim..(i0 + r + 1) * kdim];
            let orow = &mut out[(i0 + r) * n..(i0 + r + 1) * n];
            for (k, &aik) in arow.iter().enumerate() {
                let brow = &b[k * n..(k + 1) * n];
                for j in j0..n {
                    orow[j] = aik.mul_add(brow[j], orow[j]);
                }
            }
        }
    }
}

/// Matrix product a ⊗ b with a fixed accumulation order: every output
/// element fma-accumulates a[i][k]·b[k][j] over ascending k.
pub fn matmul(a: &Dense2D, b: &Dense2D) -> Result<Dense2D> {
    if a.cols != b.rows {
        return Err(shape_err("matmul", a.shape(), b.shape()));
    }
    let (m, kdim, n) = (a.rows, a.cols, b.cols);
    let mut out = vec![0.0f64; m * n];
    let mut i0 = 0;
    while i0 + 4 <= m {
        mm_rows::<4>(&a.data, kdim, i0, &b.data, n, &mut out);
        i0 += 4;
    }
    while i0 < m {
        mm_rows::<1>(&a.data, kdim, i0, &b.data, n, &mut out);
        i0 += 1;
    }
    Ok(Dense2D { rows: m, cols: n, data: out })
}

/// a ⊗ bᵀ. Materializes bᵀ and reuses the matmul kernel; per-element
/// accumulation order is the same ascending-k sweep.
pub fn matmul_nt(a: &Dense2D, b: &Dense2D) -> Result<Dense2D> {
    if a.cols != b.cols {
        return Err(shape_err("matmul_nt", a.shape(), b.shape()));
    }
    matmul(a, &b.transpose())
}

pub fn add(a: &Dense2D, b: &Dense2D) -> Result<Dense2D> {
    if a.shape() != b.shape() {
        return Err(shape_err("add", a.shape(), b.shape()));
    }
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect();
    Ok(Dense2D { rows: a.rows, cols: a.cols, data })
}

/// x ⊗ w + broadcast bias row.
pub fn linear(x: &Dense2D, w: &Dense2D, b: &[f64]) -> Result<Dense2D> {
    if b.len() != w.cols {
        return Err(Error::Param(format!(
            "bias length {} does not match weight cols {}",
            b.len(),
            w.cols
        )));
    }
    let mut out = matmul(x, w)?;
    for r in 0..out.rows {
        let row = out.row_mut(r);
        for (v, bj) in row.iter_mut().zip(b) {
            *v += bj;
        }
    }
    Ok(out)
}

/// Adds a constant table row-wise: out[r] = x[r] + table[r].
pub fn add_rows(x: &Dense2D, table: &Dense2D) -> Result<Dense2D> {
    add(x, table)
}

pub fn scale_div(x: &Dense2D, divisor: f64) -> Dense2D {
    let data = x.data.iter().map(|v| v / divisor).collect();
    Dense2D { rows: x.rows, cols: x.cols, data }
}

/// W ⊙ M + (1 − M)·eta with a binary mask M, the exact arithmetic form of
/// the mask operation. Entries at mask-0 positions become eta.
pub fn mask_fill(x: &Dense2D, mask: &Dense2D, eta: f64) -> Result<Dense2D> {
    if x.shape() != mask.shape() {
        return Err(shape_err("mask_fill", x.shape(), mask.shape()));
    }
    let data = x
        .data
        .iter()
        .zip(&mask.data)
        .map(|(v, m)| v * m + (1.0 - m) * eta)
        .collect();
    Ok(Dense2D { rows: x.rows, cols: x.cols, data })
}

/// Scale, mask, and row-softmax fused into one in-place sweep:
/// w ← softmax_rows((w / divisor) ⊙ M + (1 − M)·eta). Per element this is the
/// same expression chain as scale_div → mask_fill → softmax_rows, so the
/// result is bit-identical to the composed ops; fusing just avoids two matrix
/// temporaries and their extra passes.
pub fn masked_softmax_inplace(
    w: &mut Dense2D,
    mask: &Dense2D,
    divisor: f64,
    eta: f64,
) -> Result<()> {
    if w.shape() != mask.shape() {
        return Err(shape_err("masked_softmax", w.shape(), mask.shape()));
    }
    for r in 0..w.rows {
        let row = w.row_mut(r);
        let mrow = mask.row(r);
        let mut max = f64::NEG_INFINITY;
        for (v, &m) in row.iter_mut().zip(mrow) {
            let filled = (*v / divisor) * m + (1.0 - m) * eta;
            *v = filled;
            max = max.max(filled);
        }
        let mut denom = 0.0;
        for v in row.iter_mut() {
            *v = exp_finite(*v - max);
            denom += *v;
        }
        for v in row.iter_mut() {
            *v /= denom;
        }
    }
    Ok(())
}

/// exp(x) with the exact IEEE underflow shortcut: e^x rounds to 0.0 for every
/// x < -746 (the smallest subnormal is 2^-1074 ≈ e^-744.4·…), so the shortcut
/// returns the same bits libm would.
#[inline]
pub(crate) fn exp_finite(x: f64) -> f64 {
    if x < -746.0 {
        0.0
    } else {
        x.exp()
    }
}

/// Row softmax with per-row max subtraction over all entries, including any
/// eta-filled ones.
pub fn softmax_rows(x: &Dense2D) -> Dense2D {
    let mut out = Dense2D::zeros(x.rows, x.cols);
    for r in 0..x.rows {
        let row = x.row(r);
        let orow = out.row_mut(r);
        let mut max = f64::NEG_INFINITY;
        for &v in row {
            if v > max {
                max = v;
            }
        }
        let mut sum = 0.0;
        for (o, &v) in orow.iter_mut().zip(row) {
            let e = exp_finite(v - max);
            *o = e;
            sum += e;
        }
        for o in orow.iter_mut() {
            *o /= sum;
        }
    }
    out
}

pub struct LayerNormCache {
    /// Normalized rows before the affine map.
    pub xhat: Dense2D,
    /// 1/sqrt(var + eps) per row.
    pub inv_std: Vec<f64>,
}

/// Per-row layer normalization followed by the affine gain/bias map.
pub fn layer_norm(
    x: &Dense2D,
    gain: &[f64],
    bias: &[f64],
    eps: f64,
) -> Result<(Dense2D, LayerNormCache)> {
    if gain.len() != x.cols || bias.len() != x.cols {
        return Err(Error::Param(format!(
            "layer_norm gain/bias lengths {}/{} do not match width {}",
            gain.len(),
            bias.len(),
            x.cols
        )));
    }
    if eps <= 0.0 {
        return Err(Error::Param(format!("layer_norm eps must be > 0, got {eps}")));
    }
    let n = x.cols as f64;
    let mut out = Dense2D::zeros(x.rows, x.cols);
    let mut xhat = Dense2D::zeros(x.rows, x.cols);
    let mut inv_std = Vec::with_capacity(x.rows);
    for r in 0..x.rows {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let is = 1.0 / (var + eps).sqrt();
        inv_std.push(is);
        let xh = xhat.row_mut(r);
        let o = out.row_mut(r);
        for j in 0..x.cols {
            xh[j] = (row[j] - mean) * is;
            o[j] = xh[j] * gain[j] + bias[j];
        }
    }
    Ok((out, LayerNormCache { xhat, inv_std }))
}

/// Training mode: zero each element with probability `rate`, scale survivors
/// by 1/(1-rate). Eval mode: identity. Returns the per-element scale mask so
/// the backward pass can reuse it.
pub fn dropout(
    x: &Dense2D,
    rate: f64,
    training: bool,
    rng: &mut impl rand::Rng,
) -> Result<(Dense2D, Option<Vec<f64>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Param(format!("dropout rate must be in [0,1), got {rate}")));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let mask: Vec<f64> = (0..x.data.len())
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { scale })
        .collect();
    let data = x.data.iter().zip(&mask).map(|(v, m)| v * m).collect();
    Ok((Dense2D { rows: x.rows, cols: x.cols, data }, Some(mask)))
}

/// Column-wise arithmetic mean over rows.
pub fn mean_pool_rows(x: &Dense2D) -> Result<Vec<f64>> {
    if x.rows == 0 {
        return Err(shape_err("mean_pool_rows", x.shape(), (1, x.cols)));
    }
    let mut out = vec![0.0; x.cols];
    for r in 0..x.rows {
        for (o, &v) in out.iter_mut().zip(x.row(r)) {
            *o += v;
        }
    }
    let n = x.rows as f64;
    for o in &mut out {
        *o /= n;
    }
    Ok(out)
}

/// Concatenates blocks along the feature axis; all blocks must share a row count.
pub fn concat_cols(parts: &[&Dense2D]) -> Result<Dense2D> {
    if parts.is_empty() {
        return Err(Error::Param("concat_cols of zero blocks".into()));
    }
    let rows = parts[0].rows;
    for p in parts {
        if p.rows != rows {
            return Err(shape_err("concat_cols", parts[0].shape(), p.shape()));
        }
    }
    let cols: usize = parts.iter().map(|p| p.cols).sum();
    let mut out = Dense2D::zeros(rows, cols);
    for r in 0..rows {
        let orow = out.row_mut(r);
        let mut off = 0;
        for p in parts {
            orow[off..off + p.cols].copy_from_slice(p.row(r));
            off += p.cols;
        }
    }
    Ok(out)
}

/// −log softmax(logits)[label] and the softmax probabilities (the gradient is
/// probs − one_hot(label)).
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::Param(format!(
            "label {} out of range for {} classes",
            label,
            logits.len()
        )));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| exp_finite(v - max)).collect();
    let sum: f64 = exps.iter().sum();
    let probs: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    let loss = -(probs[label].ln());
    Ok((loss, probs))
}

pub fn max_abs_diff(a: &Dense2D, b: &Dense2D) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff on mismatched shapes");
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn matmul_identity() {
        let a = Dense2D::from_fn(3, 3, |r, c| (r * 3 + c) as f64 + 0.5);
        let eye = Dense2D::from_fn(3, 3, |r, c| if r == c { 1.0 } else { 0.0 });
        let prod = matmul(&eye, &a).unwrap();
        assert_eq!(prod, a);
    }

    #[test]
    fn matmul_hand_example() {
        let a = Dense2D::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Dense2D::from_vec(2, 1, vec![1.0, 1.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data, vec![3.0, 7.0]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Dense2D::zeros(2, 3);
        let b = Dense2D::zeros(4, 2);
        let err = matmul(&a, &b).unwrap_err().to_string();
        assert!(err.contains("2x3") && err.contains("4x2"), "{err}");
    }

    #[test]
    fn matmul_matches_per_element_dot_bitwise() {
        // The tiled kernel must agree bit-for-bit with the literal
        // ascending-k fma-accumulated dot product, at several shapes
        // including non-multiple-of-8 widths.
        let mut seed = 9u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for &(m, k, n) in &[(5usize, 7usize, 9usize), (8, 8, 8), (13, 32, 17), (22, 3, 176)] {
            let a = Dense2D::from_fn(m, k, |_, _| next());
            let b = Dense2D::from_fn(k, n, |_, _| next());
            let fast = matmul(&a, &b).unwrap();
            for i in 0..m {
                for j in 0..n {
                    let mut s = 0.0f64;
                    for kk in 0..k {
                        s = a.get(i, kk).mul_add(b.get(kk, j), s);
                    }
                    assert_eq!(s.to_bits(), fast.get(i, j).to_bits(), "({m},{k},{n}) at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn matmul_nt_matches_transpose() {
        let a = Dense2D::from_fn(4, 6, |r, c| (r + c) as f64 * 0.3 - 1.0);
        let b = Dense2D::from_fn(5, 6, |r, c| (r * c) as f64 * 0.1 - 0.4);
        let via_nt = matmul_nt(&a, &b).unwrap();
        let via_t = matmul(&a, &b.transpose()).unwrap();
        assert_eq!(via_nt, via_t);
    }

    #[test]
    fn softmax_uniform_row() {
        let x = Dense2D::zeros(1, 3);
        let y = softmax_rows(&x);
        for &v in &y.data {
            assert!(approx(v, 1.0 / 3.0, 1e-12));
        }
    }

    #[test]
    fn softmax_eta_saturates() {
        let x = Dense2D::from_vec(1, 2, vec![-9.0e15, 0.0]).unwrap();
        let y = softmax_rows(&x);
        assert!(y.data[0] <= 1e-12);
        assert!(approx(y.data[1], 1.0, 1e-12));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let x = Dense2D::from_fn(7, 11, |r, c| ((r * 31 + c * 17) % 13) as f64 * 0.7 - 4.0);
        let y = softmax_rows(&x);
        for r in 0..y.rows {
            let s: f64 = y.row(r).iter().sum();
            assert!(approx(s, 1.0, 1e-9));
            assert!(y.row(r).iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn exp_underflow_shortcut_is_exact() {
        for &x in &[-746.0001, -747.0, -1.0e4, -9.0e15, f64::MIN] {
            assert_eq!(exp_finite(x).to_bits(), x.exp().to_bits());
        }
        for &x in &[-746.0, -745.0, -700.0, -1.0, 0.0, 1.0, 300.0] {
            assert_eq!(exp_finite(x).to_bits(), x.exp().to_bits());
        }
    }

    #[test]
    fn layer_norm_constant_row_is_zero() {
        let x = Dense2D::from_vec(1, 4, vec![5.0; 4]).unwrap();
        let (y, _) = layer_norm(&x, &[1.0; 4], &[0.0; 4], 1e-5).unwrap();
        for &v in &y.data {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn layer_norm_two_point_row() {
        let x = Dense2D::from_vec(1, 2, vec![1.0, 3.0]).unwrap();
        let (y, _) = layer_norm(&x, &[1.0; 2], &[0.0; 2], 1e-12).unwrap();
        assert!(approx(y.data[0], -1.0, 1e-5));
        assert!(approx(y.data[1], 1.0, 1e-5));
    }

    #[test]
    fn layer_norm_moments() {
        let x = Dense2D::from_fn(5, 16, |r, c| ((r * 7 + c * 3) % 11) as f64 - 3.0);
        let (y, _) = layer_norm(&x, &[1.0; 16], &[0.0; 16], 1e-5).unwrap();
        for r in 0..y.rows {
            let row = y.row(r);
            let mean = row.iter().sum::<f64>() / 16.0;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 16.0;
            assert!(mean.abs() <= 1e-7, "row {r} mean {mean}");
            assert!((var - 1.0).abs() <= 1e-4, "row {r} var {var}");
        }
    }

    #[test]
    fn linear_zero_weights_gives_bias() {
        let x = Dense2D::from_fn(3, 2, |r, c| (r + c) as f64);
        let w = Dense2D::zeros(2, 4);
        let b = [0.1, 0.2, 0.3, 0.4];
        let y = linear(&x, &w, &b).unwrap();
        for r in 0..3 {
            assert_eq!(y.row(r), &b);
        }
    }

    #[test]
    fn linear_identity_weights() {
        let x = Dense2D::from_fn(3, 3, |r, c| (r * 3 + c) as f64);
        let w = Dense2D::from_fn(3, 3, |r, c| if r == c { 1.0 } else { 0.0 });
        let y = linear(&x, &w, &[0.0; 3]).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn dropout_modes() {
        use rand::SeedableRng;
        let x = Dense2D::from_fn(10, 10, |_, _| 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let (y, m) = dropout(&x, 0.0, true, &mut rng).unwrap();
        assert_eq!(y, x);
        assert!(m.is_none());
        let (y, m) = dropout(&x, 0.2, false, &mut rng).unwrap();
        assert_eq!(y, x);
        assert!(m.is_none());
        assert!(dropout(&x, 1.0, true, &mut rng).is_err());
    }

    #[test]
    fn dropout_zeroed_fraction() {
        use rand::SeedableRng;
        let x = Dense2D::from_fn(1000, 1000, |_, _| 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let (y, _) = dropout(&x, 0.2, true, &mut rng).unwrap();
        let zeroed = y.data.iter().filter(|&&v| v == 0.0).count() as f64 / 1e6;
        assert!((0.198..=0.202).contains(&zeroed), "zeroed fraction {zeroed}");
        let survivors: Vec<f64> = y.data.iter().cloned().filter(|&v| v != 0.0).collect();
        assert!(survivors.iter().all(|&v| approx(v, 1.25, 1e-12)));
    }

    #[test]
    fn mean_pool_examples() {
        let x = Dense2D::from_vec(1, 3, vec![4.0, 5.0, 6.0]).unwrap();
        assert_eq!(mean_pool_rows(&x).unwrap(), vec![4.0, 5.0, 6.0]);
        let x = Dense2D::from_vec(2, 2, vec![0.0, 2.0, 2.0, 0.0]).unwrap();
        assert_eq!(mean_pool_rows(&x).unwrap(), vec![1.0, 1.0]);
        assert!(mean_pool_rows(&Dense2D::zeros(0, 3)).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        let (loss, _) = cross_entropy(&[1.0, 1.0, 1.0, 1.0], 2).unwrap();
        assert!(approx(loss, (4.0f64).ln(), 1e-12));
        let (loss, _) = cross_entropy(&[20.0, -20.0], 0).unwrap();
        assert!(loss < 1e-12);
        assert!(cross_entropy(&[0.0, 0.0], 2).is_err());
    }

    #[test]
    fn mask_fill_exact_form() {
        let x = Dense2D::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = Dense2D::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let y = mask_fill(&x, &m, -9.0e15).unwrap();
        assert_eq!(y.data, vec![1.0, -9.0e15, -9.0e15, 4.0]);
    }

    #[test]
    fn concat_cols_blocks() {
        let a = Dense2D::from_vec(2, 1, vec![1.0, 2.0]).unwrap();
        let b = Dense2D::from_vec(2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let c = concat_cols(&[&a, &b]).unwrap();
        assert_eq!(c.shape(), (2, 3));
        assert_eq!(c.data, vec![1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
    }
}
