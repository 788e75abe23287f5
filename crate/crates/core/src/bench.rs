use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attention::{multi_head, multi_head_naive, AttentionConfig, HeadParams, MultiHeadParams};
use crate::error::{Error, Result};
use crate::graph::{build_spatial_mask, build_temporal_mask, AttentionMask, GraphShape};
use crate::seeding;
use crate::tensor::{max_abs_diff, Dense2D};

pub const WARMUP_REPS: usize = 3;
pub const MIN_REPS: usize = 10;
/// Paths must agree to this bound before any timing counts.
pub const AGREEMENT_BOUND: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchShape {
    pub t: usize,
    pub n: usize,
    pub d: usize,
    pub h: usize,
}

impl Default for BenchShape {
    fn default() -> Self {
        BenchShape { t: 8, n: 22, d: 32, h: 8 }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeStats {
    pub min_ms: f64,
    pub median_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchReport {
    pub shape: BenchShape,
    pub repetitions: usize,
    pub naive: TimeStats,
    pub masked: TimeStats,
    /// naive median / masked median.
    pub speedup: f64,
    /// 100 * (1 - masked/naive), the headline time-reduction figure.
    pub implied_reduction_percent: f64,
    pub max_abs_deviation: f64,
}

fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Dense2D {
    Dense2D::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_heads(d_in: usize, shape: &BenchShape, rng: &mut impl Rng) -> MultiHeadParams {
    let heads = (0..shape.h)
        .map(|_| HeadParams {
            w_k: random_matrix(d_in, shape.d, rng),
            w_q: random_matrix(d_in, shape.d, rng),
            w_v: random_matrix(d_in, shape.d, rng),
            b_k: Some(random_matrix(1, shape.d, rng)),
            b_q: Some(random_matrix(1, shape.d, rng)),
            b_v: Some(random_matrix(1, shape.d, rng)),
        })
        .collect();
    MultiHeadParams { heads }
}

/// One benchmark repetition covers the network's attention workload for one
/// sequence: a spatially-masked pass and a temporally-masked pass, each over
/// (T*N x 4d) features.
struct Workload {
    features_s: Dense2D,
    features_t: Dense2D,
    params_s: MultiHeadParams,
    params_t: MultiHeadParams,
    mask_s: AttentionMask,
    mask_t: AttentionMask,
    cfg: AttentionConfig,
}

impl Workload {
    fn build(shape: &BenchShape, seed: u64) -> Result<Workload> {
        let graph = GraphShape::new(shape.t, shape.n)?;
        let nodes = shape.t * shape.n;
        let d_in = 4 * shape.d;
        let mut rng = seeding::stream_rng(seed, seeding::BENCH_INPUTS, 0);
        Ok(Workload {
            features_s: random_matrix(nodes, d_in, &mut rng),
            features_t: random_matrix(nodes, d_in, &mut rng),
            params_s: random_heads(d_in, shape, &mut rng),
            params_t: random_heads(d_in, shape, &mut rng),
            mask_s: build_spatial_mask(graph),
            mask_t: build_temporal_mask(graph, false),
            cfg: AttentionConfig { d: shape.d, h: shape.h, eta: -9.0e15 },
        })
    }

    fn masked(&self) -> Result<(Dense2D, Dense2D)> {
        Ok((
            multi_head(&self.features_s, &self.params_s, &self.mask_s, &self.cfg)?,
            multi_head(&self.features_t, &self.params_t, &self.mask_t, &self.cfg)?,
        ))
    }

    fn naive(&self) -> Result<(Dense2D, Dense2D)> {
        Ok((
            multi_head_naive(&self.features_s, &self.params_s, &self.mask_s, &self.cfg)?,
            multi_head_naive(&self.features_t, &self.params_t, &self.mask_t, &self.cfg)?,
        ))
    }
}

fn median_ms(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}

/// Times the per-edge oracle against the masked matrix path on identical
/// inputs, single-threaded. Outputs are compared first and any disagreement
/// beyond the bound aborts the run: correctness precedes speed.
pub fn run_bench(shape: BenchShape, reps: usize, seed: u64) -> Result<BenchReport> {
    if reps < MIN_REPS {
        return Err(Error::Param(format!("benchmark needs reps >= {MIN_REPS}, got {reps}")));
    }
    let work = Workload::build(&shape, seed)?;

    let (masked_s, masked_t) = work.masked()?;
    let (naive_s, naive_t) = work.naive()?;
    let deviation = max_abs_diff(&masked_s, &naive_s).max(max_abs_diff(&masked_t, &naive_t));
    if !(deviation <= AGREEMENT_BOUND) {
        return Err(Error::Train(format!(
            "benchmark aborted: paths deviate by {deviation:e} (> {AGREEMENT_BOUND:e})"
        )));
    }

    for _ in 0..WARMUP_REPS {
        std::hint::black_box(work.naive()?);
        std::hint::black_box(work.masked()?);
    }

    let mut naive_times = Vec::with_capacity(reps);
    let mut masked_times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        std::hint::black_box(work.naive()?);
        naive_times.push(start.elapsed().as_secs_f64() * 1e3);

        let start = Instant::now();
        std::hint::black_box(work.masked()?);
        masked_times.push(start.elapsed().as_secs_f64() * 1e3);
    }

    let naive = TimeStats {
        min_ms: naive_times.iter().cloned().fold(f64::INFINITY, f64::min),
        median_ms: median_ms(&mut naive_times),
    };
    let masked = TimeStats {
        min_ms: masked_times.iter().cloned().fold(f64::INFINITY, f64::min),
        median_ms: median_ms(&mut masked_times),
    };
    let speedup = naive.median_ms / masked.median_ms;
    Ok(BenchReport {
        shape,
        repetitions: reps,
        naive,
        masked,
        speedup,
        implied_reduction_percent: 100.0 * (1.0 - masked.median_ms / naive.median_ms),
        max_abs_deviation: deviation,
    })
}
