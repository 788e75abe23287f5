use std::time::Instant;
use dgsta::data::{synth_gestures, SynthSpec};
use dgsta::model::{coords_to_features, forward_with, init_params, forward_tape, Constants, ModelConfig, ParamLeaves};
use dgsta::seeding;
use dgsta::tensor::{matmul, matmul_nt, softmax_rows, Dense2D, Tape};

fn main() {
    let cfg = ModelConfig { classes: 3, dropout: 0.0, ..ModelConfig::default() };
    let consts = Constants::build(&cfg).unwrap();
    let mut rng = seeding::stream_rng(1, seeding::INIT, 0);
    let params = init_params(&cfg, &mut rng).unwrap();
    let spec = SynthSpec { classes: 3, per_class: 4, seed: 7, frames: 32, ..SynthSpec::default() };
    let ds = synth_gestures(&spec, &mut seeding::stream_rng(7, seeding::SYNTH_DATA, 0)).unwrap();
    let feats: Vec<Dense2D> = ds.sequences.iter().map(|s| {
        let fr: Vec<_> = (0..cfg.t).map(|i| s.frames[i * s.frames.len() / cfg.t].clone()).collect();
        coords_to_features(&fr, &cfg).unwrap()
    }).collect();

    let reps = 50;
    let mut sink = 0.0;
    let t0 = Instant::now();
    for _ in 0..reps { for f in &feats { let out = forward_with(&params, &cfg, &consts, f, false, &mut rng).unwrap(); sink += out[0]; } }
    println!("inference fwd      : {:8.3} ms/seq  (sink {sink:.3e})", t0.elapsed().as_secs_f64() / (reps * feats.len()) as f64 * 1e3);

    let t0 = Instant::now();
    for _ in 0..reps { for f in &feats {
        let mut tape = Tape::new();
        let leaves = ParamLeaves::bind(&mut tape, &params);
        let id = forward_tape(&mut tape, &leaves, &cfg, &consts, f, true, &mut rng).unwrap();
        sink += tape.value(id).data[0];
    } }
    println!("tape fwd           : {:8.3} ms/seq  (sink {sink:.3e})", t0.elapsed().as_secs_f64() / (reps * feats.len()) as f64 * 1e3);

    let t0 = Instant::now();
    for _ in 0..reps { for f in &feats {
        let mut tape = Tape::new();
        let leaves = ParamLeaves::bind(&mut tape, &params);
        let id = forward_tape(&mut tape, &leaves, &cfg, &consts, f, true, &mut rng).unwrap();
        let loss = tape.cross_entropy(id, 1).unwrap();
        let grads = tape.backward(loss).unwrap();
        sink += grads.get(id).map(|g| g.data[0]).unwrap_or(0.0);
    } }
    println!("tape fwd+bwd       : {:8.3} ms/seq  (sink {sink:.3e})", t0.elapsed().as_secs_f64() / (reps * feats.len()) as f64 * 1e3);

    let m = 2000;
    let a = Dense2D::from_fn(176, 256, |i, j| ((i * 7 + j) % 13) as f64 * 0.1 - 0.6);
    let w = Dense2D::from_fn(256, 32, |i, j| ((i + j * 3) % 11) as f64 * 0.1 - 0.5);
    let t0 = Instant::now();
    for _ in 0..m { sink += matmul(&a, &w).unwrap().data[0]; }
    println!("proj 176x256.256x32: {:8.4} ms     (sink {sink:.3e})", t0.elapsed().as_secs_f64() / m as f64 * 1e3);
    let q = Dense2D::from_fn(176, 32, |i, j| ((i + j) % 9) as f64 * 0.1);
    let t0 = Instant::now();
    for _ in 0..m { sink += matmul_nt(&q, &q).unwrap().data[0]; }
    println!("scores 176x32.tr   : {:8.4} ms     (sink {sink:.3e})", t0.elapsed().as_secs_f64() / m as f64 * 1e3);
    let s = Dense2D::from_fn(176, 176, |i, j| ((i * 3 + j) % 17) as f64 * 0.2 - 1.0);
    let t0 = Instant::now();
    for _ in 0..m { sink += softmax_rows(&s).data[0]; }
    println!("softmax 176x176    : {:8.4} ms     (sink {sink:.3e})", t0.elapsed().as_secs_f64() / m as f64 * 1e3);
    let wts = softmax_rows(&s);
    let v = Dense2D::from_fn(176, 32, |i, j| ((i * 2 + j) % 7) as f64 * 0.1);
    let t0 = Instant::now();
    for _ in 0..m { sink += matmul(&wts, &v).unwrap().data[0]; }
    println!("attend 176x176.x32 : {:8.4} ms     (sink {sink:.3e})", t0.elapsed().as_secs_f64() / m as f64 * 1e3);
}
