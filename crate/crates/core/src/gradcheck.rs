use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{forward_with, init_params, Constants, ModelConfig, ModelParams, Variant};
use crate::seeding;
use crate::tensor::fdcheck::{relative_error, FD_EPSILON, FD_TOLERANCE};
use crate::tensor::{cross_entropy, Dense2D};
use crate::train::sample_gradients;

/// The small shape every gradient check runs at: T=2, N=3, feat 8, H=2,
/// d=4, C=3, dropout 0. Finite differences are hopeless at full scale.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        n: 3,
        t: 2,
        feat_dim: 8,
        h: 2,
        d: 4,
        attn_out: 8,
        classes: 3,
        dropout: 0.0,
        variant: Variant::Dgsta,
        temporal_same_joint_only: false,
        eta: -9.0e15,
        projection_bias: true,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupReport {
    pub group: String,
    pub max_rel_err: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradcheckReport {
    pub seeds: u64,
    pub tolerance: f64,
    pub groups: Vec<GroupReport>,
    pub pass: bool,
}

fn loss_at(
    params: &ModelParams,
    cfg: &ModelConfig,
    consts: &Constants,
    features: &Dense2D,
    label: usize,
) -> Result<f64> {
    let mut rng = seeding::stream_rng(0, seeding::DROPOUT, 0);
    let logits = forward_with(params, cfg, consts, features, false, &mut rng)?;
    Ok(cross_entropy(&logits, label)?.0)
}

/// Compares every parameter group's analytic gradient against central finite
/// differences of the cross-entropy loss, at `seeds` random (params, input,
/// label) triples. `corrupt_group` perturbs that group's analytic gradient
/// before comparison — a fixture proving the check can fail.
pub fn run_gradcheck(
    cfg: &ModelConfig,
    seeds: u64,
    seed: u64,
    corrupt_group: Option<&str>,
) -> Result<GradcheckReport> {
    cfg.validate()?;
    if cfg.dropout != 0.0 {
        return Err(Error::Param(
            "gradient checking needs dropout 0 (stochastic masks break finite differences)".into(),
        ));
    }
    if seeds == 0 {
        return Err(Error::Param("gradient check needs at least one seed".into()));
    }
    let consts = Constants::build_with_bones(cfg, &[(0, 1), (1, 2)])?;
    let mut worst: Vec<(String, f64)> = Vec::new();
    let mut corrupt_seen = false;

    for s in 0..seeds {
        let mut rng = seeding::stream_rng(seed, seeding::GRADCHECK, s);
        let params = init_params(cfg, &mut rng)?;
        let features = Dense2D::from_fn(cfg.t * cfg.n, 3, |_, _| rng.gen_range(-0.5..0.5));
        let label = rng.gen_range(0..cfg.classes);

        let mut dropout_rng = seeding::stream_rng(0, seeding::DROPOUT, 0);
        let (_, mut grads, _) =
            sample_gradients(&params, cfg, &consts, &features, label, false, &mut dropout_rng)?;
        if let Some(target) = corrupt_group {
            for (name, grad) in &mut grads {
                if name == target {
                    corrupt_seen = true;
                    for v in &mut grad.data {
                        *v = *v * 1.5 + 0.01;
                    }
                }
            }
        }

        if worst.is_empty() {
            worst = grads.iter().map(|(n, _)| (n.clone(), 0.0)).collect();
        }
        let mut probe = params.clone();
        for (gi, (name, grad)) in grads.iter().enumerate() {
            debug_assert_eq!(&worst[gi].0, name);
            for e in 0..grad.data.len() {
                let original = probe.tensors()[gi].1.data[e];
                probe.tensors_mut()[gi].1.data[e] = original + FD_EPSILON;
                let plus = loss_at(&probe, cfg, &consts, &features, label)?;
                probe.tensors_mut()[gi].1.data[e] = original - FD_EPSILON;
                let minus = loss_at(&probe, cfg, &consts, &features, label)?;
                probe.tensors_mut()[gi].1.data[e] = original;
                let numeric = (plus - minus) / (2.0 * FD_EPSILON);
                let err = relative_error(numeric, grad.data[e]);
                if err > worst[gi].1 {
                    worst[gi].1 = err;
                }
            }
        }
    }

    if let Some(target) = corrupt_group {
        if !corrupt_seen {
            return Err(Error::Param(format!("unknown parameter group {target:?}")));
        }
    }

    let groups: Vec<GroupReport> = worst
        .into_iter()
        .map(|(group, max_rel_err)| GroupReport { group, max_rel_err, pass: max_rel_err <= FD_TOLERANCE })
        .collect();
    let pass = groups.iter().all(|g| g.pass);
    Ok(GradcheckReport { seeds, tolerance: FD_TOLERANCE, groups, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_config_passes_every_group() {
        let report = run_gradcheck(&tiny_config(), 2, 0, None).unwrap();
        assert!(report.pass, "failing groups: {:?}", report.groups.iter().filter(|g| !g.pass).collect::<Vec<_>>());
        assert_eq!(report.seeds, 2);
        assert!(!report.groups.is_empty());
    }

    #[test]
    fn corrupted_group_is_reported_by_name() {
        let report = run_gradcheck(&tiny_config(), 1, 0, Some("stage1.h0.w_q")).unwrap();
        assert!(!report.pass);
        let bad: Vec<&GroupReport> = report.groups.iter().filter(|g| !g.pass).collect();
        assert!(bad.iter().any(|g| g.group == "stage1.h0.w_q"));
    }

    #[test]
    fn unknown_corrupt_group_rejected() {
        assert!(run_gradcheck(&tiny_config(), 1, 0, Some("nope.w")).is_err());
    }

    #[test]
    fn report_deterministic_per_seed() {
        let a = run_gradcheck(&tiny_config(), 2, 9, None).unwrap();
        let b = run_gradcheck(&tiny_config(), 2, 9, None).unwrap();
        let errs = |r: &GradcheckReport| r.groups.iter().map(|g| g.max_rel_err).collect::<Vec<_>>();
        assert_eq!(errs(&a), errs(&b));
    }

    #[test]
    fn dropout_config_rejected() {
        let cfg = ModelConfig { dropout: 0.2, ..tiny_config() };
        assert!(run_gradcheck(&cfg, 1, 0, None).is_err());
    }
}
