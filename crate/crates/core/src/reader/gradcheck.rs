use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{ModelInput, ReaderParams};
use super::ReaderConfig;
use crate::error::Result;

const EPS: f64 = 1e-5;
const COORDS_PER_GROUP: usize = 32;
/// Denominator floor so that near-zero gradients compare absolutely. A
/// central difference at EPS carries roughly 1e-10 of rounding error for
/// losses of order 1-10; dividing by this floor keeps that noise an order of
/// magnitude under a 1e-4 tolerance.
const FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Worst relative error per parameter group.
    pub groups: Vec<(&'static str, f64)>,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.groups.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }

    pub fn group(&self, name: &str) -> Option<f64> {
        self.groups.iter().find(|(n, _)| *n == name).map(|(_, e)| *e)
    }
}

/// Compares analytic gradients with central differences on sampled coordinates.
pub fn gradient_check(
    params: &ReaderParams,
    input: &ModelInput,
    label: usize,
    config: &ReaderConfig,
    seed: u64,
) -> Result<GradCheckReport> {
    gradient_check_with(params, input, label, config, seed, |_| {})
}

/// As [`gradient_check`], with a hook that may alter the analytic gradients
/// before comparison.
pub fn gradient_check_with(
    params: &ReaderParams,
    input: &ModelInput,
    label: usize,
    config: &ReaderConfig,
    seed: u64,
    tamper: impl FnOnce(&mut ReaderParams),
) -> Result<GradCheckReport> {
    let mut analytic = params.zeros_like();
    params.loss_and_grad(input, label, config, &mut analytic)?;
    tamper(&mut analytic);

    let d = params.d_model();
    let used_rows: BTreeSet<usize> = input
        .head
        .iter()
        .chain(&input.tail)
        .chain(if config.use_scene_pooling {
            &input.scene[..]
        } else {
            &[]
        })
        .copied()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let analytic_groups = analytic.groups();
    let mut probe = params.clone();
    let mut groups = Vec::new();
    let mut checked = 0;
    for (g, (name, grad)) in analytic_groups.iter().enumerate() {
        let mut candidates: Vec<usize> = if g == 0 {
            used_rows.iter().flat_map(|r| r * d..(r + 1) * d).collect()
        } else {
            (0..grad.len()).collect()
        };
        candidates.shuffle(&mut rng);
        candidates.truncate(COORDS_PER_GROUP);
        let mut worst = 0.0f64;
        for i in candidates {
            let original = params.groups()[g].1[i];
            probe.groups_mut()[g].1[i] = original + EPS;
            let plus = probe.loss(input, label, config)?;
            probe.groups_mut()[g].1[i] = original - EPS;
            let minus = probe.loss(input, label, config)?;
            probe.groups_mut()[g].1[i] = original;
            let numeric = (plus - minus) / (2.0 * EPS);
            let a = grad[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
            worst = worst.max(rel);
            checked += 1;
        }
        groups.push((*name, worst));
    }
    Ok(GradCheckReport { groups, checked })
}

#[cfg(test)]
mod tests {
    use super::super::MaskMode;
    use super::*;

    fn setup(pooling: bool, mode: MaskMode) -> (ReaderParams, ModelInput, ReaderConfig) {
        let config = ReaderConfig {
            d_model: 8,
            max_len: 32,
            use_scene_pooling: pooling,
            mask_mode: mode,
            seed: 11,
            ..ReaderConfig::default()
        };
        let params = ReaderParams::random(20, &config, 0.5);
        let scene: Vec<usize> = (0..14).map(|i| 2 + (i * 7) % 18).collect();
        let mask = (0..14).map(|i| if i % 3 == 0 { 0.0 } else { 1.0 }).collect();
        let input = ModelInput {
            head: vec![2, 4, 9, 5, 11],
            tail: vec![2, 4, 13, 5, 17, 3],
            scene,
            mask,
        };
        (params, input, config)
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        for (pooling, mode) in [
            (true, MaskMode::Additive),
            (true, MaskMode::Multiplicative),
            (false, MaskMode::Additive),
        ] {
            let (p, input, cfg) = setup(pooling, mode);
            let report = gradient_check(&p, &input, 7, &cfg, 1).unwrap();
            assert!(report.max_relative_error() < 1e-4, "{pooling} {mode:?}: {report:?}");
        }
    }

    #[test]
    fn zeroed_pool_gradient_is_detected() {
        let (p, input, cfg) = setup(true, MaskMode::Additive);
        let report = gradient_check_with(&p, &input, 7, &cfg, 1, |g| g.pool.fill(0.0)).unwrap();
        assert!(report.group("pool").unwrap() > 1e-2, "{report:?}");
    }
}
