//! Accuracy, percentile-bootstrap intervals and Cohen's kappa.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{InstanceKey, PredictionRecord};
use crate::error::{Error, Result};
use crate::taxonomy::{RelationType, NUM_RELATIONS};

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_LEVEL: f64 = 0.95;

/// 1.0 where the prediction matches the truth, else 0.0, in prediction order.
pub fn correctness(preds: &[PredictionRecord], truths: &HashMap<InstanceKey, RelationType>) -> Result<Vec<f64>> {
    preds
        .iter()
        .map(|p| {
            let key = p.key();
            match truths.get(&key) {
                Some(t) => Ok(if *t == p.predicted { 1.0 } else { 0.0 }),
                None => Err(Error::MissingTruth(key.to_string())),
            }
        })
        .collect()
}

pub fn accuracy(preds: &[PredictionRecord], truths: &HashMap<InstanceKey, RelationType>) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::Invalid("accuracy of an empty prediction set".into()));
    }
    let c = correctness(preds, truths)?;
    Ok(c.iter().sum::<f64>() / c.len() as f64)
}

/// Nearest-rank quantile of sorted values: the ⌈p·n⌉-th smallest.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Generator for resample `r`: the master seed with stream `r`, so results
/// do not depend on how resamples are spread over threads.
fn resample_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

fn percentile_interval(mut stats: Vec<f64>, level: f64) -> (f64, f64) {
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    (nearest_rank(&stats, tail), nearest_rank(&stats, 1.0 - tail))
}

fn check_bootstrap_args(n: usize, resamples: usize, level: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Invalid("bootstrap of an empty sample".into()));
    }
    if resamples == 0 {
        return Err(Error::Invalid("bootstrap needs at least one resample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Invalid(format!("confidence level {level} outside (0, 1)")));
    }
    Ok(())
}

/// Percentile interval of resampled means.
pub fn bootstrap_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> Result<(f64, f64)> {
    check_bootstrap_args(values.len(), resamples, level)?;
    let n = values.len();
    let means: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = resample_rng(seed, r);
            (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64
        })
        .collect();
    Ok(percentile_interval(means, level))
}

/// Kappa from two aligned label sequences.
pub fn kappa_of_labels(a: &[RelationType], b: &[RelationType]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::KeyMismatch(format!("{} vs {} labels", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Invalid("kappa of an empty sample".into()));
    }
    let n = a.len() as f64;
    let mut ca = [0usize; NUM_RELATIONS];
    let mut cb = [0usize; NUM_RELATIONS];
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        ca[x.index()] += 1;
        cb[y.index()] += 1;
        agree += usize::from(x == y);
    }
    let po = agree as f64 / n;
    let pe: f64 = ca.iter().zip(&cb).map(|(x, y)| (*x as f64 / n) * (*y as f64 / n)).sum();
    if (1.0 - pe).abs() < 1e-12 {
        return if agree == a.len() {
            Ok(1.0)
        } else {
            Err(Error::UndefinedKappa(po))
        };
    }
    Ok((po - pe) / (1.0 - pe))
}

/// Pairs two prediction sets by instance key, in the order of `a`.
pub fn align(a: &[PredictionRecord], b: &[PredictionRecord]) -> Result<(Vec<RelationType>, Vec<RelationType>)> {
    let lookup: HashMap<InstanceKey, RelationType> = b.iter().map(|p| (p.key(), p.predicted)).collect();
    if lookup.len() != b.len() || a.len() != b.len() {
        return Err(Error::KeyMismatch(format!("{} vs {} predictions", a.len(), b.len())));
    }
    let mut la = Vec::with_capacity(a.len());
    let mut lb = Vec::with_capacity(a.len());
    for p in a {
        let key = p.key();
        let other = lookup.get(&key).ok_or_else(|| Error::KeyMismatch(key.to_string()))?;
        la.push(p.predicted);
        lb.push(*other);
    }
    Ok((la, lb))
}

pub fn cohens_kappa(a: &[PredictionRecord], b: &[PredictionRecord]) -> Result<f64> {
    let (la, lb) = align(a, b)?;
    kappa_of_labels(&la, &lb)
}

/// Percentile interval of kappa over paired instance resamples.
pub fn bootstrap_kappa_labels(
    a: &[RelationType],
    b: &[RelationType],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    kappa_of_labels(a, b)?;
    check_bootstrap_args(a.len(), resamples, level)?;
    let n = a.len();
    let stats = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = resample_rng(seed, r);
            let (ra, rb): (Vec<_>, Vec<_>) = (0..n)
                .map(|_| {
                    let i = rng.gen_range(0..n);
                    (a[i], b[i])
                })
                .unzip();
            kappa_of_labels(&ra, &rb)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(percentile_interval(stats, level))
}

pub fn bootstrap_kappa_ci(
    a: &[PredictionRecord],
    b: &[PredictionRecord],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    let (la, lb) = align(a, b)?;
    bootstrap_kappa_labels(&la, &lb, resamples, level, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Distribution;

    fn pred(i: usize, label: RelationType) -> PredictionRecord {
        let key = InstanceKey {
            title_id: "t".into(),
            scene_index: i,
            head: "A".into(),
            tail: "B".into(),
        };
        PredictionRecord::new(key, Distribution::one_hot(label), "m")
    }

    const X: RelationType = RelationType::COLLEAGUE_OF;
    const Y: RelationType = RelationType::SPOUSE_OF;

    #[test]
    fn accuracy_counts() {
        let preds: Vec<_> = (0..1000).map(|i| pred(i, if i < 265 { X } else { Y })).collect();
        let truths = preds.iter().map(|p| (p.key(), X)).collect();
        assert_eq!(accuracy(&preds, &truths).unwrap(), 0.265);
        assert!(accuracy(&[], &truths).is_err());
        let mut missing = truths.clone();
        missing.remove(&preds[3].key());
        assert!(matches!(accuracy(&preds, &missing), Err(Error::MissingTruth(_))));
    }

    #[test]
    fn nearest_rank_definition() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(nearest_rank(&v, 0.025), 1.0);
        assert_eq!(nearest_rank(&v, 0.5), 5.0);
        assert_eq!(nearest_rank(&v, 0.975), 10.0);
        assert_eq!(nearest_rank(&v, 0.31), 4.0);
    }

    #[test]
    fn degenerate_bootstraps() {
        assert_eq!(bootstrap_ci(&[1.0; 50], 1000, 0.95, 1).unwrap(), (1.0, 1.0));
        assert_eq!(bootstrap_ci(&[0.0; 50], 1000, 0.95, 1).unwrap(), (0.0, 0.0));
        assert!(bootstrap_ci(&[], 1000, 0.95, 1).is_err());
        let v: Vec<f64> = (0..40).map(|i| f64::from(i % 3 == 0)).collect();
        assert_eq!(
            bootstrap_ci(&v, 500, 0.95, 9).unwrap(),
            bootstrap_ci(&v, 500, 0.95, 9).unwrap()
        );
    }

    #[test]
    fn kappa_hand_computed() {
        assert_eq!(kappa_of_labels(&[X, X, Y, Y], &[X, Y, X, Y]).unwrap(), 0.0);
        assert_eq!(kappa_of_labels(&[X, X, X, Y], &[X, X, Y, Y]).unwrap(), 0.5);
        assert_eq!(kappa_of_labels(&[X, X], &[X, X]).unwrap(), 1.0);
        let a: Vec<_> = [X, Y, X].iter().enumerate().map(|(i, l)| pred(i, *l)).collect();
        assert_eq!(cohens_kappa(&a, &a).unwrap(), 1.0);
        assert!(matches!(cohens_kappa(&a, &a[..2]), Err(Error::KeyMismatch(_))));
    }

    #[test]
    fn kappa_intervals() {
        let a = [X, X, X, Y];
        let b = [X, X, Y, Y];
        let a_rep: Vec<_> = a.iter().cycle().take(400).copied().collect();
        let b_rep: Vec<_> = b.iter().cycle().take(400).copied().collect();
        let (lo, hi) = bootstrap_kappa_labels(&a_rep, &b_rep, 2000, 0.95, 3).unwrap();
        assert!(lo <= 0.5 && 0.5 <= hi, "({lo}, {hi})");
        assert_eq!(
            bootstrap_kappa_labels(&a_rep, &a_rep, 200, 0.95, 3).unwrap(),
            (1.0, 1.0)
        );
    }
}
