//! R-precision and Diversity over eval-space features.

use crate::eval::{EvalError, EvalFeatures};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_NEGATIVES: usize = 31;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Top-k retrieval accuracy: for each (text, motion) pair, rank the true
/// text plus `n_negatives` sampled mismatched texts by similarity to the
/// motion embedding; a hit means the true text lands in the top k.
/// Returns one accuracy per requested k, deterministic under the seed.
pub fn r_precision(
    texts: &EvalFeatures,
    motions: &EvalFeatures,
    ks: &[usize],
    n_negatives: usize,
    seed: u64,
) -> Result<Vec<f64>, EvalError> {
    let n = texts.rows.nrows();
    if motions.rows.nrows() != n {
        return Err(EvalError::DimensionMismatch { left: n, right: motions.rows.nrows() });
    }
    if n < n_negatives + 1 {
        return Err(EvalError::PoolTooSmall { have: n, need: n_negatives + 1 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = vec![0usize; ks.len()];
    let mut others: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        others.clear();
        others.extend((0..n).filter(|&j| j != i));
        // Partial Fisher-Yates for the first n_negatives entries.
        for slot in 0..n_negatives {
            let pick = rng.gen_range(slot..others.len());
            others.swap(slot, pick);
        }
        let motion_row = motions.rows.row(i);
        let true_sim = dot(texts.rows.row(i).as_slice().unwrap(), motion_row.as_slice().unwrap());
        let mut rank = 0usize;
        for &j in &others[..n_negatives] {
            let sim =
                dot(texts.rows.row(j).as_slice().unwrap(), motion_row.as_slice().unwrap());
            if sim > true_sim {
                rank += 1;
            }
        }
        for (slot, &k) in ks.iter().enumerate() {
            if rank < k {
                hits[slot] += 1;
            }
        }
    }
    Ok(hits.into_iter().map(|h| h as f64 / n as f64).collect())
}

/// Mean Euclidean distance over `n_pairs` disjoint random pairs.
pub fn diversity(
    features: &EvalFeatures,
    n_pairs: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    let n = features.rows.nrows();
    if n < 2 * n_pairs || n_pairs == 0 {
        return Err(EvalError::TooFewSamples {
            what: "diversity pairs".into(),
            have: n,
            need: 2 * n_pairs.max(1),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut total = 0.0;
    for p in 0..n_pairs {
        let a = features.rows.row(order[2 * p]);
        let b = features.rows.row(order[2 * p + 1]);
        let dist: f64 =
            a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        total += dist;
    }
    Ok(total / n_pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn unit_features(rows: Array2<f64>) -> EvalFeatures {
        let mut rows = rows;
        for mut r in rows.rows_mut() {
            let n = r.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            r.iter_mut().for_each(|v| *v /= n);
        }
        EvalFeatures { ids: (0..rows.nrows()).map(|i| i.to_string()).collect(), rows }
    }

    fn random_units(n: usize, d: usize, seed: u64) -> EvalFeatures {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        unit_features(Array2::from_shape_fn((n, d), |_| {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }))
    }

    #[test]
    fn oracle_embeddings_retrieve_perfectly() {
        let feats = random_units(64, 8, 0);
        let accs = r_precision(&feats, &feats, &[1, 2], DEFAULT_NEGATIVES, 7).unwrap();
        assert_eq!(accs, vec![1.0, 1.0]);
    }

    #[test]
    fn random_embeddings_hit_chance_level() {
        let texts = random_units(2000, 8, 1);
        let motions = random_units(2000, 8, 2);
        let accs = r_precision(&texts, &motions, &[1], DEFAULT_NEGATIVES, 3).unwrap();
        let p: f64 = 1.0 / 32.0;
        let sigma = (p * (1.0 - p) / 2000.0).sqrt();
        assert!(
            (accs[0] - p).abs() <= 3.0 * sigma,
            "top-1 {} vs chance {p} (3 sigma = {})",
            accs[0],
            3.0 * sigma
        );
    }

    #[test]
    fn topk_accuracies_are_monotone() {
        let texts = random_units(200, 8, 5);
        let motions = random_units(200, 8, 6);
        let accs = r_precision(&texts, &motions, &[1, 2, 5, 32], DEFAULT_NEGATIVES, 4).unwrap();
        for w in accs.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert_eq!(*accs.last().unwrap(), 1.0); // k = pool size always hits
    }

    #[test]
    fn r_precision_is_deterministic_and_needs_a_pool() {
        let texts = random_units(40, 4, 8);
        let motions = random_units(40, 4, 9);
        let a = r_precision(&texts, &motions, &[1], DEFAULT_NEGATIVES, 11).unwrap();
        let b = r_precision(&texts, &motions, &[1], DEFAULT_NEGATIVES, 11).unwrap();
        assert_eq!(a, b);
        let tiny = random_units(10, 4, 10);
        assert!(matches!(
            r_precision(&tiny, &tiny, &[1], DEFAULT_NEGATIVES, 0),
            Err(EvalError::PoolTooSmall { .. })
        ));
    }

    #[test]
    fn identical_features_have_zero_diversity() {
        let rows = Array2::from_elem((20, 4), 0.5);
        let feats = EvalFeatures { ids: vec![], rows };
        assert_eq!(diversity(&feats, 10, 0).unwrap(), 0.0);
    }

    #[test]
    fn antipodal_clusters_give_distance_two() {
        // Pairs forced across two antipodal unit clusters: distance 2.
        let mut rows = Array2::zeros((8, 4));
        for i in 0..8 {
            rows[(i, 0)] = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        let feats = EvalFeatures { ids: vec![], rows };
        // Find a seed whose shuffle pairs opposite-sign rows everywhere.
        let mut found = None;
        'outer: for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut order: Vec<usize> = (0..8).collect();
            order.shuffle(&mut rng);
            for p in 0..4 {
                if order[2 * p] % 2 == order[2 * p + 1] % 2 {
                    continue 'outer;
                }
            }
            found = Some(seed);
            break;
        }
        let seed = found.expect("some seed pairs across clusters");
        assert!((diversity(&feats, 4, seed).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn subsampled_diversity_tracks_exhaustive_mean() {
        let feats = random_units(600, 8, 12);
        // Exhaustive all-pairs mean distance.
        let n = feats.rows.nrows();
        let mut total = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                let d: f64 = feats
                    .rows
                    .row(i)
                    .iter()
                    .zip(feats.rows.row(j).iter())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                total += d;
                count += 1;
            }
        }
        let exhaustive = total / count as f64;
        let sampled = diversity(&feats, 300, 13).unwrap();
        assert!(
            (sampled - exhaustive).abs() / exhaustive < 0.05,
            "sampled {sampled} vs exhaustive {exhaustive}"
        );
    }

    #[test]
    fn diversity_is_rotation_invariant() {
        let feats = random_units(64, 4, 14);
        // Givens rotation in coordinates (0, 2).
        let theta: f64 = 1.1;
        let (c, s) = (theta.cos(), theta.sin());
        let mut rotated = feats.rows.clone();
        for mut row in rotated.rows_mut() {
            let a = row[0];
            let b = row[2];
            row[0] = c * a - s * b;
            row[2] = s * a + c * b;
        }
        let rot = EvalFeatures { ids: vec![], rows: rotated };
        let d0 = diversity(&feats, 32, 77).unwrap();
        let d1 = diversity(&rot, 32, 77).unwrap();
        assert!((d0 - d1).abs() < 1e-6);
    }
}
