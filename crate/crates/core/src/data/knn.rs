use rand::Rng;

use super::{DataError, SampleSet, NUM_FEATURES};
use crate::forecaster::FeatureScaling;

/// Indices of the `k` rows closest to `query` in Euclidean distance,
/// nearest first; ties go to the earlier row.
pub fn nearest_neighbors(rows: &[Vec<f64>], query: &[f64], k: usize) -> Vec<usize> {
    let mut dist: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        .collect();
    let k = k.min(dist.len());
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() && k > 0 {
        dist.select_nth_unstable_by(k - 1, cmp);
    }
    dist.truncate(k);
    dist.sort_by(cmp);
    dist.into_iter().map(|(_, i)| i).collect()
}

/// `count` realizations drawn uniformly with replacement from the `k`
/// training hours whose standardized features are closest to `query`
/// (raw features). Each draw has probability `1 / count`.
///
/// `train_std` must be `train.standardized_features()`.
pub fn knn_scenarios<R: Rng>(
    train: &SampleSet,
    train_std: &[Vec<f64>],
    query: &[f64],
    k: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>, DataError> {
    if train.is_empty() || train_std.is_empty() {
        return Err(DataError::EmptyTrainSet);
    }
    if k == 0 || k > train.len() {
        return Err(DataError::TooSmall(format!("k = {k} with {} training samples", train.len())));
    }
    let q = match &train.scaling {
        Some(sc) => sc.apply(query),
        None => FeatureScaling::identity(NUM_FEATURES).apply(query),
    };
    let nn = nearest_neighbors(train_std, &q, k);
    Ok((0..count).map(|_| train.records[nn[rng.gen_range(0..nn.len())]].wind).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tests::hourly;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_checked_neighbor_order() {
        let rows = vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![1.0, 1.0]];
        // Squared distances from (1, 0): 1, 20, 1.
        assert_eq!(nearest_neighbors(&rows, &[1.0, 0.0], 2), vec![0, 2]);
        assert_eq!(nearest_neighbors(&rows, &[3.0, 3.0], 1), vec![1]);
        assert_eq!(nearest_neighbors(&rows, &[3.0, 3.0], 5), vec![1, 2, 0]);
    }

    fn identity_set() -> SampleSet {
        let mut set = hourly(48, |i| (i % 40) as f64);
        set.scaling = Some(FeatureScaling::identity(4));
        set
    }

    #[test]
    fn single_neighbor_repeats_its_realization() {
        let set = identity_set();
        let std = set.standardized_features();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = set.records[7].features;
        let draws = knn_scenarios(&set, &std, &q, 1, 20, &mut rng).unwrap();
        assert!(draws.iter().all(|&y| y == set.records[7].wind));
    }

    #[test]
    fn all_neighbors_draw_from_the_marginal_and_are_seeded() {
        let set = identity_set();
        let std = set.standardized_features();
        let q = [0.0; 4];
        let a = knn_scenarios(&set, &std, &q, 48, 200, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = knn_scenarios(&set, &std, &q, 48, 200, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let winds = set.winds();
        assert!(a.iter().all(|y| winds.contains(y)));
        assert!(a.iter().any(|&y| y > 20.0) && a.iter().any(|&y| y < 20.0));
    }

    #[test]
    fn empty_train_set_is_rejected() {
        let set = SampleSet::new(Vec::new(), 40.0).unwrap();
        let err = knn_scenarios(&set, &[], &[0.0; 4], 1, 1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert_eq!(err, DataError::EmptyTrainSet);
    }
}
