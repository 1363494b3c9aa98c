//! Exact neighbor orderings and the minority-count statistic `N_k(x)`.

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{domain, Error, Result};

/// Distance used to rank training points.
///
/// `rank_key` only has to be monotone in the true distance; orderings are
/// built from it and `distance` maps it back for reporting.
pub trait Metric: Sync {
    fn rank_key(&self, a: &[f64], b: &[f64]) -> f64;
    fn distance(&self, key: f64) -> f64;
}

/// Euclidean distance, ranked by the squared distance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl Metric for Euclidean {
    fn rank_key(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    fn distance(&self, key: f64) -> f64 {
        key.sqrt()
    }
}

/// Training indices sorted by distance to a query, ties by ascending index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborOrdering {
    order: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborOrdering {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Sorts all training points by Euclidean distance to `query`.
pub fn neighbor_order(train: &LabeledDataset, query: &[f64]) -> Result<NeighborOrdering> {
    neighbor_order_with(train, query, &Euclidean)
}

pub fn neighbor_order_with<M: Metric + ?Sized>(
    train: &LabeledDataset,
    query: &[f64],
    metric: &M,
) -> Result<NeighborOrdering> {
    if train.is_empty() {
        return domain("cannot order neighbors in an empty training set");
    }
    if query.len() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            actual: query.len(),
        });
    }
    let mut keyed: Vec<(f64, usize)> = train
        .rows()
        .enumerate()
        .map(|(i, row)| (metric.rank_key(row, query), i))
        .collect();
    // (key, index) is a total order, so an unstable sort is deterministic.
    keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (order, distances) = keyed
        .into_iter()
        .map(|(key, i)| (i, metric.distance(key)))
        .unzip();
    Ok(NeighborOrdering { order, distances })
}

/// Realized value of `N_k(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinorityCountStat {
    pub k: u64,
    pub n_obs: u64,
}

/// 1-based position in `ordering` at which the `k`-th point of `minority`
/// is met.
pub fn count_to_kth_minority(
    ordering: &NeighborOrdering,
    labels: &[ClassId],
    minority: ClassId,
    k: u64,
) -> Result<MinorityCountStat> {
    if k == 0 {
        return domain("k must be at least 1");
    }
    let mut seen = 0u64;
    for (pos, &idx) in ordering.order.iter().enumerate() {
        if labels[idx] == minority {
            seen += 1;
            if seen == k {
                return Ok(MinorityCountStat {
                    k,
                    n_obs: pos as u64 + 1,
                });
            }
        }
    }
    Err(Error::Capacity {
        needed: k as usize,
        available: seen as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds1(xs: &[f64], labels: &[u32]) -> LabeledDataset {
        let j = labels.iter().copied().max().unwrap_or(1) as usize;
        LabeledDataset::new(1, xs.to_vec(), labels.iter().map(|&l| ClassId(l)).collect(), j).unwrap()
    }

    #[test]
    fn equidistant_tie_breaks_by_index() {
        let ds = ds1(&[0.0, 2.0, 5.0], &[1, 1, 1]);
        let o = neighbor_order(&ds, &[1.0]).unwrap();
        assert_eq!(o.order(), &[0, 1, 2]);
        assert_eq!(o.distances(), &[1.0, 1.0, 4.0]);
        let ds = ds1(&[2.0, 0.0, 5.0], &[1, 1, 1]);
        let o = neighbor_order(&ds, &[1.0]).unwrap();
        assert_eq!(o.order(), &[0, 1, 2]);
    }

    #[test]
    fn self_distance_first() {
        let ds = ds1(&[3.0, 7.0, -1.0], &[1, 1, 1]);
        let o = neighbor_order(&ds, &[7.0]).unwrap();
        assert_eq!(o.order()[0], 1);
        assert_eq!(o.distances()[0], 0.0);
    }

    #[test]
    fn pythagorean_distance() {
        let ds = LabeledDataset::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]], vec![ClassId(1); 2], 1).unwrap();
        let o = neighbor_order(&ds, &[0.0, 0.0]).unwrap();
        assert_eq!(o.distances(), &[0.0, 5.0]);
    }

    #[test]
    fn ordering_errors() {
        let ds = ds1(&[0.0], &[1]);
        assert!(matches!(
            neighbor_order(&ds, &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let empty = LabeledDataset::new(1, vec![], vec![], 1).unwrap();
        assert!(neighbor_order(&empty, &[0.0]).is_err());
    }

    #[test]
    fn counting_examples() {
        // labels along the ordering: maj, min, maj, min
        let ds = ds1(&[0.0, 1.0, 2.0, 3.0], &[1, 2, 1, 2]);
        let o = neighbor_order(&ds, &[0.0]).unwrap();
        let m = ClassId(2);
        assert_eq!(count_to_kth_minority(&o, ds.labels(), m, 1).unwrap().n_obs, 2);
        assert_eq!(count_to_kth_minority(&o, ds.labels(), m, 2).unwrap().n_obs, 4);
        assert!(matches!(
            count_to_kth_minority(&o, ds.labels(), m, 3),
            Err(Error::Capacity { needed: 3, available: 2 })
        ));

        let all_min = ds1(&[0.0, 1.0, 2.0], &[2, 2, 2]);
        let o = neighbor_order(&all_min, &[0.0]).unwrap();
        assert_eq!(count_to_kth_minority(&o, all_min.labels(), m, 3).unwrap().n_obs, 3);
    }
}
