#![allow(dead_code)]

use nbknn_core::rng::{Purpose, TrialRng};
use nbknn_core::{ClassId, LabeledDataset};

/// Random labeled points with integer coordinates in `0..span`, every class
/// present at least once.
pub fn integer_fixture(rng: &mut TrialRng, n: usize, dim: usize, n_classes: usize, span: u64) -> LabeledDataset {
    assert!(n >= n_classes);
    let points: Vec<f64> = (0..n * dim).map(|_| rng.below(span) as f64).collect();
    let mut labels: Vec<ClassId> = (0..n)
        .map(|i| {
            if i < n_classes {
                ClassId::from_index(i)
            } else {
                ClassId::from_index(rng.below(n_classes as u64) as usize)
            }
        })
        .collect();
    rng.shuffle(&mut labels);
    LabeledDataset::new(dim, points, labels, n_classes).unwrap()
}

/// Continuous coordinates, so distances are distinct with probability one.
pub fn continuous_fixture(rng: &mut TrialRng, counts: &[usize], dim: usize) -> LabeledDataset {
    let n: usize = counts.iter().sum();
    let mut points = vec![0.0; n * dim];
    rng.fill_normal(&mut points);
    let mut labels = Vec::with_capacity(n);
    for (c, &m) in counts.iter().enumerate() {
        labels.extend(std::iter::repeat_n(ClassId::from_index(c), m));
    }
    rng.shuffle(&mut labels);
    LabeledDataset::new(dim, points, labels, counts.len()).unwrap()
}

pub fn fixture_rng(seed: u64) -> TrialRng {
    TrialRng::new(seed, 0, Purpose::Fixture)
}

/// Same points with rows reordered by `perm` (new row `i` is old row `perm[i]`).
pub fn permute_rows(data: &LabeledDataset, perm: &[usize]) -> LabeledDataset {
    data.subset(perm)
}

/// Two-class dataset holding the rows of `data` whose class is in
/// `group_a` or `group_b`; `group_a` becomes class 1 and `group_b` class 2.
pub fn two_group_dataset(data: &LabeledDataset, group_a: &[ClassId], group_b: &[ClassId]) -> LabeledDataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..data.len() {
        let l = data.label(i);
        let new = if group_a.contains(&l) {
            ClassId(1)
        } else if group_b.contains(&l) {
            ClassId(2)
        } else {
            continue;
        };
        rows.push(data.row(i).to_vec());
        labels.push(new);
    }
    LabeledDataset::from_rows(&rows, labels, 2).unwrap()
}
