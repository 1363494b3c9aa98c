//! Plain and class-weighted k-NN comparators with cross-validated `k`.

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{domain, Result};
use crate::metrics::{confusion, prf};
use crate::neighbors::{neighbor_order, NeighborOrdering};
use crate::rng::{Purpose, TrialRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// One vote per neighbor.
    Uniform,
    /// A neighbor of class `i` votes with mass `1 / n_i`.
    InverseClassSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub weighting: Weighting,
    pub cv_folds: usize,
    pub k_grid: Vec<usize>,
}

impl KnnConfig {
    pub fn new(weighting: Weighting) -> Self {
        Self {
            k: 1,
            weighting,
            cv_folds: 5,
            k_grid: (1..=31).step_by(2).collect(),
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }
}

/// Running per-class vote counts over an ordering prefix.
struct Votes<'a> {
    counts: Vec<u64>,
    class_sizes: &'a [usize],
    weighting: Weighting,
}

impl<'a> Votes<'a> {
    fn new(train: &'a LabeledDataset, weighting: Weighting) -> Self {
        Self {
            counts: vec![0; train.n_classes()],
            class_sizes: train.class_counts(),
            weighting,
        }
    }

    fn push(&mut self, label: ClassId) {
        self.counts[label.index()] += 1;
    }

    /// `a` strictly outvotes `b`. Weighted votes `c_a / n_a` vs `c_b / n_b`
    /// are compared by cross-multiplication, so equal masses tie exactly.
    fn beats(&self, a: usize, b: usize) -> bool {
        match self.weighting {
            Weighting::Uniform => self.counts[a] > self.counts[b],
            Weighting::InverseClassSize => {
                let lhs = self.counts[a] as u128 * self.class_sizes[b] as u128;
                let rhs = self.counts[b] as u128 * self.class_sizes[a] as u128;
                lhs > rhs
            }
        }
    }

    /// Winning class; ties go to the smaller class id.
    fn winner(&self) -> ClassId {
        let mut best = 0;
        for c in 1..self.counts.len() {
            if self.beats(c, best) {
                best = c;
            }
        }
        ClassId::from_index(best)
    }
}

pub fn knn_classify(train: &LabeledDataset, query: &[f64], cfg: &KnnConfig) -> Result<ClassId> {
    let ordering = neighbor_order(train, query)?;
    knn_from_ordering(train, &ordering, cfg.k, cfg.weighting)
}

pub fn knn_from_ordering(
    train: &LabeledDataset,
    ordering: &NeighborOrdering,
    k: usize,
    weighting: Weighting,
) -> Result<ClassId> {
    if k == 0 || k > ordering.len() {
        return domain(format!("k = {k} must lie in 1..={}", ordering.len()));
    }
    let mut votes = Votes::new(train, weighting);
    for &i in &ordering.order()[..k] {
        votes.push(train.label(i));
    }
    Ok(votes.winner())
}

/// Predictions for every `k` in `ks` (ascending) from one ordering prefix.
fn knn_sweep(
    train: &LabeledDataset,
    ordering: &NeighborOrdering,
    ks: &[usize],
    weighting: Weighting,
) -> Vec<ClassId> {
    let mut votes = Votes::new(train, weighting);
    let mut out = Vec::with_capacity(ks.len());
    let mut next = 0;
    for (pos, &i) in ordering.order().iter().enumerate() {
        votes.push(train.label(i));
        while next < ks.len() && ks[next] == pos + 1 {
            out.push(votes.winner());
            next += 1;
        }
        if next == ks.len() {
            break;
        }
    }
    out
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// continuing the deal across classes in class-id order.
pub fn stratified_folds(train: &LabeledDataset, folds: usize, rng: &mut TrialRng) -> Result<Vec<usize>> {
    if folds < 2 {
        return domain("cross-validation needs at least 2 folds");
    }
    if let Some(c) = train.class_ids().find(|&c| train.count(c) < folds) {
        return domain(format!(
            "class {c} has {} members, fewer than {folds} folds",
            train.count(c)
        ));
    }
    let mut assignment = vec![0; train.len()];
    let mut deal = 0;
    for class in train.class_ids() {
        let mut members: Vec<usize> = (0..train.len()).filter(|&i| train.label(i) == class).collect();
        rng.shuffle(&mut members);
        for i in members {
            assignment[i] = deal % folds;
            deal += 1;
        }
    }
    Ok(assignment)
}

/// Grid value with the best mean macro F1 over stratified folds; ties go to
/// the smaller `k`.
pub fn select_k_cv(train: &LabeledDataset, cfg: &KnnConfig, seed: u64) -> Result<usize> {
    select_k_cv_with(train, cfg, &mut TrialRng::new(seed, 0, Purpose::CrossValidation))
}

pub fn select_k_cv_with(train: &LabeledDataset, cfg: &KnnConfig, rng: &mut TrialRng) -> Result<usize> {
    let mut grid = cfg.k_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    if grid.first() == Some(&0) {
        return domain("k grid values must be positive");
    }
    if grid.is_empty() {
        return domain("k grid is empty");
    }
    let assignment = stratified_folds(train, cfg.cv_folds, rng)?;
    let min_fold_train = (0..cfg.cv_folds)
        .map(|f| assignment.iter().filter(|&&a| a != f).count())
        .min()
        .unwrap_or(0);
    grid.retain(|&k| k <= min_fold_train);
    if grid.is_empty() {
        return domain(format!("no grid value fits a fold training set of {min_fold_train}"));
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }

    let mut f1_sums = vec![0.0; grid.len()];
    for fold in 0..cfg.cv_folds {
        let (fit_idx, val_idx): (Vec<usize>, Vec<usize>) =
            (0..train.len()).partition(|&i| assignment[i] != fold);
        let fit = train.subset(&fit_idx);
        let actual: Vec<ClassId> = val_idx.iter().map(|&i| train.label(i)).collect();
        let mut predicted = vec![Vec::with_capacity(val_idx.len()); grid.len()];
        for &i in &val_idx {
            let ordering = neighbor_order(&fit, train.row(i))?;
            for (slot, p) in knn_sweep(&fit, &ordering, &grid, cfg.weighting).into_iter().enumerate() {
                predicted[slot].push(p);
            }
        }
        for (slot, preds) in predicted.iter().enumerate() {
            let cm = confusion(&actual, preds, train.n_classes())?;
            f1_sums[slot] += prf(&cm).macro_avg.f1;
        }
    }
    let mut best = 0;
    for slot in 1..grid.len() {
        if f1_sums[slot] > f1_sums[best] {
            best = slot;
        }
    }
    Ok(grid[best])
}
