//! Allocation matrices and macro-averaged precision, recall and F1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::ClassId;
use crate::error::{domain, Result};

/// `J x J` counts, rows are actual classes and columns predicted ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let j = rows.len();
        if rows.iter().any(|r| r.len() != j) {
            return domain("confusion matrix must be square");
        }
        Ok(Self {
            n_classes: j,
            counts: rows.concat(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.n_classes + predicted]
    }

    pub fn add(&mut self, actual: ClassId, predicted: ClassId) -> Result<()> {
        let j = self.n_classes;
        for c in [actual, predicted] {
            if c.0 == 0 || c.0 as usize > j {
                return domain(format!("label {c} is outside 1..={j}"));
            }
        }
        self.counts[actual.index() * j + predicted.index()] += 1;
        Ok(())
    }

    /// `n_i0`
    pub fn row_total(&self, i: usize) -> u64 {
        (0..self.n_classes).map(|j| self.get(i, j)).sum()
    }

    /// `n_0i`
    pub fn col_total(&self, i: usize) -> u64 {
        (0..self.n_classes).map(|j| self.get(j, i)).sum()
    }

    /// `n_00`
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let diag: u64 = (0..self.n_classes).map(|i| self.get(i, i)).sum();
        diag as f64 / self.total() as f64
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.n_classes.max(1)).map(<[u64]>::to_vec).collect()
    }
}

pub fn confusion(actual: &[ClassId], predicted: &[ClassId], n_classes: usize) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return domain(format!(
            "{} actual labels but {} predictions",
            actual.len(),
            predicted.len()
        ));
    }
    let mut cm = ConfusionMatrix::zeros(n_classes);
    for (&a, &p) in actual.iter().zip(predicted) {
        cm.add(a, p)?;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfReport {
    pub per_class: Vec<Prf>,
    pub macro_avg: Prf,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class `P(i) = n_ii / n_0i`, `R(i) = n_ii / n_i0`,
/// `F1(i) = 2 n_ii / (n_i0 + n_0i)` and their unweighted means. An empty
/// margin gives 0.
pub fn prf(cm: &ConfusionMatrix) -> PrfReport {
    let per_class: Vec<Prf> = (0..cm.n_classes())
        .map(|i| {
            let hit = cm.get(i, i);
            let (row, col) = (cm.row_total(i), cm.col_total(i));
            Prf {
                precision: ratio(hit, col),
                recall: ratio(hit, row),
                f1: ratio(2 * hit, row + col),
            }
        })
        .collect();
    let j = per_class.len().max(1) as f64;
    let macro_avg = Prf {
        precision: per_class.iter().map(|p| p.precision).sum::<f64>() / j,
        recall: per_class.iter().map(|p| p.recall).sum::<f64>() / j,
        f1: per_class.iter().map(|p| p.f1).sum::<f64>() / j,
    };
    PrfReport { per_class, macro_avg }
}

/// Each value over the largest value.
pub fn efficiency_scores(values: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    if values.is_empty() {
        return domain("efficiency scores need at least one method");
    }
    if let Some((name, v)) = values.iter().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return domain(format!("efficiency needs positive values, {name} = {v}"));
    }
    let best = values.values().copied().fold(f64::MIN, f64::max);
    Ok(values.iter().map(|(k, v)| (k.clone(), v / best)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// Mean and standard error (sample SD over `sqrt(n)`; 0 for one value).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let se = if values.len() < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1.0)).sqrt() / n.sqrt()
        };
        Self { mean, se }
    }
}

/// Macro metrics of one method across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    #[serde(rename = "name")]
    pub method: String,
    #[serde(skip)]
    pub trials: usize,
    pub precision: MeanSe,
    pub recall: MeanSe,
    pub f1: MeanSe,
    #[serde(skip)]
    pub per_trial: Vec<Prf>,
}

pub fn aggregate_trials(reports: &[PrfReport], method: &str) -> Result<TrialReport> {
    if reports.is_empty() {
        return domain(format!("no trials to aggregate for {method}"));
    }
    let per_trial: Vec<Prf> = reports.iter().map(|r| r.macro_avg).collect();
    let column = |f: fn(&Prf) -> f64| MeanSe::of(&per_trial.iter().map(f).collect::<Vec<_>>());
    Ok(TrialReport {
        method: method.to_string(),
        trials: reports.len(),
        precision: column(|p| p.precision),
        recall: column(|p| p.recall),
        f1: column(|p| p.f1),
        per_trial,
    })
}
