//! Repeated balanced-test evaluation on a user-supplied labeled dataset.
//!
//! Each trial draws a split, standardizes with the training part only and
//! evaluates every method on the balanced test part.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data_io::{balanced_split, standardize, CsvDataset, SplitSpec};
use crate::error::{domain, Result};
use crate::experiment::{run_trials, Method, MethodSet, TrialData};
use crate::metrics::{efficiency_scores, TrialReport};
use crate::rng::{Purpose, TrialRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub split: SplitSpec,
    pub k_max: usize,
    pub methods: MethodSet,
    pub jobs: usize,
}

impl BenchmarkConfig {
    /// Binary data: proposed, knn, wnn. More classes: both reductions, knn, wnn.
    pub fn default_methods(n_classes: usize) -> MethodSet {
        let methods = if n_classes <= 2 {
            vec![Method::Proposed, Method::Knn, Method::Wnn]
        } else {
            vec![Method::OvoPlus, Method::OvrPlus, Method::Knn, Method::Wnn]
        };
        MethodSet::new(methods).expect("nonempty")
    }
}

/// Per-method efficiency for each metric: value over the best method's value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyTable {
    pub precision: BTreeMap<String, f64>,
    pub recall: BTreeMap<String, f64>,
    pub f1: BTreeMap<String, f64>,
}

impl EfficiencyTable {
    pub fn from_reports(reports: &[TrialReport]) -> Result<Self> {
        let column = |f: fn(&TrialReport) -> f64| -> Result<BTreeMap<String, f64>> {
            let values = reports.iter().map(|r| (r.method.clone(), f(r))).collect();
            efficiency_scores(&values)
        };
        Ok(Self {
            precision: column(|r| r.precision.mean)?,
            recall: column(|r| r.recall.mean)?,
            f1: column(|r| r.f1.mean)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOutcome {
    pub test_per_class: usize,
    pub reports: Vec<TrialReport>,
    /// `None` when some method scored exactly zero on a metric.
    pub efficiency: Option<EfficiencyTable>,
}

pub fn run_benchmark(data: &CsvDataset, config: &BenchmarkConfig) -> Result<BenchmarkOutcome> {
    let split = config.split;
    split.validate()?;
    let ds = &data.data;
    if ds.n_classes() < 2 {
        return domain(format!("benchmark needs at least 2 classes, found {}", ds.n_classes()));
    }
    if config.methods.contains(Method::Bayes) {
        return domain("the bayes oracle is only available in simulations");
    }
    if config.methods.contains(Method::Proposed) && ds.n_classes() != 2 {
        return domain(format!(
            "method 'proposed' is binary; this dataset has {} classes (use ovo_plus or ovr_plus)",
            ds.n_classes()
        ));
    }
    let test_per_class = split.test_per_class(ds.class_counts())?;
    let reports = run_trials(
        split.trials,
        config.jobs,
        &config.methods,
        |trial| {
            let (train, test) = balanced_split(ds, &split, trial)?;
            let (train, mut others, _) = standardize(&train, &[&test])?;
            Ok(TrialData {
                train,
                test: others.remove(0),
                bayes: None,
                cv_rng: TrialRng::new(split.seed, trial as u64, Purpose::CrossValidation),
            })
        },
        config.k_max,
    )?;
    let efficiency = EfficiencyTable::from_reports(&reports).ok();
    Ok(BenchmarkOutcome {
        test_per_class,
        reports,
        efficiency,
    })
}
