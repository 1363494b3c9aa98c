//! Method registry and the trial loop shared by simulations and benchmarks.
//!
//! Each trial is a pure function of its index: data, folds and samples come
//! from substreams keyed by `(seed, trial)`, and trial results are collected
//! in trial order. The number of worker threads therefore never changes a
//! reported number.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{knn_from_ordering, select_k_cv_with, KnnConfig, Weighting};
use crate::binary::BinaryEvidenceClassifier;
use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{domain, Error, Result};
use crate::metrics::{aggregate_trials, confusion, prf, PrfReport, TrialReport};
use crate::multiclass::{decide, Reduction};
use crate::neighbors::neighbor_order;
use crate::rng::TrialRng;
use crate::simulation::{bayes_classify, GaussianClassSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Binary negative-binomial evidence classifier.
    Proposed,
    /// Plain k-NN, `k` by cross-validation.
    Knn,
    /// k-NN with `1 / n_i` vote weights, `k` by cross-validation.
    Wnn,
    /// Oracle rule from the true class densities (simulations only).
    Bayes,
    OvoPlus,
    OvrPlus,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Proposed,
        Method::Knn,
        Method::Wnn,
        Method::Bayes,
        Method::OvoPlus,
        Method::OvrPlus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Knn => "knn",
            Method::Wnn => "wnn",
            Method::Bayes => "bayes",
            Method::OvoPlus => "ovo_plus",
            Method::OvrPlus => "ovr_plus",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name.trim())
            .ok_or_else(|| {
                Error::Domain(format!(
                    "unknown method '{name}'; valid methods: {}",
                    Self::ALL.map(Method::name).join(", ")
                ))
            })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered list of distinct methods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSet(Vec<Method>);

impl MethodSet {
    pub fn new(methods: impl IntoIterator<Item = Method>) -> Result<Self> {
        let mut out = Vec::new();
        for m in methods {
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return domain("no methods selected");
        }
        Ok(Self(out))
    }

    /// Comma-separated method names.
    pub fn parse(list: &str) -> Result<Self> {
        Self::new(
            list.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(Method::parse)
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = Method> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, m: Method) -> bool {
        self.0.contains(&m)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Everything one trial needs.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    /// True class models; required by [`Method::Bayes`].
    pub bayes: Option<Vec<GaussianClassSpec>>,
    /// Stream for cross-validation folds. Every CV-tuned method starts from
    /// a fresh copy, so all of them see the same folds.
    pub cv_rng: TrialRng,
}

enum Predictor {
    Proposed(BinaryEvidenceClassifier),
    Knn { k: usize, weighting: Weighting },
    Bayes(Vec<GaussianClassSpec>),
    Reduction(Reduction),
}

impl Predictor {
    fn needs_neighbors(&self) -> bool {
        !matches!(self, Predictor::Bayes(_))
    }
}

fn build_predictor(method: Method, data: &TrialData, k_max: usize) -> Result<Predictor> {
    Ok(match method {
        Method::Proposed => Predictor::Proposed(BinaryEvidenceClassifier::fit(data.train.clone(), k_max)?),
        Method::Knn | Method::Wnn => {
            let weighting = if method == Method::Knn {
                Weighting::Uniform
            } else {
                Weighting::InverseClassSize
            };
            let k = select_k_cv_with(&data.train, &KnnConfig::new(weighting), &mut data.cv_rng.clone())?;
            Predictor::Knn { k, weighting }
        }
        Method::Bayes => match &data.bayes {
            Some(specs) => Predictor::Bayes(specs.clone()),
            None => return domain("the bayes oracle needs known class densities"),
        },
        Method::OvoPlus => Predictor::Reduction(Reduction::OvoPlus),
        Method::OvrPlus => Predictor::Reduction(Reduction::OvrPlus),
    })
}

/// Macro reports for each method, in `methods` order, on one train/test pair.
///
/// Every method shares one neighbor ordering per test point.
pub fn evaluate_trial(data: &TrialData, methods: &MethodSet, k_max: usize) -> Result<Vec<PrfReport>> {
    let predictors: Vec<Predictor> = methods
        .iter()
        .map(|m| build_predictor(m, data, k_max))
        .collect::<Result<_>>()?;
    let needs_neighbors = predictors.iter().any(Predictor::needs_neighbors);
    let train = &data.train;
    let mut predicted: Vec<Vec<ClassId>> = vec![Vec::with_capacity(data.test.len()); predictors.len()];
    for query in data.test.rows() {
        let ordering = if needs_neighbors {
            Some(neighbor_order(train, query)?)
        } else {
            None
        };
        for (slot, p) in predictors.iter().enumerate() {
            let class = match (p, &ordering) {
                (Predictor::Bayes(specs), _) => bayes_classify(specs, query),
                (Predictor::Proposed(clf), Some(o)) => clf.classify_from_ordering(o)?,
                (Predictor::Knn { k, weighting }, Some(o)) => knn_from_ordering(train, o, *k, *weighting)?,
                (Predictor::Reduction(r), Some(o)) => decide(*r, train, o, k_max)?.class,
                (_, None) => unreachable!("ordering computed whenever a neighbor method is present"),
            };
            predicted[slot].push(class);
        }
    }
    let n_classes = train.n_classes().max(data.test.n_classes());
    predicted
        .iter()
        .map(|p| Ok(prf(&confusion(data.test.labels(), p, n_classes)?)))
        .collect()
}

/// Runs `trials` trials on `jobs` threads and aggregates per method.
pub(crate) fn run_trials<F>(
    trials: usize,
    jobs: usize,
    methods: &MethodSet,
    make_trial: F,
    k_max: usize,
) -> Result<Vec<TrialReport>>
where
    F: Fn(usize) -> Result<TrialData> + Sync,
{
    let one = |t: usize| -> Result<Vec<PrfReport>> { evaluate_trial(&make_trial(t)?, methods, k_max) };
    let per_trial: Vec<Vec<PrfReport>> = if jobs <= 1 {
        (0..trials).map(one).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Domain(format!("cannot start {jobs} worker threads: {e}")))?;
        pool.install(|| (0..trials).into_par_iter().map(one).collect::<Result<_>>())?
    };
    methods
        .iter()
        .enumerate()
        .map(|(slot, m)| {
            let reports: Vec<PrfReport> = per_trial.iter().map(|t| t[slot].clone()).collect();
            aggregate_trials(&reports, m.name())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        let err = Method::parse("foo").unwrap_err().to_string();
        assert!(err.contains("proposed") && err.contains("ovr_plus"), "{err}");
    }

    #[test]
    fn method_set_dedups_and_keeps_order() {
        let s = MethodSet::parse("knn, proposed,knn").unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![Method::Knn, Method::Proposed]);
        assert!(MethodSet::parse("").is_err());
        assert!(MethodSet::parse("proposed,foo").is_err());
    }
}
