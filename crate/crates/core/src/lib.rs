//! Nearest-neighbor classification for imbalanced data driven by
//! negative-binomial evidence.
//!
//! For a query point the neighbors are scanned outward until `k` minority
//! points have been seen. Under the null that the neighborhood mixes the
//! classes in their training proportions, the number of neighbors needed is
//! negative binomial; its mid-p value measures how strongly the neighborhood
//! favors one class. The binary classifier takes the strongest evidence over
//! `k = 1..=k_max` for each side ([`binary`]); [`multiclass`] extends it with
//! ordered one-vs-one and one-vs-rest reductions.
//!
//! The remaining modules cover the evaluation protocol: k-NN baselines,
//! macro precision/recall/F1, Gaussian simulations with a Bayes oracle, CSV
//! ingestion and the repeated balanced-test benchmark.

pub mod baselines;
pub mod benchmark;
pub mod binary;
pub mod data_io;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod multiclass;
pub mod negbin;
pub mod neighbors;
pub mod rng;
pub mod simulation;

pub use baselines::{knn_classify, select_k_cv, KnnConfig, Weighting};
pub use benchmark::{run_benchmark, BenchmarkConfig, BenchmarkOutcome, EfficiencyTable};
pub use binary::{fit_binary, BinaryEvidenceClassifier, EvidencePair, EvidenceTerm, Role, DEFAULT_K_MAX};
pub use data_io::{balanced_split, load_csv, standardize, CsvDataset, SplitManifest, SplitSpec, StandardizationParams};
pub use dataset::{ClassId, LabeledDataset};
pub use error::{Error, Result};
pub use experiment::{evaluate_trial, Method, MethodSet, TrialData};
pub use metrics::{aggregate_trials, confusion, efficiency_scores, prf, ConfusionMatrix, MeanSe, Prf, PrfReport, TrialReport};
pub use multiclass::{classify_ovo_plus, classify_ovr_plus, resolve_by_max_evidence, MulticlassDecision, Reduction, WinnerSet};
pub use negbin::{adjusted_pvalue, cdf_below, log_pmf, NegBinParams};
pub use neighbors::{count_to_kth_minority, neighbor_order, Euclidean, Metric, MinorityCountStat, NeighborOrdering};
pub use simulation::{
    bayes_classify, run_experiment, run_location_experiment, run_scale_experiment, sample_mixture, Design,
    ExperimentConfig, GaussianClassSpec, MinorityRole,
};
