//! Binary classification by the strongest negative-binomial evidence.
//!
//! For a query, neighbors are scanned in order of distance. For every
//! `k = 1..=k_max` the number of neighbors `N_k` needed to see `k` minority
//! points is turned into a mid-p value `e_k` under the null that neighbors
//! are minority with probability `p0 = n2 / (n1 + n2)`. Large `e_k` is
//! evidence for the majority class, small `e_k` for the minority class.
//! The query goes to the minority class iff `1 - min e_k > max e_k`, with
//! both extremes starting from 0.5.

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{domain, Error, Result};
use crate::negbin::{adjusted_pvalue, NegBinParams};
use crate::neighbors::{neighbor_order, NeighborOrdering};

pub const DEFAULT_K_MAX: usize = 45;

/// Role of a training point in one binary round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Majority,
    Minority,
    /// Not part of this round (inactive class in a multi-class reduction).
    Excluded,
}

/// Which side a decision favors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Majority,
    Minority,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidenceTerm {
    pub k: u64,
    pub n_obs: u64,
    pub e: f64,
}

/// Strongest majority evidence `e1` and strongest minority evidence `e2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidencePair {
    pub e1: f64,
    pub e2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_k: Option<Vec<EvidenceTerm>>,
}

impl EvidencePair {
    /// Minority iff `e2 > e1`; equality goes to the majority.
    pub fn decision(&self) -> Role {
        if self.e1 < self.e2 {
            Role::Minority
        } else {
            Role::Majority
        }
    }

    /// Evidence in favor of `role`.
    pub fn evidence_for(&self, role: Role) -> f64 {
        match role {
            Role::Majority => self.e1,
            Role::Minority => self.e2,
        }
    }
}

/// Null parameters for one binary round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RoundParams {
    pub p0: f64,
    pub k_max_eff: u64,
}

impl RoundParams {
    pub fn new(n_majority: usize, n_minority: usize, k_max: usize) -> Result<Self> {
        if n_minority == 0 || n_majority == 0 {
            return domain("both sides of a binary round need training points");
        }
        if k_max == 0 {
            return domain("k_max must be at least 1");
        }
        Ok(Self {
            p0: n_minority as f64 / (n_majority + n_minority) as f64,
            k_max_eff: k_max.min(n_minority) as u64,
        })
    }
}

/// Runs the `k = 1..=k_max_eff` sweep over an ordering.
///
/// Positions count only points whose side is not `Excluded`, so the sweep
/// over a full ordering equals the sweep over the ordering of the restricted
/// training set.
pub(crate) fn sweep_evidence(
    order: &[usize],
    side_of: impl Fn(usize) -> Side,
    params: RoundParams,
    keep_trace: bool,
) -> Result<EvidencePair> {
    let mut e_min = 0.5f64;
    let mut e_max = 0.5f64;
    let mut trace = keep_trace.then(|| Vec::with_capacity(params.k_max_eff as usize));
    let mut position = 0u64;
    let mut k = 0u64;
    for &idx in order {
        match side_of(idx) {
            Side::Excluded => continue,
            Side::Majority => position += 1,
            Side::Minority => {
                position += 1;
                k += 1;
                let e = adjusted_pvalue(&NegBinParams::new(k, params.p0)?, position)?;
                if e < e_min {
                    e_min = e;
                }
                if e > e_max {
                    e_max = e;
                }
                if let Some(t) = trace.as_mut() {
                    t.push(EvidenceTerm { k, n_obs: position, e });
                }
                if k == params.k_max_eff {
                    return Ok(EvidencePair {
                        e1: e_max,
                        e2: 1.0 - e_min,
                        per_k: trace,
                    });
                }
            }
        }
    }
    Err(Error::Capacity {
        needed: params.k_max_eff as usize,
        available: k as usize,
    })
}

/// A fitted two-class evidence classifier.
#[derive(Debug, Clone)]
pub struct BinaryEvidenceClassifier {
    train: LabeledDataset,
    majority: ClassId,
    minority: ClassId,
    params: RoundParams,
    k_max_config: usize,
    keep_trace: bool,
}

impl BinaryEvidenceClassifier {
    /// Assigns roles by training count; on equal counts the larger label is
    /// the minority.
    pub fn fit(train: LabeledDataset, k_max: usize) -> Result<Self> {
        if train.n_classes() != 2 {
            return domain(format!(
                "binary classifier needs exactly 2 classes, got {}",
                train.n_classes()
            ));
        }
        let (c1, c2) = (ClassId(1), ClassId(2));
        let (n1, n2) = (train.count(c1), train.count(c2));
        if n1 == 0 || n2 == 0 {
            return domain(format!("both classes need training points, counts ({n1}, {n2})"));
        }
        let (majority, minority) = if n1 >= n2 { (c1, c2) } else { (c2, c1) };
        let params = RoundParams::new(train.count(majority), train.count(minority), k_max)?;
        Ok(Self {
            train,
            majority,
            minority,
            params,
            k_max_config: k_max,
            keep_trace: false,
        })
    }

    /// Keep the per-k `(k, n_obs, e_k)` trace in every evidence pair.
    pub fn with_trace(mut self, keep: bool) -> Self {
        self.keep_trace = keep;
        self
    }

    pub fn train(&self) -> &LabeledDataset {
        &self.train
    }

    pub fn majority(&self) -> ClassId {
        self.majority
    }

    pub fn minority(&self) -> ClassId {
        self.minority
    }

    pub fn p0(&self) -> f64 {
        self.params.p0
    }

    pub fn k_max_config(&self) -> usize {
        self.k_max_config
    }

    pub fn k_max_eff(&self) -> usize {
        self.params.k_max_eff as usize
    }

    pub fn evidence_pair(&self, query: &[f64]) -> Result<EvidencePair> {
        let ordering = neighbor_order(&self.train, query)?;
        self.evidence_from_ordering(&ordering)
    }

    /// Evidence from a precomputed ordering of this classifier's training set.
    pub fn evidence_from_ordering(&self, ordering: &NeighborOrdering) -> Result<EvidencePair> {
        let labels = self.train.labels();
        let minority = self.minority;
        sweep_evidence(
            ordering.order(),
            |i| {
                if labels[i] == minority {
                    Side::Minority
                } else {
                    Side::Majority
                }
            },
            self.params,
            self.keep_trace,
        )
    }

    pub fn class_for(&self, role: Role) -> ClassId {
        match role {
            Role::Majority => self.majority,
            Role::Minority => self.minority,
        }
    }

    pub fn classify(&self, query: &[f64]) -> Result<ClassId> {
        Ok(self.class_for(self.evidence_pair(query)?.decision()))
    }

    pub fn classify_from_ordering(&self, ordering: &NeighborOrdering) -> Result<ClassId> {
        Ok(self.class_for(self.evidence_from_ordering(ordering)?.decision()))
    }
}

/// Convenience form of [`BinaryEvidenceClassifier::fit`].
pub fn fit_binary(train: LabeledDataset, k_max: usize) -> Result<BinaryEvidenceClassifier> {
    BinaryEvidenceClassifier::fit(train, k_max)
}
