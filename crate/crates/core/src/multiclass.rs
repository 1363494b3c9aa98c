//! Multi-class reductions of the binary evidence classifier.
//!
//! Both reductions work from a single neighbor ordering of the full training
//! set per query. A binary round between two groups of classes scans that
//! ordering and skips points of inactive classes, which is the same as
//! ordering the restricted training set (relative index order is kept).
//! Every round recomputes `p0` and the `k_max` cap from the counts of the
//! classes it involves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::binary::{sweep_evidence, Role, RoundParams, Side};
use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{domain, Result};
use crate::neighbors::{neighbor_order, NeighborOrdering};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    OvoPlus,
    OvrPlus,
}

impl Reduction {
    pub fn name(self) -> &'static str {
        match self {
            Reduction::OvoPlus => "ovo_plus",
            Reduction::OvrPlus => "ovr_plus",
        }
    }
}

/// Classes that won their rounds, with the evidence each class earned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinnerSet {
    pub classes: Vec<ClassId>,
    pub evidences: BTreeMap<ClassId, f64>,
}

/// Final label plus the evidence of the last round that decided it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassDecision {
    pub class: ClassId,
    pub evidences: BTreeMap<ClassId, f64>,
    /// Number of rounds of binary classifications performed.
    pub depth: usize,
}

pub fn classify_ovo_plus(train: &LabeledDataset, query: &[f64], k_max: usize) -> Result<ClassId> {
    let ordering = neighbor_order(train, query)?;
    Ok(ovo_plus_from_ordering(train, &ordering, k_max)?.class)
}

pub fn classify_ovr_plus(train: &LabeledDataset, query: &[f64], k_max: usize) -> Result<ClassId> {
    let ordering = neighbor_order(train, query)?;
    Ok(ovr_plus_from_ordering(train, &ordering, k_max)?.class)
}

pub fn decide(
    reduction: Reduction,
    train: &LabeledDataset,
    ordering: &NeighborOrdering,
    k_max: usize,
) -> Result<MulticlassDecision> {
    match reduction {
        Reduction::OvoPlus => ovo_plus_from_ordering(train, ordering, k_max),
        Reduction::OvrPlus => ovr_plus_from_ordering(train, ordering, k_max),
    }
}

/// Argmax of the recorded evidence; ties go to the smaller class id.
pub fn resolve_by_max_evidence(per_class_evidence: &BTreeMap<ClassId, f64>) -> Result<ClassId> {
    let mut best: Option<(ClassId, f64)> = None;
    for (&class, &e) in per_class_evidence {
        match best {
            Some((_, b)) if e <= b => {}
            _ => best = Some((class, e)),
        }
    }
    match best {
        Some((class, _)) => Ok(class),
        None => domain("cannot resolve a winner from an empty evidence map"),
    }
}

fn all_classes_nonempty(train: &LabeledDataset) -> Result<Vec<ClassId>> {
    if train.n_classes() < 2 {
        return domain(format!("need at least 2 classes, got {}", train.n_classes()));
    }
    if let Some(empty) = train.class_ids().find(|&c| train.count(c) == 0) {
        return domain(format!("class {empty} has no training points"));
    }
    Ok(train.class_ids().collect())
}

/// One binary round between two disjoint groups of classes.
struct Round<'a> {
    train: &'a LabeledDataset,
    sides: Vec<Side>,
    params: RoundParams,
}

impl<'a> Round<'a> {
    fn new(
        train: &'a LabeledDataset,
        majority: &[ClassId],
        minority: &[ClassId],
        k_max: usize,
    ) -> Result<Self> {
        let mut sides = vec![Side::Excluded; train.n_classes()];
        for c in majority {
            sides[c.index()] = Side::Majority;
        }
        for c in minority {
            sides[c.index()] = Side::Minority;
        }
        let n_maj = majority.iter().map(|&c| train.count(c)).sum();
        let n_min = minority.iter().map(|&c| train.count(c)).sum();
        Ok(Self {
            train,
            sides,
            params: RoundParams::new(n_maj, n_min, k_max)?,
        })
    }

    fn run(&self, ordering: &NeighborOrdering) -> Result<crate::binary::EvidencePair> {
        let labels = self.train.labels();
        sweep_evidence(
            ordering.order(),
            |i| self.sides[labels[i].index()],
            self.params,
            false,
        )
    }
}

/// Ordered one-vs-one: the smallest active class plays every other active
/// class; the classes that beat it form the next active set.
pub fn ovo_plus_from_ordering(
    train: &LabeledDataset,
    ordering: &NeighborOrdering,
    k_max: usize,
) -> Result<MulticlassDecision> {
    let mut active = all_classes_nonempty(train)?;
    let mut depth = 0;
    loop {
        // Non-increasing size, ties by ascending id: the last class is the
        // smallest, and among equal sizes the largest id, matching the
        // binary tie rule.
        active.sort_by(|a, b| train.count(*b).cmp(&train.count(*a)).then(a.cmp(b)));
        let (&smallest, larger) = active.split_last().expect("at least two active classes");
        depth += 1;
        let mut winners = Vec::new();
        let mut evidences = BTreeMap::new();
        let mut smallest_evidence = 0.5f64;
        for &c in larger {
            let pair = Round::new(train, &[c], &[smallest], k_max)?.run(ordering)?;
            evidences.insert(c, pair.evidence_for(Role::Majority));
            smallest_evidence = smallest_evidence.max(pair.evidence_for(Role::Minority));
            if pair.decision() == Role::Majority {
                winners.push(c);
            }
        }
        evidences.insert(smallest, smallest_evidence);
        match winners.len() {
            0 => {
                return Ok(MulticlassDecision {
                    class: smallest,
                    evidences,
                    depth,
                })
            }
            1 => {
                return Ok(MulticlassDecision {
                    class: winners[0],
                    evidences,
                    depth,
                })
            }
            _ => active = winners,
        }
    }
}

/// One-vs-rest with winner-set recursion and a max-evidence fallback.
pub fn ovr_plus_from_ordering(
    train: &LabeledDataset,
    ordering: &NeighborOrdering,
    k_max: usize,
) -> Result<MulticlassDecision> {
    let mut active = all_classes_nonempty(train)?;
    let mut depth = 0;
    loop {
        depth += 1;
        let round = ovr_round(train, &active, ordering, k_max)?;
        let decided = match round.classes.len() {
            1 => Some(round.classes[0]),
            n if n == 0 || n == active.len() => Some(resolve_by_max_evidence(&round.evidences)?),
            _ => None,
        };
        match decided {
            Some(class) => {
                return Ok(MulticlassDecision {
                    class,
                    evidences: round.evidences,
                    depth,
                })
            }
            None => active = round.classes,
        }
    }
}

/// Each active class against the union of the other active classes. The
/// smaller group by count is the minority; on equal counts the group whose
/// smallest class id is larger.
fn ovr_round(
    train: &LabeledDataset,
    active: &[ClassId],
    ordering: &NeighborOrdering,
    k_max: usize,
) -> Result<WinnerSet> {
    let mut classes = Vec::new();
    let mut evidences = BTreeMap::new();
    for &c in active {
        let rest: Vec<ClassId> = active.iter().copied().filter(|&r| r != c).collect();
        let n_one = train.count(c);
        let n_rest: usize = rest.iter().map(|&r| train.count(r)).sum();
        let one_is_minority = match n_one.cmp(&n_rest) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => c > rest[0],
        };
        let (pair, role) = if one_is_minority {
            (Round::new(train, &rest, &[c], k_max)?.run(ordering)?, Role::Minority)
        } else {
            (Round::new(train, &[c], &rest, k_max)?.run(ordering)?, Role::Majority)
        };
        evidences.insert(c, pair.evidence_for(role));
        if pair.decision() == role {
            classes.push(c);
        }
    }
    Ok(WinnerSet { classes, evidences })
}
