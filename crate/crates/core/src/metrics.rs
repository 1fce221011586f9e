//! Per-label, per-instance, per-classifier and pairwise measures.
//!
//! Outcomes are counted per (instance, label): a label present in both the
//! ground truth and the prediction is a true positive, prediction-only is a
//! false positive, truth-only a false negative and absent from both a true
//! negative. Precision and recall are computed separately for each label;
//! agreement on a single instance is measured with the Jaccard index.
//!
//! All means are arithmetic means summed left to right in registry or
//! instance order, so results are bit-reproducible.

use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{ClassifierRun, Dataset, LabelId, LabelRegistry, LabelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Outcome {
    #[cfg_attr(feature = "serde", serde(rename = "TP"))]
    TruePositive,
    #[cfg_attr(feature = "serde", serde(rename = "FP"))]
    FalsePositive,
    #[cfg_attr(feature = "serde", serde(rename = "FN"))]
    FalseNegative,
    #[cfg_attr(feature = "serde", serde(rename = "TN"))]
    TrueNegative,
}

/// Outcome of a single label on a single instance.
pub fn outcome(truth: &LabelSet, pred: &LabelSet, label: LabelId) -> Outcome {
    match (truth.contains(label), pred.contains(label)) {
        (true, true) => Outcome::TruePositive,
        (false, true) => Outcome::FalsePositive,
        (true, false) => Outcome::FalseNegative,
        (false, false) => Outcome::TrueNegative,
    }
}

/// Outcome of every registry label on one instance, indexed by label ID.
pub fn outcome_per_instance(
    truth: &LabelSet,
    pred: &LabelSet,
    registry: &LabelRegistry,
) -> Vec<Outcome> {
    registry.ids().map(|l| outcome(truth, pred, l)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OutcomeCounts {
    #[cfg_attr(feature = "serde", serde(rename = "tp"))]
    pub true_pos: u64,
    #[cfg_attr(feature = "serde", serde(rename = "fp"))]
    pub false_pos: u64,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub false_neg: u64,
    #[cfg_attr(feature = "serde", serde(rename = "tn"))]
    pub true_neg: u64,
}

impl OutcomeCounts {
    pub fn new(true_pos: u64, false_pos: u64, false_neg: u64, true_neg: u64) -> Self {
        OutcomeCounts {
            true_pos,
            false_pos,
            false_neg,
            true_neg,
        }
    }

    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::TruePositive => self.true_pos += 1,
            Outcome::FalsePositive => self.false_pos += 1,
            Outcome::FalseNegative => self.false_neg += 1,
            Outcome::TrueNegative => self.true_neg += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    pub fn precision(&self) -> Option<f64> {
        precision(self)
    }

    pub fn recall(&self) -> Option<f64> {
        recall(self)
    }

    pub fn f1(&self) -> f64 {
        f1(self)
    }
}

/// TP / (TP + FP), or `None` when nothing was predicted for the label.
pub fn precision(c: &OutcomeCounts) -> Option<f64> {
    let denom = c.true_pos + c.false_pos;
    (denom > 0).then(|| c.true_pos as f64 / denom as f64)
}

/// TP / (TP + FN), or `None` when the label never occurs in the ground truth.
pub fn recall(c: &OutcomeCounts) -> Option<f64> {
    let denom = c.true_pos + c.false_neg;
    (denom > 0).then(|| c.true_pos as f64 / denom as f64)
}

/// Harmonic mean of precision and recall, total over all counts.
///
/// A label with no true positives and no errors scores 1.0: it only ever
/// produced true negatives. With errors but no true positives it scores 0.0.
pub fn f1(c: &OutcomeCounts) -> f64 {
    if c.true_pos == 0 {
        return if c.false_pos == 0 && c.false_neg == 0 {
            1.0
        } else {
            0.0
        };
    }
    // Both are defined once tp > 0.
    let p = c.true_pos as f64 / (c.true_pos + c.false_pos) as f64;
    let r = c.true_pos as f64 / (c.true_pos + c.false_neg) as f64;
    2.0 * p * r / (p + r)
}

/// |a ∩ b| / |a ∪ b|; two empty sets agree perfectly and score 1.0.
pub fn jaccard(a: &LabelSet, b: &LabelSet) -> f64 {
    let union = a.union_len(b);
    if union == 0 {
        return 1.0;
    }
    a.intersection_len(b) as f64 / union as f64
}

/// Per-label outcome counts for `run`, summed over all instances.
pub fn accumulate(dataset: &Dataset, run: &ClassifierRun) -> Vec<OutcomeCounts> {
    let registry = dataset.registry();
    let mut counts = alloc::vec![OutcomeCounts::default(); registry.len()];
    for (truth, pred) in dataset.truths().zip(run.predictions()) {
        for (label, slot) in registry.ids().zip(counts.iter_mut()) {
            slot.record(outcome(truth, pred, label));
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LabelMetrics {
    pub label: LabelId,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub counts: OutcomeCounts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: f64,
}

impl LabelMetrics {
    pub fn from_counts(label: LabelId, counts: OutcomeCounts) -> Self {
        LabelMetrics {
            label,
            counts,
            precision: precision(&counts),
            recall: recall(&counts),
            f1: f1(&counts),
        }
    }
}

/// One row per registry label, in ID order.
pub fn label_metrics(dataset: &Dataset, run: &ClassifierRun) -> Vec<LabelMetrics> {
    accumulate(dataset, run)
        .into_iter()
        .enumerate()
        .map(|(i, c)| LabelMetrics::from_counts(LabelId::from(i), c))
        .collect()
}

/// Global view of one classifier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ClassifierSummary {
    pub name: String,
    /// Mean number of predicted labels per instance.
    pub cardinality: f64,
    /// Mean F1 over every label.
    pub mean_f1: f64,
    /// Mean over labels where precision is defined; `None` if it never is.
    pub mean_precision: Option<f64>,
    /// Mean over labels where recall is defined; `None` if it never is.
    pub mean_recall: Option<f64>,
    pub mean_jaccard_vs_truth: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn cardinality<'a>(sets: impl Iterator<Item = &'a LabelSet>) -> f64 {
    mean(sets.map(|s| s.len() as f64)).unwrap_or(0.0)
}

/// Mean Jaccard index over aligned pairs. Used for both the summary and the
/// similarity matrix so the two agree bit-for-bit.
fn mean_jaccard<'a>(
    a: impl Iterator<Item = &'a LabelSet>,
    b: impl Iterator<Item = &'a LabelSet>,
) -> f64 {
    mean(a.zip(b).map(|(x, y)| jaccard(x, y))).unwrap_or(1.0)
}

/// Mean number of ground-truth labels per instance.
pub fn truth_cardinality(dataset: &Dataset) -> f64 {
    cardinality(dataset.truths())
}

pub fn classifier_summary(dataset: &Dataset, run: &ClassifierRun) -> ClassifierSummary {
    let rows = label_metrics(dataset, run);
    ClassifierSummary {
        name: run.name.clone(),
        cardinality: cardinality(run.predictions().iter()),
        mean_f1: mean(rows.iter().map(|m| m.f1)).unwrap_or(1.0),
        mean_precision: mean(rows.iter().filter_map(|m| m.precision)),
        mean_recall: mean(rows.iter().filter_map(|m| m.recall)),
        mean_jaccard_vs_truth: mean_jaccard(dataset.truths(), run.predictions().iter()),
    }
}

/// Instance-averaged Jaccard similarity among the ground truth and all runs.
///
/// Party 0 is the ground truth; party k is run k-1.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SimilarityMatrix {
    pub parties: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.values[p][q]
    }

    pub fn size(&self) -> usize {
        self.parties.len()
    }
}

/// Name of the ground-truth party in a [`SimilarityMatrix`].
pub const TRUTH_PARTY: &str = "Ref";

pub fn similarity_matrix(dataset: &Dataset) -> SimilarityMatrix {
    let runs = dataset.runs();
    let n = runs.len() + 1;
    let mut values = alloc::vec![alloc::vec![1.0; n]; n];
    for p in 0..n {
        for q in (p + 1)..n {
            let other = runs[q - 1].predictions().iter();
            // Row 0 uses the same call as the summary, so they agree exactly.
            let v = if p == 0 {
                mean_jaccard(dataset.truths(), other)
            } else {
                mean_jaccard(runs[p - 1].predictions().iter(), other)
            };
            values[p][q] = v;
            values[q][p] = v;
        }
    }
    let mut parties = Vec::with_capacity(n);
    parties.push(String::from(TRUTH_PARTY));
    parties.extend(runs.iter().map(|r| r.name.clone()));
    SimilarityMatrix { parties, values }
}
