//! Evaluation of multi-label classifiers against a shared ground truth.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the domain model
//! (labels, label sets, instances, classifier runs), dataset validation,
//! score thresholding, per-label / per-instance / per-classifier measures,
//! the pairwise similarity matrix and the tuple-class confusion matrix that
//! serves as the traditional baseline.
//!
//! File formats, HTTP and the command line live in the `mleval` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod explore;
pub mod metrics;
pub mod model;
pub mod threshold;
pub mod tuple;
pub mod validate;

pub use error::Error;
pub use explore::{
    filter_instances, sort_labels, stacked_totals, Direction, SortKey, StackedLabel,
};
pub use metrics::{
    accumulate, classifier_summary, f1, jaccard, label_metrics, outcome, outcome_per_instance,
    precision, recall, similarity_matrix, truth_cardinality, ClassifierSummary, LabelMetrics,
    Outcome, OutcomeCounts, SimilarityMatrix,
};
pub use model::{
    ClassifierRun, Dataset, DatasetDraft, DocumentKind, DocumentRef, Instance, LabelId,
    LabelRegistry, LabelSet, RunDraft, RunOrigin,
};
pub use threshold::{apply_threshold, Comparison, ScoredRun, ThresholdError};
pub use tuple::{
    build_tuple_confusion, enumerate_tuple_classes, TupleClassTable, TupleConfusionMatrix,
};
pub use validate::{validate, Issue, IssueCode, Severity, ValidationReport, RECOMMENDED_MAX_RUNS};
