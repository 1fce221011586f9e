//! Confusion matrices with label tuples as classes.
//!
//! Each distinct label set is treated as one class. Only sets that actually
//! occur in the ground truth or in some run's predictions become classes, and
//! all runs share the same table so matrix dimensions never vary per run.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{ClassifierRun, Dataset, LabelRegistry, LabelSet};

/// Rendering of the empty tuple.
pub const EMPTY_TUPLE: &str = "∅";
/// Separator between label names in a tuple signature.
pub const TUPLE_SEPARATOR: char = '|';

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TupleClassTable {
    /// Sorted by cardinality, then lexicographically by label IDs.
    classes: Vec<LabelSet>,
}

impl TupleClassTable {
    pub fn classes(&self) -> &[LabelSet] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index(&self, set: &LabelSet) -> Option<usize> {
        self.classes.binary_search(set).ok()
    }

    /// Label names joined with `|`, or `∅` for the empty tuple.
    pub fn signature(&self, class: usize, registry: &LabelRegistry) -> String {
        signature(&self.classes[class], registry)
    }
}

pub fn signature(set: &LabelSet, registry: &LabelRegistry) -> String {
    if set.is_empty() {
        return String::from(EMPTY_TUPLE);
    }
    let mut out = String::new();
    for (i, id) in set.iter().enumerate() {
        if i > 0 {
            out.push(TUPLE_SEPARATOR);
        }
        out.push_str(registry.name(id).unwrap_or("?"));
    }
    out
}

/// Collects every distinct label set in the ground truth and all runs.
pub fn enumerate_tuple_classes(dataset: &Dataset) -> TupleClassTable {
    let mut seen: BTreeSet<&LabelSet> = dataset.truths().collect();
    for run in dataset.runs() {
        seen.extend(run.predictions());
    }
    TupleClassTable {
        classes: seen.into_iter().cloned().collect(),
    }
}

/// Rows are ground-truth classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TupleConfusionMatrix {
    pub run: String,
    pub table: TupleClassTable,
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub diagonal: Vec<u64>,
}

impl TupleConfusionMatrix {
    pub fn dimension(&self) -> usize {
        self.table.len()
    }

    pub fn total(&self) -> u64 {
        self.row_sums.iter().sum()
    }

    /// Share of instances whose predicted tuple equals the true tuple.
    pub fn tuple_accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 1.0;
        }
        self.diagonal.iter().sum::<u64>() as f64 / total as f64
    }
}

/// Builds the matrix of `run` over a shared `table`.
///
/// # Panics
///
/// If a truth or prediction set of `dataset` is missing from `table`, i.e. the
/// table was not built from the same dataset.
pub fn build_tuple_confusion(
    dataset: &Dataset,
    table: &TupleClassTable,
    run: &ClassifierRun,
) -> TupleConfusionMatrix {
    let c = table.len();
    let mut counts = alloc::vec![alloc::vec![0u64; c]; c];
    for (truth, pred) in dataset.truths().zip(run.predictions()) {
        let r = table
            .index(truth)
            .expect("truth tuple missing from class table");
        let k = table
            .index(pred)
            .expect("predicted tuple missing from class table");
        counts[r][k] += 1;
    }
    let row_sums = counts.iter().map(|row| row.iter().sum()).collect();
    let col_sums = (0..c)
        .map(|k| counts.iter().map(|row| row[k]).sum())
        .collect();
    let diagonal = (0..c).map(|k| counts[k][k]).collect();
    TupleConfusionMatrix {
        run: run.name.clone(),
        table: table.clone(),
        counts,
        row_sums,
        col_sums,
        diagonal,
    }
}
