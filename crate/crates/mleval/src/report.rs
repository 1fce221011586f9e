//! JSON documents served by the API and written by the CLI.
//!
//! Both front ends build their output through these functions, so the two
//! can only differ in transport.

use mleval_core::explore::{sort_labels, stacked_totals, Direction, SortKey};
use mleval_core::metrics::{
    classifier_summary, jaccard, label_metrics, similarity_matrix, truth_cardinality,
};
use mleval_core::tuple::{build_tuple_confusion, enumerate_tuple_classes};
use mleval_core::{
    filter_instances, ClassifierSummary, Dataset, DocumentKind, Error as CoreError, LabelId,
    TupleConfusionMatrix, ValidationReport,
};
use serde::Serialize;

use crate::store::LoadedDataset;

#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub id: String,
    pub name: String,
    pub document_kind: DocumentKind,
    pub instance_count: usize,
    pub label_count: usize,
    pub run_count: usize,
    pub runs: Vec<String>,
}

pub fn dataset_info(loaded: &LoadedDataset) -> DatasetInfo {
    let ds = &loaded.dataset;
    DatasetInfo {
        id: loaded.id.clone(),
        name: ds.name().to_string(),
        document_kind: loaded.kind,
        instance_count: ds.instances().len(),
        label_count: ds.registry().len(),
        run_count: ds.runs().len(),
        runs: ds.runs().iter().map(|r| r.name.clone()).collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryBody {
    pub dataset: DatasetInfo,
    pub labels: Vec<String>,
    /// Mean number of ground-truth labels per instance.
    pub truth_cardinality: f64,
    pub summaries: Vec<ClassifierSummary>,
    pub report: ValidationReport,
}

pub fn summary_body(loaded: &LoadedDataset) -> SummaryBody {
    let ds = &loaded.dataset;
    SummaryBody {
        dataset: dataset_info(loaded),
        labels: ds.registry().names().to_vec(),
        truth_cardinality: truth_cardinality(ds),
        summaries: ds
            .runs()
            .iter()
            .map(|r| classifier_summary(ds, r))
            .collect(),
        report: loaded.report.clone(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunLabelCell {
    pub run: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelRow {
    pub label: LabelId,
    pub name: String,
    /// Number of ground-truth instances carrying the label.
    pub gt_frequency: u64,
    pub total_f1: f64,
    pub runs: Vec<RunLabelCell>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelMetricsBody {
    pub sort: String,
    pub direction: String,
    pub runs: Vec<String>,
    pub rows: Vec<LabelRow>,
}

pub fn label_metrics_body(
    ds: &Dataset,
    key: &SortKey,
    direction: Direction,
) -> Result<LabelMetricsBody, CoreError> {
    let order = sort_labels(ds, key, direction)?;
    let per_run: Vec<_> = ds.runs().iter().map(|r| label_metrics(ds, r)).collect();
    let rows = order
        .into_iter()
        .map(|label| {
            let l = label.index();
            let cells: Vec<RunLabelCell> = ds
                .runs()
                .iter()
                .zip(&per_run)
                .map(|(run, metrics)| {
                    let m = &metrics[l];
                    RunLabelCell {
                        run: run.name.clone(),
                        tp: m.counts.true_pos,
                        fp: m.counts.false_pos,
                        fn_: m.counts.false_neg,
                        tn: m.counts.true_neg,
                        precision: m.precision,
                        recall: m.recall,
                        f1: m.f1,
                    }
                })
                .collect();
            // Same summation order as the core's total-f1 sort key.
            let total_f1 = cells.iter().fold(0.0, |acc, c| acc + c.f1);
            let first = &per_run[0][l].counts;
            LabelRow {
                label,
                name: ds.registry().name(label).unwrap_or_default().to_string(),
                gt_frequency: first.true_pos + first.false_neg,
                total_f1,
                runs: cells,
            }
        })
        .collect();
    Ok(LabelMetricsBody {
        sort: key.to_string(),
        direction: direction.to_string(),
        runs: ds.runs().iter().map(|r| r.name.clone()).collect(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// Values rounded to four decimals.
    #[default]
    Rounded,
    Full,
}

pub const TRANSPORT_DECIMALS: i32 = 4;

pub fn round_transport(v: f64) -> f64 {
    let scale = 10f64.powi(TRANSPORT_DECIMALS);
    (v * scale).round() / scale
}

#[derive(Debug, Clone, Serialize)]
pub struct SimilarityBody {
    pub parties: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub precision: &'static str,
}

pub fn similarity_body(ds: &Dataset, precision: Precision) -> SimilarityBody {
    let m = similarity_matrix(ds);
    let values = match precision {
        Precision::Full => m.values,
        Precision::Rounded => m
            .values
            .into_iter()
            .map(|row| row.into_iter().map(round_transport).collect())
            .collect(),
    };
    SimilarityBody {
        parties: m.parties,
        values,
        precision: match precision {
            Precision::Full => "full",
            Precision::Rounded => "4dp",
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StackedRow {
    pub label: LabelId,
    pub name: String,
    pub contributions: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StackedBody {
    pub runs: Vec<String>,
    pub rows: Vec<StackedRow>,
}

pub fn stacked_body(ds: &Dataset) -> StackedBody {
    StackedBody {
        runs: ds.runs().iter().map(|r| r.name.clone()).collect(),
        rows: stacked_totals(ds)
            .into_iter()
            .map(|s| StackedRow {
                label: s.label,
                name: ds.registry().name(s.label).unwrap_or_default().to_string(),
                contributions: s.contributions,
                total: s.total,
            })
            .collect(),
    }
}

pub const DEFAULT_PAGE_SIZE: usize = 50;

#[derive(Debug, Clone, Serialize)]
pub struct DocumentInfo {
    pub kind: DocumentKind,
    pub mime: Option<String>,
    /// Inline body for text documents; others are fetched on demand.
    pub text: Option<String>,
    pub path: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunPrediction {
    pub run: String,
    pub labels: Vec<LabelId>,
    pub jaccard: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceRow {
    pub index: usize,
    pub id: String,
    pub document: DocumentInfo,
    pub truth: Vec<LabelId>,
    pub predictions: Vec<RunPrediction>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstancesBody {
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
    pub filter_label: Option<LabelId>,
    pub rows: Vec<InstanceRow>,
}

pub fn instances_body(
    ds: &Dataset,
    filter: Option<LabelId>,
    page: usize,
    page_size: usize,
) -> Result<InstancesBody, CoreError> {
    let selected: Vec<usize> = match filter {
        Some(label) => filter_instances(ds, label)?,
        None => (0..ds.instances().len()).collect(),
    };
    let page_size = page_size.max(1);
    let rows = selected
        .iter()
        .skip(page.saturating_mul(page_size))
        .take(page_size)
        .map(|&i| {
            let inst = &ds.instances()[i];
            let doc = &inst.document;
            InstanceRow {
                index: i,
                id: inst.id.clone(),
                document: DocumentInfo {
                    kind: doc.kind,
                    mime: doc.mime.clone(),
                    text: (doc.kind == DocumentKind::Text).then(|| doc.payload.clone()),
                    path: doc.kind.is_file().then(|| doc.payload.clone()),
                },
                truth: inst.truth.iter().collect(),
                predictions: ds
                    .runs()
                    .iter()
                    .map(|r| RunPrediction {
                        run: r.name.clone(),
                        labels: r.prediction(i).iter().collect(),
                        jaccard: jaccard(&inst.truth, r.prediction(i)),
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(InstancesBody {
        total: selected.len(),
        page,
        page_size,
        filter_label: filter,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TupleConfusionBody {
    pub run: String,
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub diagonal: Vec<u64>,
    pub tuple_accuracy: f64,
}

/// Matrix of `run` over the class table shared by all runs of `ds`.
pub fn tuple_confusion(ds: &Dataset, run: &str) -> Result<TupleConfusionMatrix, CoreError> {
    let run = ds.run(run)?;
    let table = enumerate_tuple_classes(ds);
    Ok(build_tuple_confusion(ds, &table, run))
}

pub fn tuple_confusion_body(ds: &Dataset, m: &TupleConfusionMatrix) -> TupleConfusionBody {
    TupleConfusionBody {
        run: m.run.clone(),
        classes: (0..m.dimension())
            .map(|c| m.table.signature(c, ds.registry()))
            .collect(),
        counts: m.counts.clone(),
        row_sums: m.row_sums.clone(),
        col_sums: m.col_sums.clone(),
        diagonal: m.diagonal.clone(),
        tuple_accuracy: m.tuple_accuracy(),
    }
}

/// The single document written by `mleval metrics`.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub summary: SummaryBody,
    pub labels: LabelMetricsBody,
    pub similarity: SimilarityBody,
}

pub fn metrics_report(
    loaded: &LoadedDataset,
    key: &SortKey,
    direction: Direction,
) -> Result<MetricsReport, CoreError> {
    Ok(MetricsReport {
        summary: summary_body(loaded),
        labels: label_metrics_body(&loaded.dataset, key, direction)?,
        similarity: similarity_body(&loaded.dataset, Precision::Full),
    })
}

/// Serializes through `serde_json::Value`, whose maps are key-sorted, so
/// equal documents give byte-equal text.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("report types always serialize");
    serde_json::to_string(&value).expect("JSON values always serialize")
}

/// Re-canonicalizes arbitrary JSON text.
pub fn canonicalize(text: &str) -> serde_json::Result<String> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    serde_json::to_string(&value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transport_rounding() {
        assert_eq!(round_transport(2.0 / 3.0), 0.6667);
        assert_eq!(round_transport(1.0), 1.0);
        assert_eq!(round_transport(0.123449), 0.1234);
    }

    #[test]
    fn canonical_json_sorts_keys() {
        assert_eq!(
            canonicalize(r#"{"b":1,"a":[2, 3]}"#).unwrap(),
            r#"{"a":[2,3],"b":1}"#
        );
    }
}
