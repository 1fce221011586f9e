//! Label ordering, stacked totals and instance filtering for the linked views.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::Error;
use crate::metrics::label_metrics;
use crate::model::{Dataset, LabelId};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SortKey {
    Id,
    /// Number of ground-truth instances carrying the label.
    GtFrequency,
    /// F1 of the named run.
    F1(String),
    /// Sum of F1 over all runs.
    TotalF1,
}

impl fmt::Display for SortKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SortKey::Id => f.write_str("id"),
            SortKey::GtFrequency => f.write_str("gt-frequency"),
            SortKey::F1(run) => write!(f, "f1:{run}"),
            SortKey::TotalF1 => f.write_str("total-f1"),
        }
    }
}

impl FromStr for SortKey {
    type Err = String;

    /// Accepts `id`, `gt-frequency`, `total-f1` and `f1:<run name>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "id" => Ok(SortKey::Id),
            "gt-frequency" => Ok(SortKey::GtFrequency),
            "total-f1" => Ok(SortKey::TotalF1),
            _ => match s.strip_prefix("f1:") {
                Some(run) if !run.is_empty() => Ok(SortKey::F1(run.to_string())),
                _ => Err(alloc::format!(
                    "unknown sort key `{s}` (expected id, gt-frequency, total-f1 or f1:<run>)"
                )),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Direction {
    #[default]
    Ascending,
    Descending,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Ascending => "asc",
            Direction::Descending => "desc",
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "asc" | "ascending" => Ok(Direction::Ascending),
            "desc" | "descending" => Ok(Direction::Descending),
            _ => Err(alloc::format!(
                "unknown direction `{s}` (expected asc or desc)"
            )),
        }
    }
}

/// Per-label F1 of every run, indexed `[run][label]`.
fn f1_table(dataset: &Dataset) -> Vec<Vec<f64>> {
    dataset
        .runs()
        .iter()
        .map(|run| {
            label_metrics(dataset, run)
                .into_iter()
                .map(|m| m.f1)
                .collect()
        })
        .collect()
}

fn totals(table: &[Vec<f64>], labels: usize) -> Vec<f64> {
    (0..labels)
        .map(|l| table.iter().fold(0.0, |acc, row| acc + row[l]))
        .collect()
}

/// Orders every registry label by `key`. Ties always fall back to ascending ID.
pub fn sort_labels(
    dataset: &Dataset,
    key: &SortKey,
    direction: Direction,
) -> Result<Vec<LabelId>, Error> {
    let n = dataset.registry().len();
    let score: Vec<f64> = match key {
        SortKey::Id => (0..n).map(|l| l as f64).collect(),
        SortKey::GtFrequency => {
            let mut freq = alloc::vec![0.0; n];
            for truth in dataset.truths() {
                for l in truth.iter() {
                    freq[l.index()] += 1.0;
                }
            }
            freq
        }
        SortKey::F1(name) => {
            let run = dataset.run(name)?;
            label_metrics(dataset, run)
                .into_iter()
                .map(|m| m.f1)
                .collect()
        }
        SortKey::TotalF1 => totals(&f1_table(dataset), n),
    };
    let mut order: Vec<LabelId> = dataset.registry().ids().collect();
    order.sort_by(|a, b| {
        let primary = score[a.index()].total_cmp(&score[b.index()]);
        let primary = match direction {
            Direction::Ascending => primary,
            Direction::Descending => primary.reverse(),
        };
        primary.then(a.cmp(b))
    });
    Ok(order)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StackedLabel {
    pub label: LabelId,
    /// F1 of each run, in run order.
    pub contributions: Vec<f64>,
    pub total: f64,
}

/// Per-label F1 stacked over all runs, sorted by descending total.
pub fn stacked_totals(dataset: &Dataset) -> Vec<StackedLabel> {
    let table = f1_table(dataset);
    let n = dataset.registry().len();
    let total = totals(&table, n);
    let mut rows: Vec<StackedLabel> = (0..n)
        .map(|l| StackedLabel {
            label: LabelId::from(l),
            contributions: table.iter().map(|row| row[l]).collect(),
            total: total[l],
        })
        .collect();
    rows.sort_by(|a, b| match b.total.total_cmp(&a.total) {
        Ordering::Equal => a.label.cmp(&b.label),
        other => other,
    });
    rows
}

/// Indices of the instances where `label` appears in the ground truth or in
/// any run's prediction, in dataset order.
pub fn filter_instances(dataset: &Dataset, label: LabelId) -> Result<Vec<usize>, Error> {
    if !dataset.registry().contains(label) {
        return Err(Error::UnknownLabel(label.to_string()));
    }
    Ok(dataset
        .instances()
        .iter()
        .enumerate()
        .filter(|(i, inst)| {
            inst.truth.contains(label)
                || dataset
                    .runs()
                    .iter()
                    .any(|r| r.prediction(*i).contains(label))
        })
        .map(|(i, _)| i)
        .collect())
}
