//! Turning per-label scores into hard label sets.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{LabelId, LabelRegistry, LabelSet, RunDraft, RunOrigin};

/// How a score is compared against the threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Comparison {
    /// `score > t`; a score equal to the threshold is not assigned.
    #[default]
    #[cfg_attr(feature = "serde", serde(rename = "gt"))]
    Greater,
    /// `score >= t`.
    #[cfg_attr(feature = "serde", serde(rename = "gte"))]
    GreaterOrEqual,
}

impl Comparison {
    pub fn accepts(self, score: f64, threshold: f64) -> bool {
        match self {
            Comparison::Greater => score > threshold,
            Comparison::GreaterOrEqual => score >= threshold,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Comparison::Greater => "gt",
            Comparison::GreaterOrEqual => "gte",
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-instance label scores of one classifier. Labels missing from an
/// instance's list score 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRun {
    pub name: String,
    pub scores: Vec<(String, Vec<(LabelId, f64)>)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThresholdError {
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("score {score} for label `{label}` on instance `{instance}` is outside [0, 1]")]
    ScoreOutOfRange {
        instance: String,
        label: String,
        score: f64,
    },
}

fn in_unit_range(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

/// Assigns label `l` to instance `i` iff `score(i, l)` passes `comparison`
/// against `threshold`.
///
/// Every score is checked first; NaN or out-of-range values are rejected,
/// never clamped.
pub fn apply_threshold(
    run: &ScoredRun,
    registry: &LabelRegistry,
    threshold: f64,
    comparison: Comparison,
) -> Result<RunDraft, ThresholdError> {
    if !in_unit_range(threshold) {
        return Err(ThresholdError::InvalidThreshold(threshold));
    }
    let label_name = |id: LabelId| {
        registry
            .name(id)
            .map(String::from)
            .unwrap_or_else(|| alloc::format!("#{id}"))
    };
    let mut entries = Vec::with_capacity(run.scores.len());
    for (instance, scores) in &run.scores {
        let mut dense = alloc::vec![0.0f64; registry.len()];
        for &(label, score) in scores {
            if !in_unit_range(score) {
                return Err(ThresholdError::ScoreOutOfRange {
                    instance: instance.clone(),
                    label: label_name(label),
                    score,
                });
            }
            if let Some(slot) = dense.get_mut(label.index()) {
                *slot = score;
            }
        }
        let set: LabelSet = registry
            .ids()
            .filter(|l| comparison.accepts(dense[l.index()], threshold))
            .collect();
        entries.push((instance.clone(), set));
    }
    Ok(RunDraft {
        name: run.name.clone(),
        origin: RunOrigin::Thresholded {
            threshold,
            comparison,
        },
        entries,
    })
}
