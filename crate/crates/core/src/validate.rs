//! Structural checks over a parsed [`DatasetDraft`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{DatasetDraft, DocumentKind, LabelSet};

/// Runs beyond this count still load, with a warning.
pub const RECOMMENDED_MAX_RUNS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum IssueCode {
    EmptyRegistry,
    DuplicateLabel,
    NoInstances,
    NoRuns,
    EmptyInstanceId,
    DuplicateInstance,
    DuplicateRun,
    UnknownLabel,
    UnknownInstance,
    DuplicatePrediction,
    MissingPrediction,
    TooManyRuns,
    DocumentPayload,
    MissingDocument,
    Syntax,
    Io,
    Manifest,
    Score,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Issue {
    pub severity: Severity,
    pub code: IssueCode,
    pub message: String,
}

impl Issue {
    pub fn error(code: IssueCode, message: impl Into<String>) -> Self {
        Issue {
            severity: Severity::Error,
            code,
            message: message.into(),
        }
    }

    pub fn warning(code: IssueCode, message: impl Into<String>) -> Self {
        Issue {
            severity: Severity::Warning,
            code,
            message: message.into(),
        }
    }
}

/// Findings from validation. Errors block use of the dataset; warnings do not.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, issue: Issue) {
        self.issues.push(issue);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.issues.extend(other.issues);
    }

    pub fn issues(&self) -> &[Issue] {
        &self.issues
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues
            .iter()
            .filter(|i| i.severity == Severity::Warning)
    }

    pub fn is_ok(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

impl From<Issue> for ValidationReport {
    fn from(issue: Issue) -> Self {
        ValidationReport {
            issues: alloc::vec![issue],
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for ValidationReport {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let errors: Vec<&Issue> = self.errors().collect();
        let warnings: Vec<&Issue> = self.warnings().collect();
        let mut s = serializer.serialize_struct("ValidationReport", 3)?;
        s.serialize_field("ok", &self.is_ok())?;
        s.serialize_field("errors", &errors)?;
        s.serialize_field("warnings", &warnings)?;
        s.end()
    }
}

/// Reports every invariant violation in `draft`.
pub fn validate(draft: &DatasetDraft) -> ValidationReport {
    let mut report = ValidationReport::new();
    let registry = &draft.registry;

    if registry.is_empty() {
        report.push(Issue::error(
            IssueCode::EmptyRegistry,
            "label registry is empty",
        ));
    }
    if draft.instances.is_empty() {
        report.push(Issue::error(
            IssueCode::NoInstances,
            "dataset has no instances",
        ));
    }

    let out_of_range = |set: &LabelSet| -> Vec<String> {
        set.iter()
            .filter(|id| !registry.contains(*id))
            .map(|id| format!("#{id}"))
            .collect()
    };

    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for inst in &draft.instances {
        if inst.id.is_empty() {
            report.push(Issue::error(
                IssueCode::EmptyInstanceId,
                "instance with empty id",
            ));
        }
        if !seen.insert(inst.id.as_str()) {
            report.push(Issue::error(
                IssueCode::DuplicateInstance,
                format!("duplicate instance id `{}`", inst.id),
            ));
        }
        let bad = out_of_range(&inst.truth);
        if !bad.is_empty() {
            report.push(Issue::error(
                IssueCode::UnknownLabel,
                format!(
                    "ground truth of `{}` references unknown label(s) {}",
                    inst.id,
                    bad.join(", ")
                ),
            ));
        }
        let doc = &inst.document;
        let payload_ok = match doc.kind {
            DocumentKind::None => doc.payload.is_empty(),
            DocumentKind::Text => true,
            DocumentKind::Image | DocumentKind::Audio => !doc.payload.is_empty(),
        };
        if !payload_ok {
            report.push(Issue::error(
                IssueCode::DocumentPayload,
                format!(
                    "instance `{}`: payload does not match document kind `{}`",
                    inst.id, doc.kind
                ),
            ));
        }
    }

    if draft.runs.is_empty() {
        report.push(Issue::error(
            IssueCode::NoRuns,
            "dataset has no classifier runs",
        ));
    }
    if draft.runs.len() > RECOMMENDED_MAX_RUNS {
        report.push(Issue::warning(
            IssueCode::TooManyRuns,
            format!(
                "classifier count exceeds {RECOMMENDED_MAX_RUNS} ({} runs); views may become hard to read",
                draft.runs.len()
            ),
        ));
    }

    let mut run_names: BTreeSet<&str> = BTreeSet::new();
    for run in &draft.runs {
        if !run_names.insert(run.name.as_str()) {
            report.push(Issue::error(
                IssueCode::DuplicateRun,
                format!("duplicate classifier run name `{}`", run.name),
            ));
        }
        let mut covered: BTreeMap<&str, usize> = BTreeMap::new();
        for (id, set) in &run.entries {
            if !seen.contains(id.as_str()) {
                report.push(Issue::error(
                    IssueCode::UnknownInstance,
                    format!("run `{}` references unknown instance `{id}`", run.name),
                ));
                continue;
            }
            let count = covered.entry(id.as_str()).or_insert(0);
            *count += 1;
            if *count == 2 {
                report.push(Issue::error(
                    IssueCode::DuplicatePrediction,
                    format!("run `{}` predicts instance `{id}` more than once", run.name),
                ));
            }
            let bad = out_of_range(set);
            if !bad.is_empty() {
                report.push(Issue::error(
                    IssueCode::UnknownLabel,
                    format!(
                        "run `{}`, instance `{id}` references unknown label(s) {}",
                        run.name,
                        bad.join(", ")
                    ),
                ));
            }
        }
        for inst in &draft.instances {
            if !covered.contains_key(inst.id.as_str()) {
                report.push(Issue::warning(
                    IssueCode::MissingPrediction,
                    format!(
                        "run `{}` has no prediction for instance `{}`; treated as empty",
                        run.name, inst.id
                    ),
                ));
            }
        }
    }

    report
}
