//! Domain types shared by every other module.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::Error;
use crate::threshold::Comparison;
use crate::validate::{validate, ValidationReport};

/// Position of a label in the [`LabelRegistry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct LabelId(pub u32);

impl LabelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for LabelId {
    fn from(index: usize) -> Self {
        LabelId(index as u32)
    }
}

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The ordered label universe. Position in the list is the label's ID.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct LabelRegistry {
    labels: Vec<String>,
    #[cfg_attr(feature = "serde", serde(skip))]
    by_name: BTreeMap<String, LabelId>,
}

impl LabelRegistry {
    /// Builds a registry from label names in ID order.
    ///
    /// Names are trimmed of surrounding whitespace and compared exactly, without
    /// case folding. Line numbers in errors are 1-based positions in `names`.
    pub fn new<I, S>(names: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut labels = Vec::new();
        let mut by_name = BTreeMap::new();
        for (index, raw) in names.into_iter().enumerate() {
            let name = raw.as_ref().trim();
            if name.is_empty() {
                return Err(Error::EmptyLabel(index + 1));
            }
            if let Some(prev) = by_name.insert(name.to_string(), LabelId::from(index)) {
                return Err(Error::DuplicateLabel {
                    name: name.to_string(),
                    first: prev.index() + 1,
                    second: index + 1,
                });
            }
            labels.push(name.to_string());
        }
        if labels.is_empty() {
            return Err(Error::EmptyRegistry);
        }
        Ok(LabelRegistry { labels, by_name })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Looks a label up by name, trimming the query first.
    pub fn id(&self, name: &str) -> Option<LabelId> {
        self.by_name.get(name.trim()).copied()
    }

    pub fn name(&self, id: LabelId) -> Option<&str> {
        self.labels.get(id.index()).map(String::as_str)
    }

    pub fn contains(&self, id: LabelId) -> bool {
        id.index() < self.labels.len()
    }

    pub fn names(&self) -> &[String] {
        &self.labels
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = LabelId> + '_ {
        (0..self.labels.len()).map(LabelId::from)
    }
}

/// A set of label IDs, stored sorted and without duplicates.
///
/// `Ord` is the canonical tuple-class order: cardinality first, then the
/// sorted ID sequences compared lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct LabelSet(Vec<LabelId>);

impl LabelSet {
    pub fn new() -> Self {
        LabelSet(Vec::new())
    }

    pub fn from_ids<I: IntoIterator<Item = LabelId>>(ids: I) -> Self {
        let mut members: Vec<LabelId> = ids.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        LabelSet(members)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: LabelId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn insert(&mut self, id: LabelId) -> bool {
        match self.0.binary_search(&id) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, id);
                true
            }
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = LabelId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[LabelId] {
        &self.0
    }

    /// |self ∩ other|, by merging the two sorted member lists.
    pub fn intersection_len(&self, other: &LabelSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn union_len(&self, other: &LabelSet) -> usize {
        self.0.len() + other.0.len() - self.intersection_len(other)
    }

    pub fn is_subset_of_registry(&self, registry: &LabelRegistry) -> bool {
        self.0.last().is_none_or(|&max| registry.contains(max))
    }
}

impl Ord for LabelSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for LabelSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromIterator<LabelId> for LabelSet {
    fn from_iter<T: IntoIterator<Item = LabelId>>(iter: T) -> Self {
        LabelSet::from_ids(iter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum DocumentKind {
    Text,
    Image,
    Audio,
    None,
}

impl DocumentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DocumentKind::Text => "text",
            DocumentKind::Image => "image",
            DocumentKind::Audio => "audio",
            DocumentKind::None => "none",
        }
    }

    /// Whether the payload is a file path rather than inline content.
    pub fn is_file(self) -> bool {
        matches!(self, DocumentKind::Image | DocumentKind::Audio)
    }
}

impl fmt::Display for DocumentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What an instance is: inline text, a file reference, or nothing at all.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DocumentRef {
    pub kind: DocumentKind,
    /// Inline text for `Text`, a dataset-relative path for `Image`/`Audio`,
    /// empty for `None`.
    pub payload: String,
    pub mime: Option<String>,
}

impl DocumentRef {
    pub fn none() -> Self {
        DocumentRef {
            kind: DocumentKind::None,
            payload: String::new(),
            mime: None,
        }
    }

    pub fn text(body: impl Into<String>) -> Self {
        DocumentRef {
            kind: DocumentKind::Text,
            payload: body.into(),
            mime: Some("text/plain; charset=utf-8".to_string()),
        }
    }

    pub fn file(kind: DocumentKind, path: impl Into<String>, mime: Option<String>) -> Self {
        DocumentRef {
            kind,
            payload: path.into(),
            mime,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Instance {
    pub id: String,
    pub document: DocumentRef,
    pub truth: LabelSet,
}

/// How a run's label sets were produced.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum RunOrigin {
    HardLabels,
    Thresholded {
        threshold: f64,
        comparison: Comparison,
    },
}

/// A run as read from disk, before it is aligned with the dataset's instances.
///
/// Entries keep file order and may contain unknown or repeated instance IDs;
/// [`validate`](crate::validate()) reports those.
#[derive(Debug, Clone, PartialEq)]
pub struct RunDraft {
    pub name: String,
    pub origin: RunOrigin,
    pub entries: Vec<(String, LabelSet)>,
}

impl RunDraft {
    pub fn hard(name: impl Into<String>) -> Self {
        RunDraft {
            name: name.into(),
            origin: RunOrigin::HardLabels,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, instance: impl Into<String>, labels: LabelSet) {
        self.entries.push((instance.into(), labels));
    }

    pub fn get(&self, instance: &str) -> Option<&LabelSet> {
        self.entries
            .iter()
            .find(|(id, _)| id == instance)
            .map(|(_, set)| set)
    }
}

/// Everything parsed for one dataset, prior to validation.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetDraft {
    pub name: String,
    pub registry: LabelRegistry,
    pub instances: Vec<Instance>,
    pub runs: Vec<RunDraft>,
}

/// One classifier's predictions, aligned index-for-index with
/// [`Dataset::instances`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ClassifierRun {
    pub name: String,
    pub origin: RunOrigin,
    predictions: Vec<LabelSet>,
}

impl ClassifierRun {
    pub fn predictions(&self) -> &[LabelSet] {
        &self.predictions
    }

    pub fn prediction(&self, instance: usize) -> &LabelSet {
        &self.predictions[instance]
    }
}

/// A validated, immutable dataset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Dataset {
    name: String,
    registry: LabelRegistry,
    instances: Vec<Instance>,
    runs: Vec<ClassifierRun>,
}

impl Dataset {
    /// Validates `draft` and aligns every run with the instance list.
    ///
    /// Missing prediction entries become empty label sets; the returned
    /// report carries a warning for each. Any error-level issue rejects the
    /// draft and the full report is returned instead.
    pub fn assemble(draft: DatasetDraft) -> Result<(Dataset, ValidationReport), ValidationReport> {
        let report = validate(&draft);
        if !report.is_ok() {
            return Err(report);
        }
        let DatasetDraft {
            name,
            registry,
            instances,
            runs,
        } = draft;
        let position: BTreeMap<&str, usize> = instances
            .iter()
            .enumerate()
            .map(|(i, inst)| (inst.id.as_str(), i))
            .collect();
        let runs = runs
            .into_iter()
            .map(|run| {
                let mut predictions = alloc::vec![LabelSet::new(); instances.len()];
                for (id, set) in run.entries {
                    predictions[position[id.as_str()]] = set;
                }
                ClassifierRun {
                    name: run.name,
                    origin: run.origin,
                    predictions,
                }
            })
            .collect();
        Ok((
            Dataset {
                name,
                registry,
                instances,
                runs,
            },
            report,
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn registry(&self) -> &LabelRegistry {
        &self.registry
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn runs(&self) -> &[ClassifierRun] {
        &self.runs
    }

    pub fn run(&self, name: &str) -> Result<&ClassifierRun, Error> {
        self.runs
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRun(name.to_string()))
    }

    pub fn instance_index(&self, id: &str) -> Option<usize> {
        self.instances.iter().position(|inst| inst.id == id)
    }

    pub fn truths(&self) -> impl ExactSizeIterator<Item = &LabelSet> + '_ {
        self.instances.iter().map(|inst| &inst.truth)
    }
}
