//! Reading a dataset directory into a validated [`Dataset`].

use std::fs;
use std::path::{Component, Path, PathBuf};

use mleval_core::{
    apply_threshold, Comparison, Dataset, DatasetDraft, DocumentKind, DocumentRef,
    Error as CoreError, Instance, Issue, IssueCode, LabelId, LabelRegistry, LabelSet, RunDraft,
    ScoredRun, ValidationReport,
};

use crate::error::{IngestError, Location};
use crate::format::{
    unescape_text, Manifest, PredictionEntry, COMMENT_PREFIX, FIELD_SEPARATOR, LABELS_FILE,
    LABEL_SEPARATOR, MANIFEST_FILE,
};
use crate::store::{content_id, LoadedDataset};

/// How scored prediction files become hard label sets at load time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    pub threshold: f64,
    pub comparison: Comparison,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            threshold: 0.5,
            comparison: Comparison::Greater,
        }
    }
}

fn read(root: &Path, rel: &str) -> Result<String, IngestError> {
    let path = resolve(root, rel)?;
    fs::read_to_string(&path).map_err(|e| IngestError::io(rel, path, e))
}

/// Joins a dataset-relative path onto `root`, refusing absolute paths and `..`.
pub fn resolve(root: &Path, rel: &str) -> Result<PathBuf, IngestError> {
    let candidate = Path::new(rel);
    let escapes = candidate
        .components()
        .any(|c| !matches!(c, Component::Normal(_) | Component::CurDir));
    if rel.is_empty() || escapes {
        return Err(IngestError::syntax(
            MANIFEST_FILE,
            1,
            1,
            format!("path `{rel}` must be relative to the dataset root"),
        ));
    }
    Ok(root.join(candidate))
}

pub fn parse_manifest(text: &str) -> Result<Manifest, IngestError> {
    serde_json::from_str(text).map_err(|e| IngestError::Manifest {
        file: MANIFEST_FILE.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_labels(text: &str) -> Result<LabelRegistry, IngestError> {
    let lines: Vec<&str> = text
        .strip_suffix('\n')
        .unwrap_or(text)
        .split('\n')
        .collect();
    if text.trim().is_empty() {
        return Err(IngestError::EmptyLabels);
    }
    for (i, line) in lines.iter().enumerate() {
        if let Some(col) = line.find([LABEL_SEPARATOR, FIELD_SEPARATOR]) {
            return Err(IngestError::syntax(
                LABELS_FILE,
                i + 1,
                line[..col].chars().count() + 1,
                "label names may not contain `;` or tab",
            ));
        }
    }
    LabelRegistry::new(lines).map_err(|e| match e {
        CoreError::DuplicateLabel {
            name,
            first,
            second,
        } => IngestError::DuplicateLabel {
            name,
            first,
            second,
        },
        CoreError::EmptyLabel(line) => {
            IngestError::syntax(LABELS_FILE, line, 1, "label names must be non-empty")
        }
        _ => IngestError::EmptyLabels,
    })
}

/// Non-comment, non-empty lines with their 1-based line numbers. A
/// trailing `\r` is dropped so CRLF files parse.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with(COMMENT_PREFIX))
}

/// Splits a line into exactly `n` tab-separated fields, returning each with
/// its 1-based starting column.
fn fields<'a>(
    file: &str,
    line_no: usize,
    line: &'a str,
    n: usize,
) -> Result<Vec<(usize, &'a str)>, IngestError> {
    let mut out = Vec::with_capacity(n);
    let mut column = 1;
    for part in line.split(FIELD_SEPARATOR) {
        out.push((column, part));
        column += part.chars().count() + 1;
    }
    if out.len() != n {
        let column = if out.len() > n {
            out[n].0 - 1
        } else {
            column - 1
        };
        return Err(IngestError::syntax(
            file,
            line_no,
            column,
            format!("expected {n} tab-separated fields, found {}", out.len()),
        ));
    }
    Ok(out)
}

/// Splits `;`-separated items, yielding each trimmed item and its column.
fn items(field: &str, start: usize) -> impl Iterator<Item = (usize, &str)> {
    let mut column = start;
    let parts: Vec<(usize, &str)> = if field.is_empty() {
        Vec::new()
    } else {
        field
            .split(LABEL_SEPARATOR)
            .map(|part| {
                let here = column;
                column += part.chars().count() + 1;
                (here, part)
            })
            .collect()
    };
    parts.into_iter()
}

fn parse_label_list(
    file: &str,
    line: usize,
    column: usize,
    field: &str,
    registry: &LabelRegistry,
) -> Result<LabelSet, IngestError> {
    let mut set = LabelSet::new();
    for (col, name) in items(field, column) {
        let name = name.trim();
        if name.is_empty() {
            return Err(IngestError::syntax(
                file,
                line,
                col,
                "empty label name in list",
            ));
        }
        let id = registry.id(name).ok_or_else(|| IngestError::UnknownLabel {
            at: Location {
                file: file.into(),
                line,
                column: col,
            },
            label: name.into(),
        })?;
        set.insert(id);
    }
    Ok(set)
}

fn guess_mime(path: &str) -> Option<String> {
    mime_guess::from_path(path)
        .first()
        .map(|m| m.essence_str().to_string())
}

pub fn parse_truth(
    file: &str,
    text: &str,
    registry: &LabelRegistry,
    kind: DocumentKind,
) -> Result<Vec<Instance>, IngestError> {
    let mut instances = Vec::new();
    for (line_no, line) in data_lines(text) {
        let f = fields(file, line_no, line, 3)?;
        let (_, id) = f[0];
        let (payload_col, payload) = f[1];
        let document = match kind {
            DocumentKind::Text => DocumentRef::text(unescape_text(payload).map_err(|pos| {
                IngestError::syntax(file, line_no, payload_col + pos, "invalid escape sequence")
            })?),
            DocumentKind::Image | DocumentKind::Audio => {
                DocumentRef::file(kind, payload, guess_mime(payload))
            }
            DocumentKind::None => DocumentRef {
                kind,
                payload: payload.to_string(),
                mime: None,
            },
        };
        let truth = parse_label_list(file, line_no, f[2].0, f[2].1, registry)?;
        instances.push(Instance {
            id: id.to_string(),
            document,
            truth,
        });
    }
    Ok(instances)
}

/// Hard prediction file; the payload column is ignored.
pub fn parse_hard_predictions(
    name: &str,
    file: &str,
    text: &str,
    registry: &LabelRegistry,
) -> Result<RunDraft, IngestError> {
    let mut run = RunDraft::hard(name);
    for (line_no, line) in data_lines(text) {
        let f = fields(file, line_no, line, 3)?;
        let set = parse_label_list(file, line_no, f[2].0, f[2].1, registry)?;
        run.push(f[0].1, set);
    }
    Ok(run)
}

pub fn parse_scored_predictions(
    name: &str,
    file: &str,
    text: &str,
    registry: &LabelRegistry,
) -> Result<ScoredRun, IngestError> {
    let mut scores = Vec::new();
    for (line_no, line) in data_lines(text) {
        let f = fields(file, line_no, line, 2)?;
        let (_, id) = f[0];
        let mut row: Vec<(LabelId, f64)> = Vec::new();
        for (col, item) in items(f[1].1, f[1].0) {
            let at = |column| Location {
                file: file.into(),
                line: line_no,
                column,
            };
            let (label, value) = item
                .rsplit_once('=')
                .ok_or_else(|| IngestError::syntax(file, line_no, col, "expected `label=score`"))?;
            let label = label.trim();
            let label_id = registry
                .id(label)
                .ok_or_else(|| IngestError::UnknownLabel {
                    at: at(col),
                    label: label.into(),
                })?;
            let value_col = col + label.chars().count() + 1;
            let score: f64 = value.trim().parse().map_err(|_| {
                IngestError::syntax(file, line_no, value_col, format!("invalid score `{value}`"))
            })?;
            if !(0.0..=1.0).contains(&score) {
                return Err(IngestError::Score {
                    at: at(value_col),
                    source: mleval_core::ThresholdError::ScoreOutOfRange {
                        instance: id.into(),
                        label: label.into(),
                        score,
                    },
                });
            }
            if row.iter().any(|(l, _)| *l == label_id) {
                return Err(IngestError::syntax(
                    file,
                    line_no,
                    col,
                    format!("label `{label}` scored twice"),
                ));
            }
            row.push((label_id, score));
        }
        scores.push((id.to_string(), row));
    }
    Ok(ScoredRun {
        name: name.into(),
        scores,
    })
}

fn load_run(
    root: &Path,
    entry: &PredictionEntry,
    registry: &LabelRegistry,
    options: &LoadOptions,
) -> Result<RunDraft, IngestError> {
    let text = read(root, &entry.file)?;
    if !entry.scored {
        return parse_hard_predictions(&entry.name, &entry.file, &text, registry);
    }
    let scored = parse_scored_predictions(&entry.name, &entry.file, &text, registry)?;
    apply_threshold(&scored, registry, options.threshold, options.comparison).map_err(|source| {
        IngestError::Score {
            at: Location {
                file: entry.file.clone(),
                line: 1,
                column: 1,
            },
            source,
        }
    })
}

/// Reads manifest, registry and the scores of one scored run.
pub fn load_scored_run(root: &Path, run: &str) -> Result<(LabelRegistry, ScoredRun), IngestError> {
    let manifest = parse_manifest(&read(root, MANIFEST_FILE)?)?;
    let registry = parse_labels(&read(root, LABELS_FILE)?)?;
    let entry = manifest
        .predictions
        .iter()
        .find(|p| p.name == run)
        .ok_or_else(|| IngestError::UnknownRun(run.into()))?;
    if !entry.scored {
        return Err(IngestError::NotScored(run.into()));
    }
    let text = read(root, &entry.file)?;
    let scored = parse_scored_predictions(&entry.name, &entry.file, &text, &registry)?;
    Ok((registry, scored))
}

fn check_documents(root: &Path, instances: &[Instance]) -> Result<ValidationReport, IngestError> {
    let mut report = ValidationReport::new();
    for inst in instances.iter().filter(|i| i.document.kind.is_file()) {
        let path = resolve(root, &inst.document.payload)?;
        if !path.is_file() {
            report.push(Issue::warning(
                IssueCode::MissingDocument,
                format!(
                    "document `{}` of instance `{}` not found under the dataset root",
                    inst.document.payload, inst.id
                ),
            ));
        }
    }
    Ok(report)
}

/// Parses and validates the dataset rooted at `root`.
///
/// Prediction files are parsed in parallel; assembly is sequential and in
/// manifest order, so loading is deterministic.
pub fn load_dataset(root: &Path, options: &LoadOptions) -> Result<LoadedDataset, IngestError> {
    let manifest = parse_manifest(&read(root, MANIFEST_FILE)?)?;
    let registry = parse_labels(&read(root, LABELS_FILE)?)?;
    let truth_text = read(root, &manifest.ground_truth)?;
    let instances = parse_truth(
        &manifest.ground_truth,
        &truth_text,
        &registry,
        manifest.document_kind,
    )?;

    let runs: Vec<Result<RunDraft, IngestError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = manifest
            .predictions
            .iter()
            .map(|entry| scope.spawn(|| load_run(root, entry, &registry, options)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("prediction parser panicked"))
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut report = check_documents(root, &instances)?;
    let draft = DatasetDraft {
        name: manifest.name.clone(),
        registry,
        instances,
        runs,
    };
    let (dataset, validation) = Dataset::assemble(draft).map_err(IngestError::Invalid)?;
    report.extend(validation);
    let id = content_id(root).map_err(|e| IngestError::io(".", root, e))?;
    Ok(LoadedDataset {
        id,
        root: root.to_path_buf(),
        kind: manifest.document_kind,
        manifest,
        dataset,
        report,
    })
}
