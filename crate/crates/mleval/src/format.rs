//! Line-oriented dataset files: escaping, writing, and the manifest schema.
//!
//! ```text
//! manifest.json   {"name", "document_kind", "ground_truth", "predictions": [{"name", "file", "scored"}]}
//! labels.txt      one label per line, line index = label ID
//! truth / hard    instance_id \t doc_payload \t label;label;...
//! scored          instance_id \t label=score;label=score;...
//! ```
//!
//! Lines starting with `#` in truth and prediction files are comments.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use mleval_core::{Dataset, DocumentKind, LabelRegistry, LabelSet, RunDraft};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LABELS_FILE: &str = "labels.txt";
pub const LABEL_SEPARATOR: char = ';';
pub const FIELD_SEPARATOR: char = '\t';
pub const COMMENT_PREFIX: char = '#';

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub document_kind: DocumentKind,
    pub ground_truth: String,
    pub predictions: Vec<PredictionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEntry {
    pub name: String,
    pub file: String,
    pub scored: bool,
}

/// Escapes tabs, newlines, carriage returns and backslashes.
pub fn escape_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            other => out.push(other),
        }
    }
    out
}

/// Inverse of [`escape_text`]. On failure returns the 0-based char offset of
/// the offending backslash.
pub fn unescape_text(escaped: &str) -> Result<String, usize> {
    let mut out = String::with_capacity(escaped.len());
    let mut chars = escaped.chars().enumerate();
    while let Some((pos, c)) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next().map(|(_, c)| c) {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            _ => return Err(pos),
        }
    }
    Ok(out)
}

pub fn format_label_list(set: &LabelSet, registry: &LabelRegistry) -> String {
    let mut out = String::new();
    for (i, id) in set.iter().enumerate() {
        if i > 0 {
            out.push(LABEL_SEPARATOR);
        }
        out.push_str(
            registry
                .name(id)
                .expect("label set validated against registry"),
        );
    }
    out
}

pub fn format_labels(registry: &LabelRegistry) -> String {
    let mut out = String::new();
    for name in registry.names() {
        out.push_str(name);
        out.push('\n');
    }
    out
}

/// Ground-truth file body in dataset order.
pub fn format_truth(dataset: &Dataset) -> String {
    let mut out = String::new();
    for inst in dataset.instances() {
        let payload = match inst.document.kind {
            DocumentKind::Text => escape_text(&inst.document.payload),
            _ => inst.document.payload.clone(),
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            inst.id,
            payload,
            format_label_list(&inst.truth, dataset.registry())
        );
    }
    out
}

fn push_header(out: &mut String, header: Option<&str>) {
    if let Some(header) = header {
        for line in header.lines() {
            let _ = writeln!(out, "{COMMENT_PREFIX} {line}");
        }
    }
}

/// Hard prediction file for run `run` of `dataset`; document payloads are left empty.
pub fn format_predictions(dataset: &Dataset, run: usize, header: Option<&str>) -> String {
    let mut out = String::new();
    push_header(&mut out, header);
    let run = &dataset.runs()[run];
    for (inst, set) in dataset.instances().iter().zip(run.predictions()) {
        let _ = writeln!(
            out,
            "{}\t\t{}",
            inst.id,
            format_label_list(set, dataset.registry())
        );
    }
    out
}

/// Hard prediction file straight from a draft run, in entry order.
pub fn format_run_draft(run: &RunDraft, registry: &LabelRegistry, header: Option<&str>) -> String {
    let mut out = String::new();
    push_header(&mut out, header);
    for (id, set) in &run.entries {
        let _ = writeln!(out, "{}\t\t{}", id, format_label_list(set, registry));
    }
    out
}

/// Writes `dataset` as a complete directory with hard prediction files.
///
/// Document files referenced by image/audio instances are not copied.
pub fn write_dataset(dataset: &Dataset, kind: DocumentKind, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let predictions: Vec<PredictionEntry> = dataset
        .runs()
        .iter()
        .enumerate()
        .map(|(k, run)| PredictionEntry {
            name: run.name.clone(),
            file: format!("predictions_{k}.tsv"),
            scored: false,
        })
        .collect();
    for (k, entry) in predictions.iter().enumerate() {
        fs::write(dir.join(&entry.file), format_predictions(dataset, k, None))?;
    }
    let manifest = Manifest {
        name: dataset.name().to_string(),
        document_kind: kind,
        ground_truth: "ground_truth.tsv".into(),
        predictions,
    };
    fs::write(dir.join(LABELS_FILE), format_labels(dataset.registry()))?;
    fs::write(dir.join(&manifest.ground_truth), format_truth(dataset))?;
    let json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    fs::write(dir.join(MANIFEST_FILE), json + "\n")
}
