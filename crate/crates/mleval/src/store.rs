//! Loaded datasets and content addressing.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use mleval_core::{Dataset, DocumentKind, ValidationReport};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::format::Manifest;

/// A dataset together with where it came from and what validation found.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    /// Content hash of the dataset directory, see [`content_id`].
    pub id: String,
    pub root: PathBuf,
    pub kind: DocumentKind,
    pub manifest: Manifest,
    pub dataset: Dataset,
    /// Warnings only; datasets with errors never load.
    pub report: ValidationReport,
}

/// Hex length of dataset IDs.
pub const ID_LEN: usize = 16;

/// SHA-256 over every regular file under `root`, in sorted relative-path
/// order, truncated to [`ID_LEN`] hex digits. Identical files give identical
/// IDs wherever they live on disk.
pub fn content_id(root: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(io::Error::other)?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .map_err(io::Error::other)?
            .to_string_lossy()
            .replace('\\', "/");
        let bytes = fs::read(entry.path())?;
        hasher.update((rel.len() as u64).to_le_bytes());
        hasher.update(rel.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    let digest = hasher.finalize();
    Ok(digest
        .iter()
        .take(ID_LEN / 2)
        .map(|b| format!("{b:02x}"))
        .collect())
}
