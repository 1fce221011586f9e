//! Dataset archives: `.tar` or gzip-compressed `.tar.gz` holding the
//! dataset directory layout, either at the top level or inside a single
//! top-level folder.

use std::fs;
use std::io::{self, Cursor, Read};
use std::path::{Component, Path, PathBuf};

use flate2::read::GzDecoder;

use crate::format::MANIFEST_FILE;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Unpacks `bytes` into `dest`, rejecting entries that would land outside it.
pub fn unpack(bytes: &[u8], dest: &Path) -> io::Result<()> {
    let reader: Box<dyn Read> = if bytes.starts_with(&GZIP_MAGIC) {
        Box::new(GzDecoder::new(Cursor::new(bytes)))
    } else {
        Box::new(Cursor::new(bytes))
    };
    let mut archive = tar::Archive::new(reader);
    for entry in archive.entries()? {
        let mut entry = entry?;
        let path = entry.path()?.into_owned();
        let safe = path
            .components()
            .all(|c| matches!(c, Component::Normal(_) | Component::CurDir));
        if !safe {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!(
                    "archive entry `{}` escapes the dataset root",
                    path.display()
                ),
            ));
        }
        let kind = entry.header().entry_type();
        if kind.is_dir() {
            fs::create_dir_all(dest.join(&path))?;
        } else if kind.is_file() {
            let target = dest.join(&path);
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent)?;
            }
            entry.unpack(&target)?;
        }
        // Links and special files are skipped.
    }
    Ok(())
}

/// The directory inside an unpacked archive that holds the manifest.
pub fn dataset_root(unpacked: &Path) -> io::Result<PathBuf> {
    if unpacked.join(MANIFEST_FILE).is_file() {
        return Ok(unpacked.to_path_buf());
    }
    let dirs: Vec<PathBuf> = fs::read_dir(unpacked)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    match dirs.as_slice() {
        [only] if only.join(MANIFEST_FILE).is_file() => Ok(only.clone()),
        _ => Err(io::Error::new(
            io::ErrorKind::NotFound,
            format!("archive does not contain {MANIFEST_FILE}"),
        )),
    }
}

/// Packs a dataset directory as an uncompressed tar, entries at top level.
pub fn pack(dir: &Path) -> io::Result<Vec<u8>> {
    let mut builder = tar::Builder::new(Vec::new());
    builder.follow_symlinks(false);
    builder.append_dir_all(".", dir)?;
    builder.into_inner()
}
