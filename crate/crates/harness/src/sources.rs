//! Source-tree discovery and file hashing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::{HarnessError, Result};

const EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// One image of the source tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceImage {
    /// Relative path without extension, `/`-separated.
    pub id: String,
    /// Relative path, `/`-separated.
    pub rel_path: String,
    pub path: PathBuf,
}

/// Every PNG or JPEG below `root`, sorted by id.
pub fn discover(root: &Path) -> Result<Vec<SourceImage>> {
    if !root.is_dir() {
        return Err(HarnessError::Parameter(format!("source `{}` is not a directory", root.display())));
    }
    let mut by_id: BTreeMap<String, SourceImage> = BTreeMap::new();
    for entry in WalkDir::new(root).follow_links(true).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            HarnessError::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let Some(ext) = path.extension().and_then(|e| e.to_str()) else { continue };
        if !EXTENSIONS.contains(&ext.to_ascii_lowercase().as_str()) {
            continue;
        }
        let rel = path.strip_prefix(root).expect("walk stays below root");
        let rel_path = slash_path(rel)?;
        let id = slash_path(&rel.with_extension(""))?;
        if let Some(prev) = by_id.get(&id) {
            return Err(HarnessError::Parameter(format!(
                "sources `{}` and `{rel_path}` share the id `{id}`",
                prev.rel_path
            )));
        }
        by_id.insert(id.clone(), SourceImage { id, rel_path, path: path.to_path_buf() });
    }
    if by_id.is_empty() {
        return Err(HarnessError::Validation(format!("no PNG or JPEG images below `{}`", root.display())));
    }
    Ok(by_id.into_values().collect())
}

fn slash_path(p: &Path) -> Result<String> {
    let parts: Option<Vec<&str>> = p.components().map(|c| c.as_os_str().to_str()).collect();
    parts
        .map(|v| v.join("/"))
        .ok_or_else(|| HarnessError::Parameter(format!("path `{}` is not valid UTF-8", p.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_drop_extension_and_sort() {
        let dir = tempfile::tempdir().unwrap();
        for p in ["b/x.PNG", "a.jpg", "notes.txt", "b/c/y.jpeg"] {
            write_file(&dir.path().join(p), b"x").unwrap();
        }
        let ids: Vec<_> = discover(dir.path()).unwrap().into_iter().map(|s| s.id).collect();
        assert_eq!(ids, ["a", "b/c/y", "b/x"]);
    }

    #[test]
    fn clashing_ids_and_empty_trees_fail() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(discover(dir.path()), Err(HarnessError::Validation(_))));
        write_file(&dir.path().join("a.png"), b"x").unwrap();
        write_file(&dir.path().join("a.jpg"), b"x").unwrap();
        assert!(matches!(discover(dir.path()), Err(HarnessError::Parameter(_))));
    }
}
