//! Result files, each written to a temporary sibling and renamed into place.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{CliError, Result};

pub const EVENTS: &str = "events.txt";
pub const COUNTS: &str = "counts.tsv";
pub const TOMOGRAPHY: &str = "tomography.txt";
pub const SUMMARY_TEXT: &str = "summary.txt";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SCAN: &str = "scan.tsv";
pub const DIAGNOSTICS: &str = "diagnostics.txt";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Streams `fill` into `dir/name` through a temporary file in the same directory.
pub fn write_with(
    dir: &Path,
    name: &str,
    fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let written = fs::File::create(&tmp).and_then(|f| {
        let mut w = BufWriter::new(f);
        fill(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()
    });
    if let Err(e) = written.and_then(|_| fs::rename(&tmp, &path)) {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(&path, e));
    }
    Ok(())
}

pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    write_with(dir, name, |w| w.write_all(contents.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replaces_existing_files_without_leftovers() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.txt", "first").unwrap();
        write_atomic(dir.path(), "a.txt", "second").unwrap();
        assert_eq!(
            fs::read_to_string(dir.path().join("a.txt")).unwrap(),
            "second"
        );
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
