//! `path,tags` CSV manifests.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::{apply_norm, FeatureExtractor, MelChunk, NormStats};

use super::labels::TagLabel;
use super::wav::read_wav;

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    /// Resolved audio path (relative entries are taken from the manifest's directory).
    pub audio_path: PathBuf,
    /// Path exactly as written in the manifest.
    pub raw_path: String,
    pub label: TagLabel,
    /// 1-based line number in the manifest file.
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub path: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading manifest {}", path.display()), e))?;
    parse_manifest_str(&text, path)
}

pub fn parse_manifest_str(text: &str, path: &Path) -> Result<Manifest> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let err = |row: usize, message: String| Error::Manifest { path: path.to_path_buf(), row, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "path,tags" => {}
        Some((_, h)) => return Err(err(1, format!("expected header `path,tags`, found `{}`", h.trim()))),
        None => return Err(err(1, "empty manifest".into())),
    }
    let mut entries = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (raw, tags) = line.rsplit_once(',').ok_or_else(|| err(row, "expected `path,tags`".into()))?;
        let raw = raw.trim();
        if raw.is_empty() {
            return Err(err(row, "empty path".into()));
        }
        let label: TagLabel = tags.parse().map_err(|e: Error| err(row, e.to_string()))?;
        let p = Path::new(raw);
        let audio_path = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        entries.push(ManifestEntry { audio_path, raw_path: raw.to_string(), label, line: row });
    }
    Ok(Manifest { path: path.to_path_buf(), entries })
}

pub fn write_manifest(path: impl AsRef<Path>, rows: &[(String, TagLabel)]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("path,tags\n");
    for (p, l) in rows {
        out.push_str(&format!("{p},{l}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Reads and featurizes every entry; applies `norm` when given.
pub fn load_dataset(manifest: &Manifest, norm: Option<&NormStats>) -> Result<Vec<(MelChunk, TagLabel)>> {
    let fx = FeatureExtractor::new();
    manifest
        .entries
        .iter()
        .map(|e| {
            let wrap = |err: Error| Error::Manifest { path: manifest.path.clone(), row: e.line, message: err.to_string() };
            if !e.audio_path.is_file() {
                return Err(wrap(Error::Dataset(format!("missing audio file {}", e.audio_path.display()))));
            }
            let audio = read_wav(&e.audio_path).map_err(wrap)?;
            let mel = fx.extract(&audio).map_err(wrap)?;
            let mel = match norm {
                Some(s) => apply_norm(&mel, s),
                None => mel,
            };
            Ok((mel, e.label))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Manifest> {
        parse_manifest_str(text, Path::new("/data/m.csv"))
    }

    #[test]
    fn parses_rows() {
        let m = parse("path,tags\nx.wav,cp\ny.wav,\n/abs/z.wav,bv\n").unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.entries[0].label.to_string(), "cp");
        assert_eq!(m.entries[0].audio_path, PathBuf::from("/data/x.wav"));
        assert!(m.entries[1].label.is_empty());
        assert_eq!(m.entries[2].audio_path, PathBuf::from("/abs/z.wav"));
    }

    #[test]
    fn bad_tag_reports_row() {
        let err = parse("path,tags\nx.wav,c\nx.wav,cz\n").unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");
        assert!(err.contains("unknown tag 'z'"), "{err}");
    }

    #[test]
    fn header_required() {
        assert!(parse("file,label\nx.wav,c\n").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn missing_audio_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let mp = dir.path().join("m.csv");
        fs::write(&mp, "path,tags\nnope.wav,c\n").unwrap();
        let m = parse_manifest(&mp).unwrap();
        let err = load_dataset(&m, None).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("missing audio"), "{err}");
    }
}
