//! Audio ingestion, label manifests and the synthetic scene generator.

mod labels;
mod manifest;
mod synth;
mod wav;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

pub use labels::{tag_index, TagLabel, NUM_TAGS, TAGS, TAG_DESCRIPTIONS};
pub use manifest::{load_dataset, parse_manifest, parse_manifest_str, write_manifest, Manifest, ManifestEntry};
pub use synth::{
    event_prototype, pink_noise, synth_chunk, synth_corpus, write_corpus, SynthChunk, TruthInterval, EVENT_RMS,
    MAX_EVENTS,
};
pub use wav::{read_wav, write_wav};

use crate::error::{Error, Result};

/// Reads a `path,event,start_frame,end_frame` ground-truth CSV, grouped by path.
pub fn read_truth(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<TruthInterval>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let err = |row: usize, message: String| Error::Manifest { path: path.to_path_buf(), row, message };
    let mut out: BTreeMap<String, Vec<TruthInterval>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line.trim() != "path,event,start_frame,end_frame" {
                return Err(err(1, format!("unexpected header `{line}`")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err(i + 1, "expected 4 fields".into()));
        }
        let mut letters = fields[1].chars();
        let event = match (letters.next(), letters.next()) {
            (Some(c), None) => tag_index(c),
            _ => None,
        }
        .ok_or_else(|| err(i + 1, format!("unknown tag '{}'", fields[1])))?;
        let num = |s: &str| s.parse::<usize>().map_err(|_| err(i + 1, format!("bad frame index `{s}`")));
        let (start_frame, end_frame) = (num(fields[2])?, num(fields[3])?);
        if start_frame >= end_frame {
            return Err(err(i + 1, "empty interval".into()));
        }
        out.entry(fields[0].to_string()).or_default().push(TruthInterval { event, start_frame, end_frame });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = synth_corpus(&Rng::new(4), 6, 10.0).unwrap();
        write_corpus(dir.path(), &corpus).unwrap();
        let truth = read_truth(dir.path().join("truth.csv")).unwrap();
        for (i, c) in corpus.iter().enumerate() {
            let got = truth.get(&format!("chunk_{i:04}.wav")).cloned().unwrap_or_default();
            assert_eq!(got, c.truth_intervals);
        }
    }

    #[test]
    fn class_balance_over_500_chunks() {
        let corpus = synth_corpus(&Rng::new(0), 500, 10.0).unwrap();
        for e in 0..NUM_TAGS {
            let n = corpus.iter().filter(|c| c.label.has(e)).count();
            assert!(n as f64 >= 0.05 * 500.0, "tag {} appears in {n} chunks", TAGS[e]);
        }
    }
}
