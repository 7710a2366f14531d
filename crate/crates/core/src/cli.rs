//! Command implementations behind the `attloc` binary. Each returns its
//! result instead of printing so it can be driven from tests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::data::{
    load_dataset, parse_manifest, read_truth, read_wav, synth_corpus, write_corpus, write_manifest, TruthInterval,
    TAGS,
};
use crate::error::{Error, Result};
use crate::features::{apply_norm, fit_norm, FeatureExtractor, MelChunk};
use crate::metrics::{eer_table_csv, localization_auc};
use crate::model::{forward, Architecture, ModelMode, ModelParams};
use crate::numerics::Rng;
use crate::train::{evaluate, grad_check, log_csv, train, Example, GradCheckReport, TrainOutcome};

/// Gradient-check tolerance on the maximum relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSummary {
    pub chunks: usize,
    pub intervals: usize,
    pub manifest: PathBuf,
}

/// Writes a synthetic corpus. With `val_chunks > 0` the last `val_chunks`
/// entries are also written as `val.csv` and the rest as `train.csv`.
pub fn cmd_synth(out: &Path, chunks: usize, seed: u64, snr_db: f64, val_chunks: usize) -> Result<SynthSummary> {
    if chunks == 0 {
        return Err(Error::Usage("--chunks must be at least 1".into()));
    }
    if val_chunks >= chunks && val_chunks > 0 {
        return Err(Error::Usage(format!("--val-chunks ({val_chunks}) must be smaller than --chunks ({chunks})")));
    }
    if !snr_db.is_finite() {
        return Err(Error::Usage(format!("--snr-db must be finite, got {snr_db}")));
    }
    let corpus = synth_corpus(&Rng::new(seed), chunks, snr_db)?;
    write_corpus(out, &corpus)?;
    if val_chunks > 0 {
        let rows: Vec<_> = corpus.iter().enumerate().map(|(i, c)| (format!("chunk_{i:04}.wav"), c.label)).collect();
        let split = chunks - val_chunks;
        write_manifest(out.join("train.csv"), &rows[..split])?;
        write_manifest(out.join("val.csv"), &rows[split..])?;
    }
    let intervals = corpus.iter().map(|c| c.truth_intervals.len()).sum();
    info!("wrote {chunks} chunks ({intervals} event intervals) to {}", out.display());
    Ok(SynthSummary { chunks, intervals, manifest: out.join("manifest.csv") })
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Usage(format!("missing {what}")))
}

/// Default training-log path for a checkpoint: `model.ckpt` → `model.log.csv`.
pub fn default_log_path(ckpt: &Path) -> PathBuf {
    ckpt.with_extension("log.csv")
}

/// Loads both splits, fits normalization on the training split only and
/// applies it to both.
pub fn load_splits(train_manifest: &Path, val_manifest: &Path) -> Result<(Vec<Example>, Vec<Example>, crate::features::NormStats)> {
    let train_raw = load_dataset(&parse_manifest(train_manifest)?, None)?;
    let val_raw = load_dataset(&parse_manifest(val_manifest)?, None)?;
    let chunks: Vec<MelChunk> = train_raw.iter().map(|(c, _)| c.clone()).collect();
    let norm = fit_norm(&chunks)?;
    let normed = |set: Vec<Example>| set.into_iter().map(|(c, l)| (apply_norm(&c, &norm), l)).collect::<Vec<_>>();
    Ok((normed(train_raw), normed(val_raw), norm))
}

/// Trains per `cfg` and writes the best checkpoint and the training log.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let manifest = required(&cfg.manifest, "--manifest")?;
    let val_manifest = required(&cfg.val_manifest, "--val-manifest")?;
    let out = required(&cfg.out, "--out")?;
    let (train_set, val_set, norm) = load_splits(manifest, val_manifest)?;
    info!("training {} on {} chunks, validating on {}", cfg.mode, train_set.len(), val_set.len());
    let started = Instant::now();
    let outcome = train(&train_set, &val_set, &cfg.train, cfg.mode)?;
    info!("finished in {:.1?}; best epoch {}", started.elapsed(), outcome.best_epoch);
    Checkpoint { mode: cfg.mode, norm, params: outcome.params.clone() }.save(out)?;
    let log_path = cfg.log.clone().unwrap_or_else(|| default_log_path(out));
    fs::write(&log_path, log_csv(&outcome.log)).map_err(|e| Error::io(format!("writing {}", log_path.display()), e))?;
    Ok(outcome)
}

#[derive(Clone, Debug)]
pub struct EvalReport {
    pub eer: Vec<Option<f64>>,
    pub eer_avg: Option<f64>,
    /// Mean frame-level localization AUC over (chunk, present event) pairs,
    /// when ground truth was supplied.
    pub localization_auc: Option<f64>,
    pub csv: String,
}

/// Mean localization AUC of `z_att · z_loc` over every (chunk, event) pair
/// whose event is present and does not cover the whole chunk.
pub fn mean_localization_auc(
    params: &ModelParams,
    mode: ModelMode,
    items: &[(MelChunk, Vec<TruthInterval>)],
) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (chunk, truth) in items {
        if truth.is_empty() {
            continue;
        }
        let trace = forward(chunk, params, mode)?;
        for auc in localization_auc(&trace.localization_scores(), truth).into_iter().flatten() {
            sum += auc;
            n += 1;
        }
    }
    Ok((n > 0).then(|| sum / n as f64))
}

pub fn cmd_eval(ckpt: &Path, manifest: &Path, truth: Option<&Path>) -> Result<EvalReport> {
    let ck = Checkpoint::load(ckpt)?;
    let m = parse_manifest(manifest)?;
    let data = load_dataset(&m, Some(&ck.norm))?;
    let ev = evaluate(&ck.params, ck.mode, &data)?;
    let localization_auc = match truth {
        None => None,
        Some(tp) => {
            let by_path = read_truth(tp)?;
            let items: Vec<(MelChunk, Vec<TruthInterval>)> = m
                .entries
                .iter()
                .zip(&data)
                .map(|(e, (c, _))| (c.clone(), by_path.get(&e.raw_path).cloned().unwrap_or_default()))
                .collect();
            mean_localization_auc(&ck.params, ck.mode, &items)?
        }
    };
    Ok(EvalReport { csv: eer_table_csv(&ev.eer), eer: ev.eer, eer_avg: ev.eer_avg, localization_auc })
}

/// Per-frame `frame,z_att,z_loc_*,o_*` CSV for one WAV file.
pub fn cmd_localize(ckpt: &Path, wav: &Path) -> Result<String> {
    let ck = Checkpoint::load(ckpt)?;
    let audio = read_wav(wav)?;
    let mel = apply_norm(&FeatureExtractor::new().extract(&audio)?, &ck.norm);
    let trace = forward(&mel, &ck.params, ck.mode)?;
    let mut out = String::from("frame,z_att");
    for prefix in ["z_loc", "o"] {
        for t in TAGS {
            let _ = write!(out, ",{prefix}_{t}");
        }
    }
    out.push('\n');
    for t in 0..trace.num_frames() {
        let _ = write!(out, "{t},{:.9}", trace.z_att[t]);
        for v in trace.z_loc.row(t).iter().chain(trace.o.row(t)) {
            let _ = write!(out, ",{v:.9}");
        }
        out.push('\n');
    }
    Ok(out)
}

/// Finite-difference check of the full model on a random `frames`-frame
/// chunk with Glorot-initialized parameters, in `mode`.
pub fn cmd_gradcheck(seed: u64, frames: usize, mode: ModelMode, eps: f64) -> Result<GradCheckReport> {
    if frames == 0 {
        return Err(Error::Usage("--frames must be at least 1".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Usage(format!("--eps must be positive, got {eps}")));
    }
    if frames > 16 {
        warn!("gradient check on {frames} frames will be slow");
    }
    let root = Rng::new(seed);
    let params = ModelParams::init(Architecture::default(), &mut root.derive("gradcheck-params"));
    let mut data_rng = root.derive("gradcheck-chunk");
    let chunk = MelChunk::new(data_rng.matrix_normal(frames, crate::features::N_MELS))?;
    let label = crate::data::TagLabel::from_indices((0..TAGS.len()).filter(|_| data_rng.uniform() < 0.4));
    grad_check(&params, &chunk, &label, mode, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_path_default() {
        assert_eq!(default_log_path(Path::new("/x/model.ckpt")), PathBuf::from("/x/model.log.csv"));
    }

    #[test]
    fn synth_rejects_bad_arguments() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(cmd_synth(dir.path(), 0, 0, 10.0, 0).unwrap_err().exit_code(), 1);
        assert_eq!(cmd_synth(dir.path(), 3, 0, 10.0, 3).unwrap_err().exit_code(), 1);
        assert_eq!(cmd_synth(dir.path(), 3, 0, f64::NAN, 0).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn gradcheck_rejects_bad_arguments() {
        assert_eq!(cmd_gradcheck(0, 0, ModelMode::AttLoc, 1e-5).unwrap_err().exit_code(), 1);
        assert_eq!(cmd_gradcheck(0, 2, ModelMode::AttLoc, 0.0).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn train_requires_paths() {
        let err = cmd_train(&RunConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("--manifest"));
    }
}
