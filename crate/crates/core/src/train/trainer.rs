use std::fmt::Write as _;

use log::info;
use rayon::prelude::*;

use crate::data::{TagLabel, TAGS};
use crate::error::{Error, Result};
use crate::features::MelChunk;
use crate::metrics::{eer_average, eer_per_tag, ScoredSet};
use crate::model::{predict, ModelMode, ModelParams};
use crate::numerics::Rng;

use super::adam::{adam_step, AdamState};
use super::backward::{backward, Gradients};
use super::loss::bce_loss;
use super::TrainConfig;

pub type Example = (MelChunk, TagLabel);

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    /// 0 is the untrained model.
    pub epoch: usize,
    /// Mean per-chunk loss over the training set (running mean during the epoch).
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_eer: Vec<Option<f64>>,
    pub val_eer_avg: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation EER average.
    pub params: ModelParams,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub mean_loss: f64,
    pub scores: ScoredSet,
    pub eer: Vec<Option<f64>>,
    pub eer_avg: Option<f64>,
}

pub fn evaluate(params: &ModelParams, mode: ModelMode, data: &[Example]) -> Result<Evaluation> {
    let outputs: Vec<Vec<f64>> = data.par_iter().map(|(x, _)| predict(x, params, mode)).collect::<Result<_>>()?;
    let mut scores = ScoredSet::new(params.architecture().events);
    let mut loss = 0.0;
    for (o, (_, label)) in outputs.iter().zip(data) {
        loss += bce_loss(o, label);
        scores.push(o, &label.bits());
    }
    let eer = eer_per_tag(&scores);
    let eer_avg = eer_average(&eer);
    Ok(Evaluation { mean_loss: loss / data.len().max(1) as f64, scores, eer, eer_avg })
}

/// Mean loss and mean gradient over a batch. Chunks are processed in
/// parallel windows but summed in batch order, so the result does not depend
/// on the worker count.
pub fn batch_gradients(params: &ModelParams, mode: ModelMode, batch: &[&Example]) -> Result<(f64, Gradients)> {
    let window = rayon::current_num_threads().max(1);
    let mut total = Gradients::zeros_like(params);
    let mut loss = 0.0;
    for group in batch.chunks(window) {
        let results: Vec<(f64, Gradients)> =
            group.par_iter().map(|(x, l)| backward(x, l, params, mode)).collect::<Result<_>>()?;
        for (l, g) in &results {
            loss += l;
            total.accumulate(g)?;
        }
    }
    let n = batch.len() as f64;
    total.scale(1.0 / n);
    Ok((loss / n, total))
}

fn better(candidate: &EpochLog, best: &EpochLog) -> bool {
    let key = |e: &EpochLog| (e.val_eer_avg.unwrap_or(f64::INFINITY), e.val_loss);
    let (a, b) = (key(candidate), key(best));
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

pub fn train(train_set: &[Example], val_set: &[Example], config: &TrainConfig, mode: ModelMode) -> Result<TrainOutcome> {
    config.validate()?;
    let params = ModelParams::init(config.arch, &mut Rng::new(config.seed).derive("init"));
    train_from(params, train_set, val_set, config, mode)
}

/// Trains starting from `params` instead of a fresh initialization.
pub fn train_from(
    mut params: ModelParams,
    train_set: &[Example],
    val_set: &[Example],
    config: &TrainConfig,
    mode: ModelMode,
) -> Result<TrainOutcome> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Dataset(format!(
            "training needs non-empty splits (train={}, validation={})",
            train_set.len(),
            val_set.len()
        )));
    }
    config.validate()?;
    let root = Rng::new(config.seed);
    let mut shuffle_rng = root.derive("shuffle");
    let mut adam = AdamState::new(&params);

    let initial_train = evaluate(&params, mode, train_set)?;
    let initial_val = evaluate(&params, mode, val_set)?;
    let mut log = vec![EpochLog {
        epoch: 0,
        train_loss: initial_train.mean_loss,
        val_loss: initial_val.mean_loss,
        val_eer: initial_val.eer,
        val_eer_avg: initial_val.eer_avg,
    }];
    info!("epoch 0: train_loss {:.4} val_loss {:.4} val_eer {:?}", log[0].train_loss, log[0].val_loss, log[0].val_eer_avg);
    let mut best = (0usize, params.clone());

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=config.epochs {
        if config.shuffle {
            shuffle_rng.shuffle(&mut order);
        }
        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&Example> = idx.iter().map(|&i| &train_set[i]).collect();
            let (loss, mut grads) = batch_gradients(&params, mode, &batch).map_err(|e| match e {
                Error::NonFinite(m) => Error::NonFinite(format!("epoch {epoch}, batch {b}: {m}")),
                other => other,
            })?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("epoch {epoch}, batch {b}: loss is {loss}")));
            }
            if let Some(max_norm) = config.clip_norm {
                let norm = grads.l2_norm();
                if norm > max_norm {
                    grads.scale(max_norm / norm);
                }
            }
            adam_step(&mut params, &grads, &mut adam, &config.adam)?;
            loss_sum += loss * batch.len() as f64;
        }
        let val = evaluate(&params, mode, val_set)?;
        let entry = EpochLog {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_loss: val.mean_loss,
            val_eer: val.eer,
            val_eer_avg: val.eer_avg,
        };
        info!(
            "epoch {epoch}: train_loss {:.4} val_loss {:.4} val_eer {:?}",
            entry.train_loss, entry.val_loss, entry.val_eer_avg
        );
        if better(&entry, &log[best.0]) {
            best = (epoch, params.clone());
        }
        log.push(entry);
    }
    Ok(TrainOutcome { params: best.1, best_epoch: best.0, log })
}

/// `epoch,train_loss,val_loss,val_eer_b,...,val_eer_v,val_eer_avg`.
pub fn log_csv(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss");
    for t in TAGS {
        let _ = write!(out, ",val_eer_{t}");
    }
    out.push_str(",val_eer_avg\n");
    let fmt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| format!("{x:.6}"));
    for e in log {
        let _ = write!(out, "{},{:.6},{:.6}", e.epoch, e.train_loss, e.val_loss);
        for v in &e.val_eer {
            let _ = write!(out, ",{}", fmt(*v));
        }
        let _ = writeln!(out, ",{}", fmt(e.val_eer_avg));
    }
    out
}
