//! Synthetic scenes: pink-noise background plus up to three spectrally
//! distinct event prototypes, with frame-level ground truth kept aside for
//! evaluating localization.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{frame_count, AudioChunk, CHUNK_SAMPLES, HOP, SAMPLE_RATE, WINDOW};
use crate::numerics::Rng;

use super::labels::{TagLabel, NUM_TAGS, TAGS};
use super::manifest::write_manifest;
use super::wav::write_wav;

pub const EVENT_RMS: f64 = 0.1;
pub const EVENT_PEAK: f64 = 0.6;
pub const MAX_EVENTS: usize = 3;
pub const MIN_EVENT_SECONDS: f64 = 0.3;
pub const MAX_EVENT_SECONDS: f64 = 1.5;
const FADE_SAMPLES: usize = 160;

/// Frames `[start_frame, end_frame)` during which `event` sounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruthInterval {
    pub event: usize,
    pub start_frame: usize,
    pub end_frame: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthChunk {
    pub audio: AudioChunk,
    pub label: TagLabel,
    pub truth_intervals: Vec<TruthInterval>,
}

impl SynthChunk {
    pub fn num_frames(&self) -> usize {
        frame_count(self.audio.len())
    }

    /// Per-frame membership mask for one event.
    pub fn frame_mask(&self, event: usize) -> Vec<bool> {
        let mut mask = vec![false; self.num_frames()];
        for iv in self.truth_intervals.iter().filter(|iv| iv.event == event) {
            mask[iv.start_frame..iv.end_frame].iter_mut().for_each(|m| *m = true);
        }
        mask
    }
}

/// Pink noise (Paul Kellet's filter over white noise), scaled to `rms`.
pub fn pink_noise(rng: &mut Rng, len: usize, rms: f64) -> Vec<f64> {
    let mut b = [0.0f64; 7];
    let mut out: Vec<f64> = (0..len)
        .map(|_| {
            let w = 2.0 * rng.uniform() - 1.0;
            b[0] = 0.99886 * b[0] + w * 0.0555179;
            b[1] = 0.99332 * b[1] + w * 0.0750759;
            b[2] = 0.96900 * b[2] + w * 0.1538520;
            b[3] = 0.86650 * b[3] + w * 0.3104856;
            b[4] = 0.55000 * b[4] + w * 0.5329522;
            b[5] = -0.7616 * b[5] - w * 0.0168980;
            let p = b.iter().sum::<f64>() + w * 0.5362;
            b[6] = w * 0.115926;
            p
        })
        .collect();
    scale_to_rms(&mut out, rms);
    out
}

fn scale_to_rms(x: &mut [f64], rms: f64) {
    let cur = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    if cur > 0.0 {
        x.iter_mut().for_each(|v| *v *= rms / cur);
    }
}

fn jitter(rng: &mut Rng, value: f64, frac: f64) -> f64 {
    value * (1.0 + rng.uniform_range(-frac, frac))
}

/// One event prototype of `len` samples, before level normalization.
///
/// | tag | prototype |
/// |-----|-----------|
/// | b | band-limited noise, 3.2-4.8 kHz |
/// | c | harmonic stack, f0 ≈ 350 Hz, 4 partials |
/// | f | amplitude-modulated 1.8 kHz tone |
/// | m | low 200 Hz tone |
/// | o | fixed 2.6 kHz tone |
/// | p | click train of decaying noise bursts |
/// | v | repeating 5.2-7.2 kHz chirp |
pub fn event_prototype(event: usize, rng: &mut Rng, len: usize) -> Vec<f64> {
    let sr = f64::from(SAMPLE_RATE);
    let t = |n: usize| n as f64 / sr;
    let phase = rng.uniform() * 2.0 * PI;
    match event {
        0 => {
            let partials: Vec<(f64, f64)> =
                (0..60).map(|_| (rng.uniform_range(3200.0, 4800.0), rng.uniform() * 2.0 * PI)).collect();
            (0..len)
                .map(|n| partials.iter().map(|(f, p)| (2.0 * PI * f * t(n) + p).sin()).sum())
                .collect()
        }
        1 => {
            let f0 = jitter(rng, 350.0, 0.05);
            (0..len)
                .map(|n| (1..=4).map(|k| (2.0 * PI * f0 * k as f64 * t(n) + phase * k as f64).sin() / k as f64).sum())
                .collect()
        }
        2 => {
            let fc = jitter(rng, 1800.0, 0.03);
            let fm = jitter(rng, 6.0, 0.2);
            (0..len)
                .map(|n| (1.0 + 0.8 * (2.0 * PI * fm * t(n)).sin()) * (2.0 * PI * fc * t(n) + phase).sin())
                .collect()
        }
        3 => {
            let f = jitter(rng, 200.0, 0.03);
            (0..len).map(|n| (2.0 * PI * f * t(n) + phase).sin()).collect()
        }
        4 => {
            let f = jitter(rng, 2600.0, 0.02);
            (0..len).map(|n| (2.0 * PI * f * t(n) + phase).sin()).collect()
        }
        5 => {
            let period = (jitter(rng, 0.1, 0.2) * sr) as usize;
            let burst = 64;
            let mut x = vec![0.0; len];
            let mut start = rng.below(period / 2 + 1);
            while start < len {
                for k in 0..burst.min(len - start) {
                    x[start + k] = (2.0 * rng.uniform() - 1.0) * (-(k as f64) / 16.0).exp();
                }
                start += period;
            }
            x
        }
        6 => {
            let (f_lo, f_hi) = (5200.0, 7200.0);
            let period = jitter(rng, 0.25, 0.1);
            let rate = (f_hi - f_lo) / period;
            (0..len)
                .map(|n| {
                    let tau = t(n) % period;
                    (2.0 * PI * (f_lo * tau + 0.5 * rate * tau * tau) + phase).sin()
                })
                .collect()
        }
        _ => panic!("event index {event} out of range"),
    }
}

fn fade(x: &mut [f64]) {
    let n = FADE_SAMPLES.min(x.len() / 2);
    for i in 0..n {
        let g = 0.5 - 0.5 * (PI * i as f64 / n as f64).cos();
        x[i] *= g;
        let j = x.len() - 1 - i;
        x[j] *= g;
    }
}

/// Frames whose window center falls inside `[onset, end)` samples.
fn frames_covering(onset: usize, end: usize, num_frames: usize) -> Option<(usize, usize)> {
    let inside: Vec<usize> = (0..num_frames)
        .filter(|f| {
            let center = f * HOP + WINDOW / 2;
            center >= onset && center < end
        })
        .collect();
    Some((*inside.first()?, *inside.last()? + 1))
}

pub fn synth_chunk(rng: &mut Rng, snr_db: f64) -> SynthChunk {
    let len = CHUNK_SAMPLES;
    let num_frames = frame_count(len);
    let bg_rms = EVENT_RMS * 10f64.powf(-snr_db / 20.0);
    let mut mix = pink_noise(rng, len, bg_rms);

    let n_events = rng.below(MAX_EVENTS + 1);
    let mut pool: Vec<usize> = (0..NUM_TAGS).collect();
    rng.shuffle(&mut pool);
    let mut label = TagLabel::empty();
    let mut truth_intervals = Vec::new();
    for &event in pool.iter().take(n_events) {
        let dur = (rng.uniform_range(MIN_EVENT_SECONDS, MAX_EVENT_SECONDS) * f64::from(SAMPLE_RATE)) as usize;
        let onset = rng.below(len - dur + 1);
        let mut sig = event_prototype(event, rng, dur);
        scale_to_rms(&mut sig, EVENT_RMS);
        let peak = sig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > EVENT_PEAK {
            sig.iter_mut().for_each(|v| *v *= EVENT_PEAK / peak);
        }
        fade(&mut sig);
        for (m, s) in mix[onset..onset + dur].iter_mut().zip(&sig) {
            *m += s;
        }
        if let Some((start_frame, end_frame)) = frames_covering(onset, onset + dur, num_frames) {
            label.set(event);
            truth_intervals.push(TruthInterval { event, start_frame, end_frame });
        }
    }
    truth_intervals.sort_by_key(|iv| (iv.start_frame, iv.event));
    mix.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
    let audio = AudioChunk::new(mix, SAMPLE_RATE).expect("synthetic chunk is valid");
    SynthChunk { audio, label, truth_intervals }
}

/// `n_chunks` scenes; chunk `i` draws from its own stream derived from `rng`,
/// so any chunk can be regenerated independently.
pub fn synth_corpus(rng: &Rng, n_chunks: usize, snr_db: f64) -> Result<Vec<SynthChunk>> {
    if n_chunks == 0 {
        return Err(Error::Usage("synthetic corpus needs at least one chunk".into()));
    }
    Ok((0..n_chunks).map(|i| synth_chunk(&mut rng.derive(&format!("synth-chunk-{i}")), snr_db)).collect())
}

/// Writes `chunk_NNNN.wav` files, `manifest.csv` and `truth.csv` into `dir`.
pub fn write_corpus(dir: impl AsRef<Path>, corpus: &[SynthChunk]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let mut rows = Vec::with_capacity(corpus.len());
    let mut truth = String::from("path,event,start_frame,end_frame\n");
    for (i, c) in corpus.iter().enumerate() {
        let name = format!("chunk_{i:04}.wav");
        write_wav(dir.join(&name), &c.audio)?;
        for iv in &c.truth_intervals {
            truth.push_str(&format!("{name},{},{},{}\n", TAGS[iv.event], iv.start_frame, iv.end_frame));
        }
        rows.push((name, c.label));
    }
    write_manifest(dir.join("manifest.csv"), &rows)?;
    let tp = dir.join("truth.csv");
    fs::write(&tp, truth).map_err(|e| Error::io(format!("writing {}", tp.display()), e))
}
