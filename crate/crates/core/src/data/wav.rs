//! PCM16 mono 16 kHz WAV ingestion and output.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::features::{AudioChunk, SAMPLE_RATE};

fn wav_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Wav { path: path.to_path_buf(), message: message.into() }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioChunk> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| wav_err(path, e.to_string()))?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int {
        return Err(wav_err(path, "sample format is float, expected PCM"));
    }
    if spec.bits_per_sample != 16 {
        return Err(wav_err(path, format!("bits_per_sample={}, expected 16", spec.bits_per_sample)));
    }
    if spec.channels != 1 {
        return Err(wav_err(path, format!("channels={}, expected 1", spec.channels)));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(wav_err(path, format!("sample_rate={}, expected {SAMPLE_RATE}", spec.sample_rate)));
    }
    let declared = reader.len() as usize;
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|e| wav_err(path, format!("truncated or corrupt data: {e}")))?;
    if samples.len() != declared {
        return Err(wav_err(path, format!("truncated: {} of {declared} samples", samples.len())));
    }
    AudioChunk::new(samples, spec.sample_rate).map_err(|e| wav_err(path, e.to_string()))
}

/// Quantizes to PCM16 (round to nearest, clamp to the i16 range).
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioChunk) -> Result<()> {
    let path = path.as_ref();
    let spec = WavSpec { channels: 1, sample_rate: SAMPLE_RATE, bits_per_sample: 16, sample_format: SampleFormat::Int };
    let mut w = WavWriter::create(path, spec).map_err(|e| wav_err(path, e.to_string()))?;
    for &s in audio.samples() {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(v).map_err(|e| wav_err(path, e.to_string()))?;
    }
    w.finalize().map_err(|e| wav_err(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(path: &Path, spec: WavSpec, samples: &[i16]) {
        let mut w = WavWriter::create(path, spec).unwrap();
        for &s in samples {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
    }

    fn mono() -> WavSpec {
        WavSpec { channels: 1, sample_rate: 16_000, bits_per_sample: 16, sample_format: SampleFormat::Int }
    }

    #[test]
    fn zeros_and_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.wav");
        write_raw(&p, mono(), &vec![0; 64_000]);
        let a = read_wav(&p).unwrap();
        assert_eq!(a.len(), 64_000);
        assert!(a.samples().iter().all(|s| *s == 0.0));

        write_raw(&p, mono(), &[-32768, 32767, 0]);
        let a = read_wav(&p).unwrap();
        assert_eq!(a.samples(), &[-1.0, 32767.0 / 32768.0, 0.0]);
    }

    #[test]
    fn rejects_stereo_and_wrong_rate() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        write_raw(&p, WavSpec { channels: 2, ..mono() }, &[0; 200]);
        let err = read_wav(&p).unwrap_err().to_string();
        assert!(err.contains("channels=2, expected 1"), "{err}");
        write_raw(&p, WavSpec { sample_rate: 44_100, ..mono() }, &[0; 200]);
        let err = read_wav(&p).unwrap_err().to_string();
        assert!(err.contains("sample_rate=44100"), "{err}");
    }

    #[test]
    fn rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.wav");
        write_raw(&p, mono(), &vec![100; 4000]);
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 1001]).unwrap();
        assert!(read_wav(&p).is_err());
    }

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.wav");
        let samples: Vec<f64> = (0..2000).map(|i| f64::from(i as i16 - 1000) / 32768.0).collect();
        let a = AudioChunk::new(samples, 16_000).unwrap();
        write_wav(&p, &a).unwrap();
        assert_eq!(read_wav(&p).unwrap(), a);
    }
}
