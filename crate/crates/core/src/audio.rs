//! Multichannel sample buffers and WAV I/O.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deinterleaved multichannel audio, one `Vec` per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioBuffer {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Config("audio buffer needs at least one channel".into()));
        }
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        let len = channels[0].len();
        if let Some(bad) = channels.iter().find(|c| c.len() != len) {
            return Err(Error::LengthMismatch(format!(
                "channel lengths differ ({} vs {})",
                len,
                bad.len()
            )));
        }
        Ok(Self { channels, sample_rate })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![samples], sample_rate)
    }

    pub fn silence(num_channels: usize, len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![vec![0.0; len]; num_channels], sample_rate)
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel(&self, k: usize) -> &[f64] {
        &self.channels[k]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    pub fn peak(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|v| v * gain).collect())
                .collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// On-disk sample encoding for [`write_wav`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavEncoding {
    Pcm16,
    #[default]
    Float32,
}

/// Reads a 16-bit PCM or 32-bit float WAV file.
///
/// 16-bit samples map to `v / 32768`, so full scale is `[-1, 32767/32768]`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let file = std::fs::File::open(path)?;
    let reader = WavReader::new(std::io::BufReader::new(file)).map_err(map_hound)?;
    let spec = reader.spec();
    let k = spec.channels as usize;
    if k == 0 {
        return Err(Error::Format("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (fmt, bits) => {
            return Err(Error::Unsupported(format!("{bits}-bit {fmt:?} samples")));
        }
    };
    if !interleaved.len().is_multiple_of(k) {
        return Err(Error::Format("sample count is not a multiple of the channel count".into()));
    }
    let frames = interleaved.len() / k;
    let mut channels = vec![Vec::with_capacity(frames); k];
    for frame in interleaved.chunks_exact(k) {
        for (c, v) in channels.iter_mut().zip(frame) {
            c.push(*v);
        }
    }
    AudioBuffer::new(channels, spec.sample_rate)
}

/// Writes an interleaved little-endian WAV file.
///
/// PCM16 output is rounded and saturated; float output is written as-is.
pub fn write_wav(buf: &AudioBuffer, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
    let spec = WavSpec {
        channels: buf.num_channels() as u16,
        sample_rate: buf.sample_rate(),
        bits_per_sample: match encoding {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            WavEncoding::Pcm16 => SampleFormat::Int,
            WavEncoding::Float32 => SampleFormat::Float,
        },
    };
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut writer = WavWriter::new(file, spec).map_err(map_write)?;
    for n in 0..buf.len() {
        for c in buf.channels() {
            match encoding {
                WavEncoding::Pcm16 => {
                    let v = (c[n] * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                    writer.write_sample(v).map_err(map_write)?;
                }
                WavEncoding::Float32 => writer.write_sample(c[n] as f32).map_err(map_write)?,
            }
        }
    }
    writer.finalize().map_err(map_write)
}

fn map_write(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => map_hound(other),
    }
}

/// Once the file is open, short reads mean a damaged file rather than an
/// I/O fault.
fn map_hound(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Format(io.to_string()),
        hound::Error::FormatError(msg) => Error::Format(msg.into()),
        hound::Error::Unsupported => Error::Unsupported("WAV feature not supported".into()),
        other => Error::Format(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(len: usize, amp: f64, freq: f64, rate: u32) -> Vec<f64> {
        (0..len)
            .map(|n| amp * (2.0 * std::f64::consts::PI * freq * n as f64 / f64::from(rate)).sin())
            .collect()
    }

    #[test]
    fn stereo_pcm16_keeps_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("st.wav");
        let buf = AudioBuffer::new(vec![vec![0.0; 16000], vec![0.25; 16000]], 16000).unwrap();
        write_wav(&buf, &path, WavEncoding::Pcm16).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.num_channels(), 2);
        assert_eq!(back.len(), 16000);
        assert_eq!(back.sample_rate(), 16000);
    }

    #[test]
    fn max_positive_pcm16_maps_below_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("max.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(0x7FFFi16).unwrap();
        w.finalize().unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.channel(0)[0], 32767.0 / 32768.0);
    }

    #[test]
    fn pcm16_round_trip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sine.wav");
        let buf = AudioBuffer::mono(sine(4000, 0.5, 440.0, 16000), 16000).unwrap();
        write_wav(&buf, &path, WavEncoding::Pcm16).unwrap();
        let back = read_wav(&path).unwrap();
        let err = buf
            .channel(0)
            .iter()
            .zip(back.channel(0))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 2f64.powi(-15), "max err {err}");
    }

    #[test]
    fn float_round_trip_four_channels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("quad.wav");
        let chans = (0..4).map(|k| sine(1000, 0.2 * (k + 1) as f64, 100.0, 8000)).collect();
        let buf = AudioBuffer::new(chans, 8000).unwrap();
        write_wav(&buf, &path, WavEncoding::Float32).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.num_channels(), 4);
        for k in 0..4 {
            for (a, b) in buf.channel(k).iter().zip(back.channel(k)) {
                assert!((a - b).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn empty_buffer_writes_valid_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.wav");
        let buf = AudioBuffer::silence(2, 0, 16000).unwrap();
        write_wav(&buf, &path, WavEncoding::Pcm16).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.num_channels(), 2);
        assert!(back.is_empty());
    }

    #[test]
    fn truncated_file_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.wav");
        let buf = AudioBuffer::mono(sine(1000, 0.5, 440.0, 16000), 16000).unwrap();
        write_wav(&buf, &path, WavEncoding::Pcm16).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..30]).unwrap();
        let err = read_wav(&path).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err:?}");
    }

    #[test]
    fn eight_bit_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u8.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 8,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(3i8).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&path), Err(Error::Unsupported(_))));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let buf = AudioBuffer::mono(vec![0.0; 4], 8000).unwrap();
        let err = write_wav(&buf, "/nonexistent-dir/x.wav", WavEncoding::Pcm16).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn ragged_channels_rejected() {
        assert!(AudioBuffer::new(vec![vec![0.0; 3], vec![0.0; 4]], 8000).is_err());
        assert!(AudioBuffer::new(vec![vec![0.0; 3]], 0).is_err());
    }
}
