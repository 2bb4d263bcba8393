//! Short-time Fourier analysis and overlap-add resynthesis.
//!
//! Frames are zero-padded to a power-of-two FFT and only the non-negative
//! frequency bins are kept. The signal is front-padded by
//! `frame_length - hop` samples so that every original sample is covered by
//! a full set of overlapping frames, which makes the inverse exact over the
//! whole original span, edges included.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// Periodic Hann.
    Hann,
    /// Periodic Hamming.
    Hamming,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        let n = len as f64;
        (0..len)
            .map(|i| {
                let phase = 2.0 * PI * i as f64 / n;
                match self {
                    Window::Hann => 0.5 - 0.5 * phase.cos(),
                    Window::Hamming => 0.54 - 0.46 * phase.cos(),
                    Window::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

/// Frame-length presets used for speech and music material.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FramePreset {
    /// 32 ms, for speech at 16 kHz.
    Speech16k,
    /// 128 ms, for music at 16 kHz.
    Music16k,
    /// 46.4 ms, for music at 44.1 kHz.
    Music44k,
}

impl FramePreset {
    pub const ALL: [FramePreset; 3] = [Self::Speech16k, Self::Music16k, Self::Music44k];

    pub fn frame_ms(self) -> f64 {
        match self {
            Self::Speech16k => 32.0,
            Self::Music16k => 128.0,
            Self::Music44k => 46.4,
        }
    }

    pub fn sample_rate(self) -> u32 {
        match self {
            Self::Speech16k | Self::Music16k => 16_000,
            Self::Music44k => 44_100,
        }
    }

    pub fn config(self) -> StftConfig {
        StftConfig::from_millis(self.frame_ms(), self.sample_rate())
            .expect("preset frame lengths are valid")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    frame_length: usize,
    hop: usize,
    window: Window,
    fft_size: usize,
}

impl StftConfig {
    /// Validates the window/hop pair against the constant-overlap-add condition.
    pub fn new(frame_length: usize, hop: usize, window: Window) -> Result<Self> {
        if frame_length < 2 {
            return Err(Error::Config("frame length must be at least 2 samples".into()));
        }
        if hop == 0 || hop > frame_length {
            return Err(Error::Config(format!(
                "hop {hop} must lie in [1, frame_length={frame_length}]"
            )));
        }
        let w = window.coefficients(frame_length);
        let sums: Vec<f64> = (0..hop)
            .map(|n| w.iter().skip(n).step_by(hop).sum())
            .collect();
        let max = sums.iter().cloned().fold(f64::MIN, f64::max);
        let min = sums.iter().cloned().fold(f64::MAX, f64::min);
        if min <= 0.0 || (max - min) > 1e-9 * max {
            return Err(Error::Config(format!(
                "{window:?} window of {frame_length} samples with hop {hop} is not COLA"
            )));
        }
        Ok(Self {
            frame_length,
            hop,
            window,
            fft_size: frame_length.next_power_of_two(),
        })
    }

    /// Hann window with 50% overlap. The frame length is rounded to an even
    /// sample count so the half-frame hop is exact.
    pub fn from_millis(frame_ms: f64, sample_rate: u32) -> Result<Self> {
        if !(frame_ms > 0.0) {
            return Err(Error::Config(format!("frame length {frame_ms} ms must be positive")));
        }
        let raw = (frame_ms * f64::from(sample_rate) / 1000.0).round() as usize;
        let frame_length = (raw / 2 * 2).max(2);
        Self::new(frame_length, frame_length / 2, Window::Hann)
    }

    pub fn frame_length(&self) -> usize {
        self.frame_length
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    fn lead_padding(&self) -> usize {
        self.frame_length - self.hop
    }

    pub fn frames_for(&self, len: usize) -> usize {
        if len == 0 {
            0
        } else {
            (self.lead_padding() + len - 1) / self.hop + 1
        }
    }
}

/// Complex STFT coefficients for every channel, indexed `(channel, frame, bin)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    channels: usize,
    frames: usize,
    bins: usize,
    values: Vec<Complex64>,
    config: StftConfig,
    sample_rate: u32,
    original_len: usize,
}

impl Spectrogram {
    /// An all-zero spectrogram shaped like `self`, with `channels` planes.
    pub fn zeros_like(&self, channels: usize) -> Self {
        Self {
            channels,
            frames: self.frames,
            bins: self.bins,
            values: vec![Complex64::new(0.0, 0.0); channels * self.frames * self.bins],
            config: self.config.clone(),
            sample_rate: self.sample_rate,
            original_len: self.original_len,
        }
    }

    pub fn num_channels(&self) -> usize {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    #[inline]
    fn index(&self, k: usize, t: usize, f: usize) -> usize {
        (k * self.frames + t) * self.bins + f
    }

    #[inline]
    pub fn get(&self, k: usize, t: usize, f: usize) -> Complex64 {
        self.values[self.index(k, t, f)]
    }

    #[inline]
    pub fn set(&mut self, k: usize, t: usize, f: usize, v: Complex64) {
        let i = self.index(k, t, f);
        self.values[i] = v;
    }

    /// The `K` channel coefficients at one time-frequency point.
    pub fn point(&self, t: usize, f: usize) -> Vec<Complex64> {
        (0..self.channels).map(|k| self.get(k, t, f)).collect()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn scaled(&self, gain: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= gain);
        out
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }
}

pub fn stft(buf: &AudioBuffer, cfg: &StftConfig) -> Spectrogram {
    let frames = cfg.frames_for(buf.len());
    let bins = cfg.bins();
    let window = cfg.window.coefficients(cfg.frame_length);
    let plans = Plans::new(cfg.fft_size);
    let lead = cfg.lead_padding() as isize;
    let mut values = Vec::with_capacity(buf.num_channels() * frames * bins);
    let mut scratch = vec![Complex64::new(0.0, 0.0); cfg.fft_size];

    for x in buf.channels() {
        for t in 0..frames {
            let start = (t * cfg.hop) as isize - lead;
            scratch.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for (i, w) in window.iter().enumerate() {
                let n = start + i as isize;
                if n >= 0 && (n as usize) < x.len() {
                    scratch[i] = Complex64::new(w * x[n as usize], 0.0);
                }
            }
            plans.forward.process(&mut scratch);
            values.extend_from_slice(&scratch[..bins]);
        }
    }

    Spectrogram {
        channels: buf.num_channels(),
        frames,
        bins,
        values,
        config: cfg.clone(),
        sample_rate: buf.sample_rate(),
        original_len: buf.len(),
    }
}

/// Overlap-add inverse, normalized by the summed analysis window.
pub fn istft(spec: &Spectrogram) -> AudioBuffer {
    let cfg = &spec.config;
    let n_fft = cfg.fft_size;
    let window = cfg.window.coefficients(cfg.frame_length);
    let plans = Plans::new(n_fft);
    let lead = cfg.lead_padding();
    let padded_len = if spec.frames == 0 {
        0
    } else {
        (spec.frames - 1) * cfg.hop + cfg.frame_length
    };

    let mut norm = vec![0.0; padded_len];
    for t in 0..spec.frames {
        for (i, w) in window.iter().enumerate() {
            norm[t * cfg.hop + i] += w;
        }
    }

    let mut scratch = vec![Complex64::new(0.0, 0.0); n_fft];
    let channels = (0..spec.channels)
        .map(|k| {
            let mut acc = vec![0.0; padded_len];
            for t in 0..spec.frames {
                for (f, slot) in scratch.iter_mut().take(spec.bins).enumerate() {
                    *slot = spec.get(k, t, f);
                }
                for f in spec.bins..n_fft {
                    scratch[f] = scratch[n_fft - f].conj();
                }
                plans.inverse.process(&mut scratch);
                for i in 0..cfg.frame_length {
                    acc[t * cfg.hop + i] += scratch[i].re / n_fft as f64;
                }
            }
            acc.iter()
                .zip(&norm)
                .skip(lead)
                .take(spec.original_len)
                .map(|(v, w)| if *w > 1e-12 { v / w } else { 0.0 })
                .collect()
        })
        .collect();

    AudioBuffer::new(channels, spec.sample_rate).expect("spectrogram metadata is consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = a.iter().map(|x| x * x).sum();
        (num / den.max(1e-300)).sqrt()
    }

    #[test]
    fn presets_match_frame_lengths() {
        assert_eq!(FramePreset::Speech16k.config().frame_length(), 512);
        assert_eq!(FramePreset::Music16k.config().frame_length(), 2048);
        assert_eq!(FramePreset::Music44k.config().frame_length(), 2046);
        assert_eq!(FramePreset::Music44k.config().fft_size(), 2048);
        assert_eq!(FramePreset::Speech16k.config().bins(), 257);
    }

    #[test]
    fn non_cola_hop_rejected() {
        assert!(StftConfig::new(512, 200, Window::Hann).is_err());
        assert!(StftConfig::new(512, 600, Window::Hann).is_err());
        assert!(StftConfig::new(512, 128, Window::Hann).is_ok());
        assert!(StftConfig::new(512, 256, Window::Hamming).is_ok());
        assert!(StftConfig::new(512, 512, Window::Rectangular).is_ok());
    }

    #[test]
    fn white_noise_round_trip() {
        let cfg = StftConfig::new(512, 256, Window::Hann).unwrap();
        let x = noise(16000, 7);
        let buf = AudioBuffer::mono(x.clone(), 16000).unwrap();
        let back = istft(&stft(&buf, &cfg));
        assert_eq!(back.len(), x.len());
        assert!(rel_l2(&x, back.channel(0)) <= 1e-6);
    }

    #[test]
    fn silence_round_trip() {
        let cfg = FramePreset::Speech16k.config();
        let buf = AudioBuffer::silence(2, 3000, 16000).unwrap();
        let spec = stft(&buf, &cfg);
        assert!(spec.values().iter().all(|v| v.norm() == 0.0));
        assert_eq!(istft(&spec), buf);
    }

    #[test]
    fn bin_centred_cosine_concentrates() {
        let cfg = StftConfig::new(256, 128, Window::Hann).unwrap();
        let bin = 20;
        let x: Vec<f64> = (0..4096)
            .map(|n| (2.0 * PI * bin as f64 * n as f64 / 256.0).cos())
            .collect();
        let spec = stft(&AudioBuffer::mono(x, 8000).unwrap(), &cfg);
        // interior frames only; edge frames see the zero padding
        for t in 2..spec.frames() - 2 {
            let peak = (0..spec.bins())
                .max_by(|&a, &b| spec.get(0, t, a).norm().total_cmp(&spec.get(0, t, b).norm()))
                .unwrap();
            assert_eq!(peak, bin);
            let total: f64 = (0..spec.bins()).map(|f| spec.get(0, t, f).norm_sqr()).sum();
            let near: f64 = (bin - 1..=bin + 1).map(|f| spec.get(0, t, f).norm_sqr()).sum();
            assert!(near / total > 0.999);
        }
    }

    #[test]
    fn scalar_gain_commutes() {
        let cfg = FramePreset::Speech16k.config();
        let x = noise(5000, 3);
        let a = 0.37;
        let s1 = stft(&AudioBuffer::mono(x.clone(), 16000).unwrap(), &cfg).scaled(a);
        let s2 = stft(&AudioBuffer::mono(x.iter().map(|v| a * v).collect(), 16000).unwrap(), &cfg);
        let scale = s1.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (u, v) in s1.values().iter().zip(s2.values()) {
            assert!((u - v).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn scaled_spectrogram_scales_signal() {
        let cfg = FramePreset::Speech16k.config();
        let x = noise(3000, 11);
        let spec = stft(&AudioBuffer::mono(x.clone(), 16000).unwrap(), &cfg);
        let back = istft(&spec.scaled(2.0));
        for (a, b) in x.iter().zip(back.channel(0)) {
            assert!((2.0 * a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn parseval_per_frame() {
        let cfg = StftConfig::new(400, 200, Window::Hann).unwrap();
        let x = noise(4000, 5);
        let spec = stft(&AudioBuffer::mono(x.clone(), 8000).unwrap(), &cfg);
        let w = Window::Hann.coefficients(400);
        let n_fft = cfg.fft_size();
        let lead = (400 - 200) as isize;
        for t in 0..spec.frames() {
            let start = (t * 200) as isize - lead;
            let time: f64 = (0..400)
                .map(|i| {
                    let n = start + i as isize;
                    if n >= 0 && (n as usize) < x.len() {
                        (w[i] * x[n as usize]).powi(2)
                    } else {
                        0.0
                    }
                })
                .sum();
            let mut freq = 0.0;
            for f in 0..spec.bins() {
                let e = spec.get(0, t, f).norm_sqr();
                freq += if f == 0 || f == spec.bins() - 1 { e } else { 2.0 * e };
            }
            freq /= n_fft as f64;
            assert!((time - freq).abs() <= 1e-9 * time.max(1e-300));
        }
    }

    #[test]
    fn channels_are_transformed_independently() {
        let cfg = FramePreset::Speech16k.config();
        let a = noise(2000, 1);
        let b = noise(2000, 2);
        let both = stft(&AudioBuffer::new(vec![a.clone(), b], 16000).unwrap(), &cfg);
        let alone = stft(&AudioBuffer::mono(a, 16000).unwrap(), &cfg);
        for t in 0..both.frames() {
            for f in 0..both.bins() {
                assert_eq!(both.get(0, t, f), alone.get(0, t, f));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip_any_cola_config(
            seed in any::<u64>(),
            len in 1usize..3000,
            half in 16usize..300,
            quarter in any::<bool>(),
        ) {
            let frame = 2 * half;
            let hop = if quarter && frame % 4 == 0 { frame / 4 } else { half };
            let cfg = StftConfig::new(frame, hop, Window::Hann).unwrap();
            let x = noise(len, seed);
            let back = istft(&stft(&AudioBuffer::mono(x.clone(), 8000).unwrap(), &cfg));
            prop_assert_eq!(back.len(), len);
            prop_assert!(rel_l2(&x, back.channel(0)) <= 1e-6);
        }
    }
}
