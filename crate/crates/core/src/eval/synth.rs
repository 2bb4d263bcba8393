//! Sparse test sources: bursts of band-limited noise.
//!
//! The usable band is cut into `bands_per_source · L` slices and slice `j`
//! belongs to source `j mod L`, so sources interleave in frequency. Each
//! burst fills one slice; a `shared_fraction` of bursts draw their slice
//! from the whole pool instead and may collide with another source.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurstConfig {
    pub sources: usize,
    pub seconds: f64,
    pub sample_rate: u32,
    pub bands_per_source: usize,
    pub shared_fraction: f64,
    /// Burst length range in seconds.
    pub burst_seconds: (f64, f64),
    /// Silence between bursts, seconds.
    pub gap_seconds: (f64, f64),
    pub low_hz: f64,
    pub peak: f64,
    pub seed: u64,
}

impl BurstConfig {
    pub fn new(sources: usize, seconds: f64, sample_rate: u32, seed: u64) -> Self {
        Self {
            sources,
            seconds,
            sample_rate,
            bands_per_source: 6,
            shared_fraction: 0.1,
            burst_seconds: (0.08, 0.3),
            gap_seconds: (0.0, 0.15),
            low_hz: 100.0,
            peak: 0.25,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.sources >= 1
            && self.seconds > 0.0
            && self.sample_rate > 0
            && self.bands_per_source >= 1
            && (0.0..=1.0).contains(&self.shared_fraction)
            && self.burst_seconds.0 > 0.0
            && self.burst_seconds.0 <= self.burst_seconds.1
            && self.gap_seconds.0 >= 0.0
            && self.gap_seconds.0 <= self.gap_seconds.1
            && self.low_hz >= 0.0
            && self.low_hz < 0.45 * self.sample_rate as f64
            && self.peak > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid burst configuration {self:?}")))
        }
    }
}

/// Real noise with energy only in `[lo, hi)` Hz, `len` samples long.
fn band_noise(rng: &mut ChaCha8Rng, planner: &mut FftPlanner<f64>, len: usize, rate: f64, lo: f64, hi: f64) -> Vec<f64> {
    let fft = planner.plan_fft_inverse(len);
    let mut spec = vec![Complex64::new(0.0, 0.0); len];
    let lo_bin = (lo * len as f64 / rate).ceil() as usize;
    let hi_bin = ((hi * len as f64 / rate).ceil() as usize).min(len / 2);
    for f in lo_bin.max(1)..hi_bin {
        let v = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        spec[f] = v;
        spec[len - f] = v.conj();
    }
    fft.process(&mut spec);
    spec.iter().map(|c| c.re).collect()
}

/// Raised-cosine fade of `ramp` samples at both ends.
fn fade(v: &mut [f64], ramp: usize) {
    let ramp = ramp.min(v.len() / 2);
    let n = v.len();
    for i in 0..ramp {
        let g = 0.5 - 0.5 * (std::f64::consts::PI * (i as f64 + 0.5) / ramp as f64).cos();
        v[i] *= g;
        v[n - 1 - i] *= g;
    }
}

/// One mono buffer per source.
pub fn sparse_bursts(cfg: &BurstConfig) -> Result<Vec<AudioBuffer>> {
    cfg.validate()?;
    let rate = cfg.sample_rate as f64;
    let len = (cfg.seconds * rate).round() as usize;
    let slices = cfg.bands_per_source * cfg.sources;
    let top = 0.45 * rate;
    let width = (top - cfg.low_hz) / slices as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut planner = FftPlanner::new();
    let ramp = (0.01 * rate) as usize;

    let mut out = Vec::with_capacity(cfg.sources);
    for l in 0..cfg.sources {
        let mut samples = vec![0.0; len];
        let mut at = (rng.gen_range(cfg.gap_seconds.0..=cfg.gap_seconds.1) * rate) as usize;
        while at < len {
            let dur = (rng.gen_range(cfg.burst_seconds.0..=cfg.burst_seconds.1) * rate) as usize;
            let dur = dur.clamp(1, len - at);
            let slice = if rng.gen_bool(cfg.shared_fraction) {
                rng.gen_range(0..slices)
            } else {
                l + cfg.sources * rng.gen_range(0..cfg.bands_per_source)
            };
            let lo = cfg.low_hz + width * slice as f64;
            let mut burst = band_noise(&mut rng, &mut planner, dur, rate, lo, lo + width);
            fade(&mut burst, ramp);
            let level = rng.gen_range(0.5..1.0);
            let peak = burst.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if peak > 0.0 {
                samples[at..at + dur].iter_mut().zip(&burst).for_each(|(s, b)| *s += level * b / peak);
            }
            at += dur + (rng.gen_range(cfg.gap_seconds.0..=cfg.gap_seconds.1) * rate) as usize;
        }
        let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            samples.iter_mut().for_each(|s| *s *= cfg.peak / peak);
        }
        out.push(AudioBuffer::mono(samples, cfg.sample_rate)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let cfg = BurstConfig::new(3, 1.5, 8000, 9);
        let a = sparse_bursts(&cfg).unwrap();
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|b| b.len() == 12000 && b.sample_rate() == 8000));
        assert!(a.iter().all(|b| (b.peak() - 0.25).abs() < 1e-12));
        assert_eq!(a, sparse_bursts(&cfg).unwrap());
        assert_ne!(a, sparse_bursts(&BurstConfig { seed: 10, ..cfg }).unwrap());
    }

    #[test]
    fn exclusive_bands_do_not_overlap() {
        let cfg = BurstConfig {
            shared_fraction: 0.0,
            ..BurstConfig::new(2, 1.0, 8000, 3)
        };
        let s = sparse_bursts(&cfg).unwrap();
        let fft = FftPlanner::new().plan_fft_forward(8000);
        let spectra: Vec<Vec<f64>> = s
            .iter()
            .map(|b| {
                let mut v: Vec<Complex64> = b.channel(0).iter().map(|&x| Complex64::new(x, 0.0)).collect();
                fft.process(&mut v);
                v[..4000].iter().map(|c| c.norm_sqr()).collect()
            })
            .collect();
        // energy of each source inside the other's slices stays small
        let width = (3600.0 - 100.0) / 12.0;
        let mut leak = [0.0; 2];
        let mut total = [0.0; 2];
        for (f, (a, b)) in spectra[0].iter().zip(&spectra[1]).enumerate() {
            let f = f as f64;
            if !(100.0..3600.0).contains(&f) {
                continue;
            }
            let owner = ((f - 100.0) / width) as usize % 2;
            total[0] += a;
            total[1] += b;
            if owner == 1 {
                leak[0] += a;
            } else {
                leak[1] += b;
            }
        }
        assert!(leak[0] < 0.05 * total[0] && leak[1] < 0.05 * total[1], "{leak:?} {total:?}");
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = BurstConfig::new(2, 1.0, 8000, 0);
        cfg.shared_fraction = 1.5;
        assert!(sparse_bursts(&cfg).is_err());
        assert!(sparse_bursts(&BurstConfig::new(0, 1.0, 8000, 0)).is_err());
    }
}
