//! Synthetic mixtures and separation scoring.

mod metrics;
pub mod synth;

pub use metrics::{bss_metrics, write_report_csv, SeparationReport, SourceMetrics, METRIC_CAP_DB};

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::directional::dot;
use crate::error::{Error, Result};

/// Columns closer than this (axially, degrees) draw a warning.
pub const CLOSE_COLUMNS_DEG: f64 = 3.0;

/// Unit vector from `K-1` hyperspherical angles in degrees:
/// `[cos θ₁, sin θ₁]`, then each further angle `φ` maps `v` to
/// `[v·cos φ, sin φ]`.
pub fn hyperspherical(angles_deg: &[f64]) -> Vec<f64> {
    let Some((first, rest)) = angles_deg.split_first() else {
        return vec![1.0];
    };
    let t = first.to_radians();
    let mut v = vec![t.cos(), t.sin()];
    for phi in rest {
        let (s, c) = phi.to_radians().sin_cos();
        v.iter_mut().for_each(|x| *x *= c);
        v.push(s);
    }
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingSpec {
    sensors: usize,
    /// Per source, `K-1` angles in degrees.
    angles_deg: Vec<Vec<f64>>,
    /// Per source, the unit mixing column.
    columns: Vec<Vec<f64>>,
}

impl MixingSpec {
    pub fn new(angles_deg: Vec<Vec<f64>>, sensors: usize) -> Result<Self> {
        if sensors < 2 {
            return Err(Error::Config(format!("need at least 2 sensors, got {sensors}")));
        }
        if angles_deg.is_empty() {
            return Err(Error::Config("need at least one source".into()));
        }
        for (l, a) in angles_deg.iter().enumerate() {
            if a.len() != sensors - 1 {
                return Err(Error::Config(format!(
                    "source {} has {} angles, expected {}",
                    l + 1,
                    a.len(),
                    sensors - 1
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("source {} has a non-finite angle", l + 1)));
            }
        }
        let columns: Vec<Vec<f64>> = angles_deg.iter().map(|a| hyperspherical(a)).collect();
        for i in 0..columns.len() {
            for j in i + 1..columns.len() {
                let deg = dot(&columns[i], &columns[j]).abs().min(1.0).acos().to_degrees();
                if deg < 1e-6 {
                    return Err(Error::Config(format!("sources {} and {} share a mixing direction", i + 1, j + 1)));
                }
                if deg < CLOSE_COLUMNS_DEG {
                    log::warn!("sources {} and {} are only {deg:.2}° apart", i + 1, j + 1);
                }
            }
        }
        Ok(Self {
            sensors,
            angles_deg,
            columns,
        })
    }

    /// From `K-1` lists that each hold one angle per source, the layout
    /// experiment tables use (`θ₁ = [...]`, `θ₂ = [...]`).
    pub fn from_axis_lists(lists: &[Vec<f64>]) -> Result<Self> {
        let sources = lists.first().map_or(0, Vec::len);
        if lists.iter().any(|l| l.len() != sources) {
            return Err(Error::Config("angle lists differ in length".into()));
        }
        let per_source = (0..sources).map(|l| lists.iter().map(|list| list[l]).collect()).collect();
        Self::new(per_source, lists.len() + 1)
    }

    pub fn sensors(&self) -> usize {
        self.sensors
    }

    pub fn sources(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn angles_deg(&self) -> &[Vec<f64>] {
        &self.angles_deg
    }

    /// Row-major `K×L` entries.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.sensors).map(|k| self.columns.iter().map(|c| c[k]).collect()).collect()
    }
}

/// `x(n) = A s(n)` for mono sources.
pub fn mix(sources: &[AudioBuffer], spec: &MixingSpec) -> Result<AudioBuffer> {
    if sources.len() != spec.sources() {
        return Err(Error::LengthMismatch(format!(
            "{} sources for a {}-column mixing matrix",
            sources.len(),
            spec.sources()
        )));
    }
    let first = &sources[0];
    for (l, s) in sources.iter().enumerate() {
        if s.num_channels() != 1 {
            return Err(Error::Config(format!("source {} is not mono", l + 1)));
        }
        if s.len() != first.len() || s.sample_rate() != first.sample_rate() {
            return Err(Error::LengthMismatch(format!(
                "source {} has {} samples at {} Hz, source 1 has {} at {} Hz",
                l + 1,
                s.len(),
                s.sample_rate(),
                first.len(),
                first.sample_rate()
            )));
        }
    }
    let channels = (0..spec.sensors)
        .map(|k| {
            (0..first.len())
                .map(|n| sources.iter().zip(&spec.columns).map(|(s, c)| c[k] * s.channel(0)[n]).sum())
                .collect()
        })
        .collect();
    AudioBuffer::new(channels, first.sample_rate())
}

/// Scales `buf` so its peak is `target`; returns the buffer and the gain.
pub fn normalize_peak(buf: &AudioBuffer, target: f64) -> (AudioBuffer, f64) {
    let peak = buf.peak();
    if peak == 0.0 {
        return (buf.clone(), 1.0);
    }
    let gain = target / peak;
    (buf.scaled(gain), gain)
}
