//! Winner-takes-all separation with a fitted mixture.
//!
//! Every time-frequency point goes to the component whose mean is closest
//! to both its real and its imaginary direction, and the source estimate at
//! that point is the projection `m_iᵀ X(t,f)`.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::audio::AudioBuffer;
use crate::directional::{directional_distance, normalized};
use crate::error::{Error, Result};
use crate::mixture::{fit, EmConfig, Mode, WmdldModel};
use crate::sparsifier::{select_points, split_point, SparsifierConfig, MIN_NORM};
use crate::stft::{istft, stft, Spectrogram, StftConfig};

const TIE_EPS: f64 = 1e-12;

/// Source label (0-based) for every `(t, f)` of a spectrogram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentMap {
    frames: usize,
    bins: usize,
    labels: Vec<usize>,
    sources: usize,
    tie_count: usize,
}

impl AssignmentMap {
    pub fn get(&self, t: usize, f: usize) -> usize {
        self.labels[t * self.bins + f]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn tie_count(&self) -> usize {
        self.tie_count
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.sources];
        self.labels.iter().for_each(|&l| counts[l] += 1);
        counts
    }
}

/// Sum of `D_l` over whichever of the real and imaginary parts carry energy.
fn point_cost(parts: &[Vec<f64>], mean: &[f64]) -> f64 {
    parts.iter().map(|p| directional_distance(p, mean)).sum()
}

pub fn assign_points(spec: &Spectrogram, model: &WmdldModel) -> Result<AssignmentMap> {
    if model.dimension() != spec.num_channels() {
        return Err(Error::Dimension {
            expected: model.dimension(),
            actual: spec.num_channels(),
        });
    }
    let means = model.means();
    let (frames, bins) = (spec.frames(), spec.bins());
    let mut labels = Vec::with_capacity(frames * bins);
    let mut ties = 0;
    for t in 0..frames {
        for f in 0..bins {
            let (re, im) = split_point(spec, t, f);
            let parts: Vec<Vec<f64>> = [re, im]
                .iter()
                .filter(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt() >= MIN_NORM)
                .filter_map(|v| normalized(v))
                .collect();
            if parts.is_empty() {
                labels.push(0);
                continue;
            }
            let costs: Vec<f64> = means.iter().map(|m| point_cost(&parts, m)).collect();
            let best = costs.iter().cloned().fold(f64::INFINITY, f64::min);
            let label = costs.iter().position(|&c| c <= best + TIE_EPS).expect("nonempty");
            if costs.iter().filter(|&&c| c <= best + TIE_EPS).count() > 1 {
                ties += 1;
            }
            labels.push(label);
        }
    }
    Ok(AssignmentMap {
        frames,
        bins,
        labels,
        sources: means.len(),
        tie_count: ties,
    })
}

/// Mono estimates, one per model component, aligned with the mixture.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparatedSources {
    pub buffers: Vec<AudioBuffer>,
    pub model: WmdldModel,
}

/// The masked projection `U_i` for every component.
pub fn source_spectrograms(spec: &Spectrogram, assignment: &AssignmentMap, model: &WmdldModel) -> Result<Vec<Spectrogram>> {
    if assignment.frames != spec.frames() || assignment.bins != spec.bins() {
        return Err(Error::LengthMismatch(format!(
            "assignment is {}×{}, spectrogram is {}×{}",
            assignment.frames,
            assignment.bins,
            spec.frames(),
            spec.bins()
        )));
    }
    if model.dimension() != spec.num_channels() || assignment.sources != model.len() {
        return Err(Error::Dimension {
            expected: model.dimension(),
            actual: spec.num_channels(),
        });
    }
    let mut out: Vec<Spectrogram> = (0..model.len()).map(|_| spec.zeros_like(1)).collect();
    for t in 0..spec.frames() {
        for f in 0..spec.bins() {
            let i = assignment.get(t, f);
            let m = &model.components()[i].mean;
            let u: Complex64 = m.iter().enumerate().map(|(k, mk)| spec.get(k, t, f) * *mk).sum();
            out[i].set(0, t, f, u);
        }
    }
    Ok(out)
}

pub fn reconstruct(spec: &Spectrogram, assignment: &AssignmentMap, model: &WmdldModel) -> Result<SeparatedSources> {
    let buffers = source_spectrograms(spec, assignment, model)?.iter().map(istft).collect();
    Ok(SeparatedSources {
        buffers,
        model: model.clone(),
    })
}

/// Bookkeeping from one [`separate`] run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationSummary {
    pub selected_points: usize,
    pub confidence_threshold_used: Option<f64>,
    /// Time-frequency points per source, in output order.
    pub points_per_source: Vec<usize>,
    pub tie_count: usize,
    pub em_iterations: usize,
    pub em_converged: bool,
}

/// stft → confidence selection → EM with `R = L` → assignment of every
/// point → reconstruction.
pub fn separate(
    mixture: &AudioBuffer,
    sources: usize,
    stft_cfg: &StftConfig,
    sparse_cfg: &SparsifierConfig,
    em_cfg: &EmConfig,
    mode: Mode,
) -> Result<(SeparatedSources, SeparationSummary)> {
    if mixture.num_channels() < 2 {
        return Err(Error::Dimension {
            expected: 2,
            actual: mixture.num_channels(),
        });
    }
    let spec = stft(mixture, stft_cfg);
    let selected = select_points(&spec, sparse_cfg)?;
    log::info!("selected {} directional points", selected.len());
    let model = fit(&selected, sources, em_cfg, mode)?;
    log::info!(
        "EM stopped after {} iterations (converged: {})",
        model.training_log().len(),
        model.converged()
    );
    let assignment = assign_points(&spec, &model)?;
    let summary = SeparationSummary {
        selected_points: selected.len(),
        confidence_threshold_used: selected.threshold_used(),
        points_per_source: assignment.counts(),
        tie_count: assignment.tie_count(),
        em_iterations: model.training_log().len(),
        em_converged: model.converged(),
    };
    Ok((reconstruct(&spec, &assignment, &model)?, summary))
}
