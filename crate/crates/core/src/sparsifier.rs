//! Selection of single-source time-frequency points.
//!
//! Around each point `(t, f)` a `Q × Q` neighborhood is gathered, its real
//! and imaginary parts are stacked as `2·Q²` real `K`-vectors and the
//! eigenvalues of their scatter matrix give the confidence
//! `T = λ₁ / mean(λ₂..λ_K)`. Points whose neighborhood is dominated by one
//! direction score high and are kept as directional training data.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::directional::norm;
use crate::error::{Error, Result};
use crate::stft::Spectrogram;

/// Vectors shorter than this carry no usable direction.
pub const MIN_NORM: f64 = 1e-9;
/// Lowest threshold the adaptive fallback will try.
pub const FALLBACK_FLOOR: f64 = 1.5;
pub const FALLBACK_FACTOR: f64 = 0.8;

#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodStats {
    pub center: (usize, usize),
    /// Non-increasing, clamped at zero.
    pub eigenvalues: Vec<f64>,
    pub principal_direction: Vec<f64>,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsifierConfig {
    pub q: usize,
    pub confidence_threshold: f64,
    /// Fallback lowers the threshold until this many points survive;
    /// zero disables it.
    pub min_points: usize,
}

impl SparsifierConfig {
    pub const DEFAULT_THRESHOLD: f64 = 300.0;

    pub fn new(q: usize, confidence_threshold: f64, min_points: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::Config("neighborhood size Q must be ≥ 1".into()));
        }
        if !(confidence_threshold > 1.0) {
            return Err(Error::Config(format!(
                "confidence threshold {confidence_threshold} must exceed 1"
            )));
        }
        Ok(Self {
            q,
            confidence_threshold,
            min_points,
        })
    }

    /// Default threshold with a fallback floor of `100·L` points.
    pub fn for_sources(q: usize, sources: usize) -> Result<Self> {
        Self::new(q, Self::DEFAULT_THRESHOLD, 100 * sources)
    }

    fn check_channels(&self, k: usize) -> Result<()> {
        if 2 * self.q * self.q < k {
            return Err(Error::Config(format!(
                "Q={} gives {} scatter columns, fewer than K={k}",
                self.q,
                2 * self.q * self.q
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Re,
    Im,
}

/// Where a directional sample came from in the spectrogram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Origin {
    pub t: usize,
    pub f: usize,
    pub part: Part,
}

/// Unit vectors on `S^{D-1}` with their provenance, ordered by `(t, f, part)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDirectionalSet {
    points: Vec<Vec<f64>>,
    origins: Vec<Origin>,
    dimension: usize,
    threshold_used: Option<f64>,
}

impl SparseDirectionalSet {
    /// Wraps arbitrary nonzero vectors, normalizing them. Origins are
    /// synthetic: `t` is the input index.
    pub fn from_vectors(dimension: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let mut points = Vec::with_capacity(vectors.len());
        let mut origins = Vec::with_capacity(vectors.len());
        for (n, v) in vectors.into_iter().enumerate() {
            if v.len() != dimension {
                return Err(Error::Dimension {
                    expected: dimension,
                    actual: v.len(),
                });
            }
            let r = norm(&v);
            if !(r > 0.0) {
                return Err(Error::Domain(format!("vector {n} has zero norm")));
            }
            points.push(v.iter().map(|x| x / r).collect());
            origins.push(Origin { t: n, f: 0, part: Part::Re });
        }
        Ok(Self {
            points,
            origins,
            dimension,
            threshold_used: None,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn origins(&self) -> &[Origin] {
        &self.origins
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Effective confidence threshold after any fallback.
    pub fn threshold_used(&self) -> Option<f64> {
        self.threshold_used
    }

    fn push(&mut self, origin: Origin, v: &[f64]) {
        let r = norm(v);
        if r >= MIN_NORM {
            self.points.push(v.iter().map(|x| x / r).collect());
            self.origins.push(origin);
        }
    }

    fn empty(dimension: usize) -> Self {
        Self {
            points: Vec::new(),
            origins: Vec::new(),
            dimension,
            threshold_used: None,
        }
    }
}

/// `(Re X(t,f), Im X(t,f))` as real `K`-vectors.
pub fn split_point(spec: &Spectrogram, t: usize, f: usize) -> (Vec<f64>, Vec<f64>) {
    let k = spec.num_channels();
    let mut re = Vec::with_capacity(k);
    let mut im = Vec::with_capacity(k);
    for c in 0..k {
        let v = spec.get(c, t, f);
        re.push(v.re);
        im.push(v.im);
    }
    (re, im)
}

/// Inclusive window `[c − ⌈Q/2⌉ + 1, c + ⌊Q/2⌋]` clamped to `[0, len)`.
fn window(center: usize, q: usize, len: usize) -> (usize, usize) {
    let lo = center as isize + 1 - q.div_ceil(2) as isize;
    let hi = center + q / 2;
    (lo.max(0) as usize, hi.min(len - 1))
}

fn stats_from_scatter(center: (usize, usize), scatter: DMatrix<f64>) -> NeighborhoodStats {
    let k = scatter.nrows();
    let eig = SymmetricEigen::new(scatter);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let mut principal: Vec<f64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
    let r = norm(&principal);
    principal.iter_mut().for_each(|v| *v /= r);
    NeighborhoodStats {
        center,
        confidence: confidence_from(&eigenvalues),
        eigenvalues,
        principal_direction: principal,
    }
}

fn confidence_from(eigenvalues: &[f64]) -> f64 {
    let lead = eigenvalues[0];
    if lead <= 0.0 {
        return 0.0;
    }
    let rest = &eigenvalues[1..];
    let mean_rest = if rest.is_empty() {
        0.0
    } else {
        rest.iter().sum::<f64>() / rest.len() as f64
    };
    lead / mean_rest.max(1e-12 * lead)
}

fn point_scatter(spec: &Spectrogram, t: usize, f: usize) -> Vec<f64> {
    let k = spec.num_channels();
    let (re, im) = split_point(spec, t, f);
    let mut s = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            s[i * k + j] = re[i] * re[j] + im[i] * im[j];
        }
    }
    s
}

pub fn neighborhood_stats(spec: &Spectrogram, t: usize, f: usize, q: usize) -> NeighborhoodStats {
    let k = spec.num_channels();
    let (t0, t1) = window(t, q, spec.frames());
    let (f0, f1) = window(f, q, spec.bins());
    let mut scatter = DMatrix::zeros(k, k);
    for tt in t0..=t1 {
        for ff in f0..=f1 {
            let s = point_scatter(spec, tt, ff);
            for i in 0..k {
                for j in 0..k {
                    scatter[(i, j)] += s[i * k + j];
                }
            }
        }
    }
    stats_from_scatter((t, f), scatter)
}

/// Confidence of every time-frequency point, row-major in `(t, f)`.
#[derive(Clone, Debug)]
pub struct ConfidenceMap {
    frames: usize,
    bins: usize,
    values: Vec<f64>,
}

impl ConfidenceMap {
    pub fn compute(spec: &Spectrogram, q: usize) -> Self {
        let (frames, bins, k) = (spec.frames(), spec.bins(), spec.num_channels());
        // per-point outer products, summed over each window below
        let local: Vec<Vec<f64>> = (0..frames)
            .flat_map(|t| (0..bins).map(move |f| (t, f)))
            .map(|(t, f)| point_scatter(spec, t, f))
            .collect();
        let mut values = Vec::with_capacity(frames * bins);
        let mut acc = vec![0.0; k * k];
        for t in 0..frames {
            let (t0, t1) = window(t, q, frames);
            for f in 0..bins {
                let (f0, f1) = window(f, q, bins);
                acc.iter_mut().for_each(|v| *v = 0.0);
                for tt in t0..=t1 {
                    for ff in f0..=f1 {
                        for (a, s) in acc.iter_mut().zip(&local[tt * bins + ff]) {
                            *a += s;
                        }
                    }
                }
                let scatter = DMatrix::from_row_slice(k, k, &acc);
                values.push(stats_from_scatter((t, f), scatter).confidence);
            }
        }
        Self { frames, bins, values }
    }

    pub fn get(&self, t: usize, f: usize) -> f64 {
        self.values[t * self.bins + f]
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn count_above(&self, threshold: f64) -> usize {
        self.values.iter().filter(|&&v| v > threshold).count()
    }
}

fn collect_above(spec: &Spectrogram, map: &ConfidenceMap, threshold: f64) -> SparseDirectionalSet {
    let mut set = SparseDirectionalSet::empty(spec.num_channels());
    for t in 0..spec.frames() {
        for f in 0..spec.bins() {
            if map.get(t, f) > threshold {
                let (re, im) = split_point(spec, t, f);
                set.push(Origin { t, f, part: Part::Re }, &re);
                set.push(Origin { t, f, part: Part::Im }, &im);
            }
        }
    }
    set.threshold_used = Some(threshold);
    set
}

/// Keeps the real and imaginary directions of every point whose
/// neighborhood confidence exceeds the threshold, lowering the threshold by
/// [`FALLBACK_FACTOR`] while fewer than `min_points` survive.
pub fn select_points(spec: &Spectrogram, cfg: &SparsifierConfig) -> Result<SparseDirectionalSet> {
    let map = ConfidenceMap::compute(spec, cfg.q);
    select_from_map(spec, &map, cfg)
}

pub fn select_from_map(
    spec: &Spectrogram,
    map: &ConfidenceMap,
    cfg: &SparsifierConfig,
) -> Result<SparseDirectionalSet> {
    let k = spec.num_channels();
    if k < 2 {
        return Err(Error::Dimension { expected: 2, actual: k });
    }
    cfg.check_channels(k)?;
    let mut threshold = cfg.confidence_threshold;
    let mut set = collect_above(spec, map, threshold);
    while set.len() < cfg.min_points && threshold.is_finite() && threshold > FALLBACK_FLOOR {
        threshold = (threshold * FALLBACK_FACTOR).max(FALLBACK_FLOOR);
        set = collect_above(spec, map, threshold);
    }
    if set.is_empty() {
        return Err(Error::EmptySelection { threshold });
    }
    if threshold < cfg.confidence_threshold {
        log::info!(
            "confidence threshold lowered from {} to {threshold} ({} points)",
            cfg.confidence_threshold,
            set.len()
        );
    }
    Ok(set)
}

/// Keeps every real/imaginary vector whose norm reaches `threshold`.
pub fn norm_threshold_points(spec: &Spectrogram, threshold: f64) -> SparseDirectionalSet {
    let mut set = SparseDirectionalSet::empty(spec.num_channels());
    for t in 0..spec.frames() {
        for f in 0..spec.bins() {
            let (re, im) = split_point(spec, t, f);
            for (part, v) in [(Part::Re, re), (Part::Im, im)] {
                let r = norm(&v);
                if r > 0.0 && r >= threshold {
                    set.points.push(v.iter().map(|x| x / r).collect());
                    set.origins.push(Origin { t, f, part });
                }
            }
        }
    }
    set
}

/// The norm threshold that keeps the `count` largest vectors (ties may
/// keep a few more).
pub fn norm_threshold_for_count(spec: &Spectrogram, count: usize) -> f64 {
    let mut norms: Vec<f64> = (0..spec.frames())
        .flat_map(|t| (0..spec.bins()).map(move |f| (t, f)))
        .flat_map(|(t, f)| {
            let (re, im) = split_point(spec, t, f);
            [norm(&re), norm(&im)]
        })
        .filter(|r| *r > 0.0)
        .collect();
    if count == 0 || norms.is_empty() {
        return f64::INFINITY;
    }
    norms.sort_by(|a, b| b.total_cmp(a));
    norms[count.min(norms.len()) - 1]
}

/// Angle of a 2-D direction folded into `[-90°, 90°)`.
pub fn axial_angle_deg(x: &[f64]) -> f64 {
    let mut a = x[1].atan2(x[0]).to_degrees();
    while a >= 90.0 {
        a -= 180.0;
    }
    while a < -90.0 {
        a += 180.0;
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Lower edge of the bin.
    pub angle_deg: f64,
    pub count: usize,
}

/// Axial angle histogram of 2-D directions over `[-90°, 90°)`.
pub fn angle_histogram(set: &SparseDirectionalSet, bins: usize) -> Result<Vec<HistogramBin>> {
    if set.dimension() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            actual: set.dimension(),
        });
    }
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let width = 180.0 / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in set.points() {
        let idx = ((axial_angle_deg(x) + 90.0) / width).floor() as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            angle_deg: -90.0 + i as f64 * width,
            count,
        })
        .collect())
}

/// Bin indices of the `peaks` tallest maxima, at least `separation` bins
/// apart on the circular axis.
pub fn find_peaks(hist: &[HistogramBin], peaks: usize, separation: usize) -> Vec<usize> {
    let n = hist.len();
    let mut suppressed = vec![false; n];
    let mut found = Vec::new();
    for _ in 0..peaks {
        let best = (0..n)
            .filter(|&i| !suppressed[i])
            .max_by(|&a, &b| hist[a].count.cmp(&hist[b].count).then(b.cmp(&a)));
        let Some(best) = best else { break };
        found.push(best);
        for d in 0..=separation {
            suppressed[(best + d) % n] = true;
            suppressed[(best + n - d % n) % n] = true;
        }
    }
    found.sort_unstable();
    found
}

/// Mean height of the `peaks` tallest maxima over the mean of the minima
/// between consecutive peaks (circular), with the valley floored at one
/// count.
pub fn peak_to_valley(hist: &[HistogramBin], peaks: usize, separation: usize) -> f64 {
    let found = find_peaks(hist, peaks, separation);
    if found.is_empty() {
        return 0.0;
    }
    let n = hist.len();
    let peak_mean = found.iter().map(|&i| hist[i].count as f64).sum::<f64>() / found.len() as f64;
    let valleys: Vec<f64> = if found.len() == 1 {
        vec![hist.iter().map(|b| b.count).min().unwrap_or(0) as f64]
    } else {
        (0..found.len())
            .map(|j| {
                let a = found[j];
                let b = found[(j + 1) % found.len()];
                let span = (b + n - a) % n;
                (0..=span)
                    .map(|d| hist[(a + d) % n].count)
                    .min()
                    .unwrap_or(0) as f64
            })
            .collect()
    };
    let valley_mean = valleys.iter().sum::<f64>() / valleys.len() as f64;
    peak_mean / valley_mean.max(1.0)
}

/// `angle_deg,count` rows with a header line.
pub fn write_histogram_csv<W: Write>(mut out: W, hist: &[HistogramBin]) -> std::io::Result<()> {
    writeln!(out, "angle_deg,count")?;
    for b in hist {
        writeln!(out, "{},{}", b.angle_deg, b.count)?;
    }
    Ok(())
}

/// `x1,...,xK` rows with a header line.
pub fn write_scatter_csv<W: Write>(mut out: W, set: &SparseDirectionalSet) -> std::io::Result<()> {
    let header: Vec<String> = (1..=set.dimension()).map(|i| format!("x{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for p in set.points() {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
