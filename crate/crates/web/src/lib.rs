//! Browser demo: DLD density curves, the confidence vs norm-threshold
//! histogram comparison, and an EM fit on synthetic directional data.
//!
//! Each export wraps a plain Rust function so the same code runs in native
//! tests; only the wrappers touch `JsValue`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

use wmdld::directional::{dld_pdf, sample_dld_with, uniform_direction, DldParams};
use wmdld::eval::synth::{sparse_bursts, BurstConfig};
use wmdld::eval::{mix, MixingSpec};
use wmdld::mixture::{fit, EmConfig, Mode};
use wmdld::sparsifier::{
    angle_histogram, axial_angle_deg, norm_threshold_for_count, norm_threshold_points, peak_to_valley,
    select_points, SparseDirectionalSet, SparsifierConfig,
};
use wmdld::stft::{stft, StftConfig};

const DEMO_RATE: u32 = 8000;

fn js(e: wmdld::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Density of a 2-D DLD at `points` angles spread over `[-90°, 90°)`
/// around a mean at 0°.
pub fn density_curve_values(k: f64, points: usize) -> wmdld::Result<Vec<f64>> {
    let params = DldParams::new(vec![1.0, 0.0], k)?;
    (0..points)
        .map(|i| {
            let deg = -90.0 + 180.0 * i as f64 / points as f64;
            let t = deg.to_radians();
            dld_pdf(&[t.cos(), t.sin()], &params)
        })
        .collect()
}

#[wasm_bindgen]
pub fn density_curve(k: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    density_curve_values(k, points).map_err(js)
}

#[wasm_bindgen]
pub struct HistogramComparison {
    confidence: Vec<f64>,
    norm: Vec<f64>,
    ratio_confidence: f64,
    ratio_norm: f64,
    points: usize,
}

#[wasm_bindgen]
impl HistogramComparison {
    #[wasm_bindgen(getter)]
    pub fn confidence(&self) -> Vec<f64> {
        self.confidence.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn norm(&self) -> Vec<f64> {
        self.norm.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn ratio_confidence(&self) -> f64 {
        self.ratio_confidence
    }

    #[wasm_bindgen(getter)]
    pub fn ratio_norm(&self) -> f64 {
        self.ratio_norm
    }

    #[wasm_bindgen(getter)]
    pub fn points(&self) -> usize {
        self.points
    }
}

/// Stereo mixture of burst sources at `angles`, then both sparsifiers at a
/// matched point count.
pub fn compare_histograms(angles: &[f64], seconds: f64, q: usize, bins: usize, seed: u64) -> wmdld::Result<HistogramComparison> {
    let sources = sparse_bursts(&BurstConfig::new(angles.len(), seconds, DEMO_RATE, seed))?;
    let spec = MixingSpec::new(angles.iter().map(|a| vec![*a]).collect(), 2)?;
    let x = mix(&sources, &spec)?;
    let s = stft(&x, &StftConfig::from_millis(32.0, DEMO_RATE)?);
    let confident = select_points(&s, &SparsifierConfig::for_sources(q, angles.len())?)?;
    let loud = norm_threshold_points(&s, norm_threshold_for_count(&s, confident.len()));
    let hc = angle_histogram(&confident, bins)?;
    let hn = angle_histogram(&loud, bins)?;
    let sep = (bins / 36).max(1);
    Ok(HistogramComparison {
        ratio_confidence: peak_to_valley(&hc, angles.len(), sep),
        ratio_norm: peak_to_valley(&hn, angles.len(), sep),
        confidence: hc.iter().map(|b| b.count as f64).collect(),
        norm: hn.iter().map(|b| b.count as f64).collect(),
        points: confident.len(),
    })
}

#[wasm_bindgen]
pub fn histogram_comparison(angles: Vec<f64>, seconds: f64, q: usize, bins: usize, seed: u32) -> Result<HistogramComparison, JsValue> {
    compare_histograms(&angles, seconds, q, bins, seed as u64).map_err(js)
}

#[wasm_bindgen]
pub struct FitSummary {
    angles: Vec<f64>,
    concentrations: Vec<f64>,
    priors: Vec<f64>,
    iterations: usize,
}

#[wasm_bindgen]
impl FitSummary {
    /// Fitted mean directions in degrees, folded into `[-90°, 90°)`.
    #[wasm_bindgen(getter)]
    pub fn angles(&self) -> Vec<f64> {
        self.angles.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn concentrations(&self) -> Vec<f64> {
        self.concentrations.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn priors(&self) -> Vec<f64> {
        self.priors.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

/// Samples `per_cluster` points around each angle, adds uniform outliers,
/// and fits one component per angle.
pub fn fit_clusters(
    angles: &[f64],
    k: f64,
    per_cluster: usize,
    outlier_share: f64,
    weighted: bool,
    seed: u64,
) -> wmdld::Result<FitSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::new();
    for a in angles {
        let t = a.to_radians();
        pts.extend(sample_dld_with(&mut rng, &DldParams::new(vec![t.cos(), t.sin()], k)?, per_cluster));
    }
    let share = outlier_share.clamp(0.0, 0.9);
    let extra = (pts.len() as f64 * share / (1.0 - share)).round() as usize;
    pts.extend((0..extra).map(|_| uniform_direction(&mut rng, 2)));
    let data = SparseDirectionalSet::from_vectors(2, pts)?;
    let mode = if weighted { Mode::Weighted } else { Mode::Unweighted };
    let model = fit(&data, angles.len(), &EmConfig::with_seed(seed), mode)?;
    Ok(FitSummary {
        angles: model.components().iter().map(|c| axial_angle_deg(&c.mean)).collect(),
        concentrations: model.components().iter().map(|c| c.concentration).collect(),
        priors: model.components().iter().map(|c| c.prior).collect(),
        iterations: model.training_log().len(),
    })
}

#[wasm_bindgen]
pub fn fit_demo(angles: Vec<f64>, k: f64, per_cluster: usize, outlier_share: f64, weighted: bool, seed: u32) -> Result<FitSummary, JsValue> {
    fit_clusters(&angles, k, per_cluster, outlier_share, weighted, seed as u64).map_err(js)
}
