//! Weighted mixtures of directional Laplacian densities, fitted by EM.
//!
//! In weighted mode every point's contribution to component `i` is scaled
//! by `w = (1 - D_l(x, m_i)) / 2`, so points near a component's mean pull
//! harder on its parameters than points far away. Unweighted mode (`w ≡ 1`)
//! is the plain mixture baseline.
//!
//! One EM iteration is: responsibilities from the current parameters, then
//! priors, a single backtracked gradient step on each mean followed by
//! renormalization, and a concentration update by inverting the ratio
//! `I_{D-1}(k) / I_{D-2}(k)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::directional::{
    directional_distance, dot, importance_weight, ln_norm_coeff, normalized, solve_concentration,
    ConcentrationEstimate, SUPPORT,
};
use crate::error::{Error, Result};
use crate::sparsifier::SparseDirectionalSet;

pub const MODEL_SCHEMA: &str = "wmdld-model/1";

/// `(mᵀx)²` is capped here inside the mean gradient.
const MAX_COS2: f64 = 1.0 - 1e-12;
const MIN_MASS: f64 = 1e-10;
const MAX_HALVINGS: usize = 10;
const KMEANS_ROUNDS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Weighted,
    Unweighted,
}

impl Mode {
    #[inline]
    fn weight(self, x: &[f64], mean: &[f64]) -> f64 {
        match self {
            Mode::Weighted => importance_weight(x, mean),
            Mode::Unweighted => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Radians.
    pub mean_tolerance: f64,
    pub k_init: f64,
    pub step_scale: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            mean_tolerance: 1e-4,
            k_init: 15.0,
            step_scale: 0.1,
            seed: 0,
        }
    }
}

impl EmConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be ≥ 1".into()));
        }
        if !(self.mean_tolerance > 0.0) {
            return Err(Error::Config("mean_tolerance must be > 0".into()));
        }
        if !(self.k_init >= 0.0) || !(self.step_scale > 0.0) {
            return Err(Error::Config("k_init must be ≥ 0 and step_scale > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    #[serde(rename = "a")]
    pub prior: f64,
    #[serde(rename = "m")]
    pub mean: Vec<f64>,
    #[serde(rename = "k")]
    pub concentration: f64,
    #[serde(default)]
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    /// Largest axial angle (radians) any mean moved this iteration.
    pub max_mean_shift: f64,
    pub mean_log_density: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reseeded: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WmdldModel {
    dimension: usize,
    mode: Mode,
    components: Vec<Component>,
    config: EmConfig,
    training_log: Vec<IterationLog>,
    converged: bool,
}

impl WmdldModel {
    /// A model from explicit parameters; means are normalized.
    pub fn from_components(mode: Mode, components: Vec<Component>, config: EmConfig) -> Result<Self> {
        let dimension = components
            .first()
            .map(|c| c.mean.len())
            .ok_or_else(|| Error::Config("model needs at least one component".into()))?;
        if dimension < 2 {
            return Err(Error::Domain(format!("dimension {dimension} < 2")));
        }
        let mut out = Vec::with_capacity(components.len());
        for mut c in components {
            if c.mean.len() != dimension {
                return Err(Error::Dimension {
                    expected: dimension,
                    actual: c.mean.len(),
                });
            }
            if !(c.prior >= 0.0) || !(c.concentration >= 0.0) {
                return Err(Error::Domain("priors and concentrations must be ≥ 0".into()));
            }
            if (dot(&c.mean, &c.mean) - 1.0).abs() > 1e-12 {
                c.mean = normalized(&c.mean).ok_or_else(|| Error::Domain("zero mean direction".into()))?;
            }
            out.push(c);
        }
        Ok(Self {
            dimension,
            mode,
            components: out,
            config,
            training_log: Vec::new(),
            converged: false,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn means(&self) -> Vec<Vec<f64>> {
        self.components.iter().map(|c| c.mean.clone()).collect()
    }

    pub fn config(&self) -> &EmConfig {
        &self.config
    }

    pub fn training_log(&self) -> &[IterationLog] {
        &self.training_log
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// `ln(a_i c_D(k_i))` per component.
    fn ln_scales(&self) -> Result<Vec<f64>> {
        self.components
            .iter()
            .map(|c| Ok(c.prior.ln() + ln_norm_coeff(self.dimension, c.concentration)?))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.schema != MODEL_SCHEMA {
            return Err(Error::Config(format!("unknown model schema {:?}", file.schema)));
        }
        let mut model = Self::from_components(file.mode, file.components, file.config)?;
        if model.dimension != file.dimension {
            return Err(Error::Dimension {
                expected: file.dimension,
                actual: model.dimension,
            });
        }
        model.training_log = file.training_log;
        model.converged = file.converged;
        Ok(model)
    }
}

/// On-disk layout of a fitted model.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema: String,
    dimension: usize,
    mode: Mode,
    support: String,
    converged: bool,
    components: Vec<Component>,
    config: EmConfig,
    training_log: Vec<IterationLog>,
}

impl From<&WmdldModel> for ModelFile {
    fn from(m: &WmdldModel) -> Self {
        Self {
            schema: MODEL_SCHEMA.into(),
            dimension: m.dimension,
            mode: m.mode,
            support: SUPPORT.into(),
            converged: m.converged,
            components: m.components.clone(),
            config: m.config.clone(),
            training_log: m.training_log.clone(),
        }
    }
}

/// Posterior component probabilities, one row per point.
#[derive(Clone, Debug, PartialEq)]
pub struct Responsibilities {
    components: usize,
    values: Vec<f64>,
    mean_log_density: f64,
}

impl Responsibilities {
    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.components..(n + 1) * self.components]
    }

    pub fn get(&self, n: usize, i: usize) -> f64 {
        self.values[n * self.components + i]
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.components.max(1)
    }

    /// Average over points of `ln Σ_i a_i p_i(x_n)`.
    pub fn mean_log_density(&self) -> f64 {
        self.mean_log_density
    }
}

fn check_dimension(data: &SparseDirectionalSet, d: usize) -> Result<()> {
    if data.dimension() != d {
        return Err(Error::Dimension {
            expected: d,
            actual: data.dimension(),
        });
    }
    Ok(())
}

pub fn e_step(data: &SparseDirectionalSet, model: &WmdldModel) -> Result<Responsibilities> {
    check_dimension(data, model.dimension)?;
    let r = model.len();
    let scales = model.ln_scales()?;
    let mut values = Vec::with_capacity(data.len() * r);
    let mut log_sum = 0.0;
    let mut terms = vec![0.0; r];
    for x in data.points() {
        for (i, c) in model.components.iter().enumerate() {
            terms[i] = scales[i] - c.concentration * directional_distance(x, &c.mean);
        }
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            values.extend(std::iter::repeat_n(1.0 / r as f64, r));
            log_sum += f64::NEG_INFINITY;
            continue;
        }
        let scaled: Vec<f64> = terms.iter().map(|t| (t - top).exp()).collect();
        // summed in sorted order so relabelling components cannot change a bit
        let mut sorted = scaled.clone();
        sorted.sort_by(f64::total_cmp);
        let denom = sorted.iter().sum::<f64>().max(1e-300);
        values.extend(scaled.iter().map(|s| s / denom));
        log_sum += top + denom.ln();
    }
    Ok(Responsibilities {
        components: r,
        values,
        mean_log_density: log_sum / data.len().max(1) as f64,
    })
}

/// Euclidean gradient of `Σ_n c_n · ln p(x_n | m, k)` with respect to `m`,
/// where `c_n` are the frozen weight × responsibility products.
pub fn mean_gradient(points: &[Vec<f64>], mean: &[f64], k: f64, mass: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; mean.len()];
    for (x, c) in points.iter().zip(mass) {
        if *c == 0.0 {
            continue;
        }
        let t = dot(mean, x);
        let s = (1.0 - (t * t).min(MAX_COS2)).sqrt();
        let scale = k * t / s * c;
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += scale * xj;
        }
    }
    g
}

fn spread(points: &[Vec<f64>], mean: &[f64], mass: &[f64]) -> f64 {
    points
        .iter()
        .zip(mass)
        .map(|(x, c)| c * directional_distance(x, mean))
        .sum()
}

fn axial_angle(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).abs().min(1.0).acos()
}

/// Data point explained worst by the model, skipping `taken`.
fn worst_explained(points: &[Vec<f64>], model: &WmdldModel, scales: &[f64], taken: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (n, x) in points.iter().enumerate() {
        if taken.contains(&n) {
            continue;
        }
        let top = model
            .components
            .iter()
            .zip(scales)
            .map(|(c, s)| s - c.concentration * directional_distance(x, &c.mean))
            .fold(f64::NEG_INFINITY, f64::max);
        if best.is_none_or(|(_, v)| top < v) {
            best = Some((n, top));
        }
    }
    best.map(|(n, _)| n)
}

/// Updated model plus the indices of any components that were reseeded.
pub fn m_step(
    data: &SparseDirectionalSet,
    model: &WmdldModel,
    resp: &Responsibilities,
    cfg: &EmConfig,
) -> Result<(WmdldModel, Vec<usize>)> {
    check_dimension(data, model.dimension)?;
    if resp.rows() != data.len() || resp.components != model.len() {
        return Err(Error::Config("responsibilities do not match data and model".into()));
    }
    let points = data.points();
    let n = points.len() as f64;
    let mut next = model.clone();
    let mut collapsed = Vec::new();

    for (i, comp) in model.components.iter().enumerate() {
        let mass: Vec<f64> = points
            .iter()
            .enumerate()
            .map(|(j, x)| model.mode.weight(x, &comp.mean) * resp.get(j, i))
            .collect();
        let total: f64 = mass.iter().sum();
        let out = &mut next.components[i];
        out.prior = total / n;
        if total < MIN_MASS {
            collapsed.push(i);
            continue;
        }

        let grad = mean_gradient(points, &comp.mean, comp.concentration, &mass);
        let before = spread(points, &comp.mean, &mass);
        let mut eta = cfg.step_scale / total.max(1.0);
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = comp.mean.iter().zip(&grad).map(|(m, g)| m + eta * g).collect();
            if let Some(trial) = normalized(&trial) {
                if spread(points, &trial, &mass) <= before {
                    accepted = Some(trial);
                    break;
                }
            }
            eta *= 0.5;
        }
        out.mean = accepted.unwrap_or_else(|| comp.mean.clone());

        let rhs = (spread(points, &out.mean, &mass) / total).clamp(f64::MIN_POSITIVE, MAX_COS2);
        let ConcentrationEstimate { k, saturated } = solve_concentration(rhs, model.dimension)?;
        out.concentration = k;
        out.saturated = saturated;
        if saturated && out.prior < 1e-6 {
            collapsed.push(i);
        }
    }

    if !collapsed.is_empty() {
        let scales = model.ln_scales()?;
        let mut taken = Vec::new();
        for &i in &collapsed {
            let Some(n) = worst_explained(points, model, &scales, &taken) else { break };
            taken.push(n);
            let others: Vec<f64> = next
                .components
                .iter()
                .enumerate()
                .filter(|(j, _)| !collapsed.contains(j))
                .map(|(_, c)| c.prior)
                .collect();
            let c = &mut next.components[i];
            c.mean = points[n].clone();
            c.concentration = cfg.k_init;
            c.saturated = false;
            c.prior = match (model.mode, others.is_empty()) {
                (Mode::Weighted, false) => others.iter().sum::<f64>() / others.len() as f64,
                _ => 1.0 / model.len() as f64,
            };
        }
        if model.mode == Mode::Unweighted {
            let sum: f64 = next.components.iter().map(|c| c.prior).sum();
            next.components.iter_mut().for_each(|c| c.prior /= sum);
        }
    }
    Ok((next, collapsed))
}

fn dominant_axis(points: &[&Vec<f64>], d: usize) -> Option<Vec<f64>> {
    if points.is_empty() {
        return None;
    }
    let mut scatter = DMatrix::<f64>::zeros(d, d);
    for x in points {
        for a in 0..d {
            for b in 0..d {
                scatter[(a, b)] += x[a] * x[b];
            }
        }
    }
    let eig = SymmetricEigen::new(scatter);
    let top = eig.eigenvalues.imax();
    normalized(&eig.eigenvectors.column(top).iter().copied().collect::<Vec<_>>())
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, c) in centers.iter().enumerate() {
                let d = directional_distance(x, c);
                if d < best_d {
                    best = i;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

/// Axial k-means under `D_l`: farthest-point seeding from a random start,
/// then alternate nearest-center assignment and dominant-eigenvector
/// center updates until the assignment stops changing.
pub fn directional_kmeans(data: &SparseDirectionalSet, r: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let points = data.points();
    if r == 0 {
        return Err(Error::Config("need at least one cluster".into()));
    }
    if r > points.len() {
        return Err(Error::InsufficientData {
            needed: r,
            available: points.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|x| directional_distance(x, &centers[0])).collect();
    while centers.len() < r {
        let far = (0..points.len())
            .max_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(b.cmp(&a)))
            .expect("nonempty");
        centers.push(points[far].clone());
        for (d, x) in nearest.iter_mut().zip(points) {
            *d = d.min(directional_distance(x, &points[far]));
        }
    }

    let mut labels = assign(points, &centers);
    for _ in 0..KMEANS_ROUNDS {
        for (i, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == i).map(|(x, _)| x).collect();
            if let Some(mut axis) = dominant_axis(&members, data.dimension()) {
                if dot(&axis, center) < 0.0 {
                    axis.iter_mut().for_each(|v| *v = -*v);
                }
                *center = axis;
            }
        }
        let next = assign(points, &centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(centers)
}

/// EM from explicit initial means (priors `1/R`, concentrations `k_init`).
pub fn fit_from_means(
    data: &SparseDirectionalSet,
    means: Vec<Vec<f64>>,
    cfg: &EmConfig,
    mode: Mode,
) -> Result<WmdldModel> {
    cfg.validate()?;
    let r = means.len();
    let components = means
        .into_iter()
        .map(|mean| Component {
            prior: 1.0 / r as f64,
            mean,
            concentration: cfg.k_init,
            saturated: false,
        })
        .collect();
    let mut model = WmdldModel::from_components(mode, components, cfg.clone())?;
    check_dimension(data, model.dimension)?;

    for iteration in 1..=cfg.max_iterations {
        let resp = e_step(data, &model)?;
        let (mut next, reseeded) = m_step(data, &model, &resp, cfg)?;
        let shift = model
            .components
            .iter()
            .zip(&next.components)
            .map(|(a, b)| axial_angle(&a.mean, &b.mean))
            .fold(0.0, f64::max);
        next.training_log.push(IterationLog {
            iteration,
            max_mean_shift: shift,
            mean_log_density: resp.mean_log_density(),
            reseeded: reseeded.clone(),
        });
        model = next;
        if shift < cfg.mean_tolerance && reseeded.is_empty() {
            model.converged = true;
            break;
        }
    }
    Ok(model)
}

/// Fits `r` components, initialized by [`directional_kmeans`]. Requires at
/// least `10·r` points.
pub fn fit(data: &SparseDirectionalSet, r: usize, cfg: &EmConfig, mode: Mode) -> Result<WmdldModel> {
    if r == 0 {
        return Err(Error::Config("need at least one component".into()));
    }
    if data.len() < 10 * r {
        return Err(Error::InsufficientData {
            needed: 10 * r,
            available: data.len(),
        });
    }
    let means = directional_kmeans(data, r, cfg.seed)?;
    fit_from_means(data, means, cfg, mode)
}
