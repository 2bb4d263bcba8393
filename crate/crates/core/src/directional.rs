//! Directional Laplacian densities on the unit hypersphere.
//!
//! For a unit mean `m` and concentration `k ≥ 0` in `D` dimensions the
//! density is
//!
//! ```text
//! p(x) = c_D(k) · exp(-k · sqrt(1 - (mᵀx)²))
//! c_D(k) = Γ((D-1)/2) / (π^((D+1)/2) · I_{D-2}(k))
//! I_D(k) = (1/π) ∫_0^π exp(-k sin θ) sin^D θ dθ
//! ```
//!
//! The density is axial (`p(x) = p(-x)`) and with this normalizer it carries
//! unit mass over a hemisphere; see [`SUPPORT`].

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{SineIntegrator, DEFAULT_NODES};

/// Upper end of the concentration search interval.
pub const K_MAX: f64 = 1000.0;

/// Region over which [`dld_pdf`] integrates to one. Recorded in model files.
pub const SUPPORT: &str = "hemisphere";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DldParams {
    mean: Vec<f64>,
    concentration: f64,
}

impl DldParams {
    /// `mean` is normalized; it must be nonzero with at least two entries.
    pub fn new(mean: Vec<f64>, concentration: f64) -> Result<Self> {
        if mean.len() < 2 {
            return Err(Error::Domain(format!("dimension {} < 2", mean.len())));
        }
        if !(concentration >= 0.0) || !concentration.is_finite() {
            return Err(Error::Domain(format!("concentration {concentration} must be finite and ≥ 0")));
        }
        let mean = normalized(&mean)
            .ok_or_else(|| Error::Domain("mean direction must be nonzero".into()))?;
        Ok(Self { mean, concentration })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub target_rel_error: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: DEFAULT_NODES,
            target_rel_error: 1e-10,
        }
    }
}

/// `I_D(k)`, refining the node count until two successive rules agree to
/// `quad.target_rel_error` (at most 8192 nodes).
pub fn bessel_like_integral(d: u32, k: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(k >= 0.0) {
        return Err(Error::Domain(format!("concentration {k} must be ≥ 0")));
    }
    if quad.node_count < 64 {
        return Err(Error::Config(format!("node_count {} < 64", quad.node_count)));
    }
    let eval = |n: usize| {
        if n == DEFAULT_NODES {
            SineIntegrator::shared().integral(d, k)
        } else {
            SineIntegrator::new(n).integral(d, k)
        }
    };
    let mut n = quad.node_count;
    let mut current = eval(n);
    while n < 8192 {
        let refined = eval(2 * n);
        let converged = (refined - current).abs() <= quad.target_rel_error * refined.abs();
        current = refined;
        n *= 2;
        if converged {
            break;
        }
    }
    Ok(current)
}

/// `Γ(n/2)` for positive integers `n`.
fn gamma_half(n: u32) -> f64 {
    assert!(n > 0);
    let (mut g, mut x) = if n.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    while 2.0 * x < f64::from(n) {
        g *= x;
        x += 1.0;
    }
    g
}

fn check_dimension(d: usize) -> Result<u32> {
    if d < 2 {
        return Err(Error::Domain(format!("dimension {d} < 2")));
    }
    Ok(d as u32)
}

/// `ln c_D(k)` using the shared 512-node rule.
pub fn ln_norm_coeff(d: usize, k: f64) -> Result<f64> {
    let d = check_dimension(d)?;
    if !(k >= 0.0) {
        return Err(Error::Domain(format!("concentration {k} must be ≥ 0")));
    }
    let i = SineIntegrator::shared().integral(d - 2, k);
    Ok(gamma_half(d - 1).ln()
        - 0.5 * f64::from(d + 1) * std::f64::consts::PI.ln()
        - i.ln())
}

pub fn dld_norm_coeff(d: usize, k: f64) -> Result<f64> {
    ln_norm_coeff(d, k).map(f64::exp)
}

/// `I_{D-1}(k) / I_{D-2}(k)`, the expected directional distance under a
/// DLD with concentration `k`.
pub fn concentration_ratio(d: usize, k: f64) -> Result<f64> {
    let d = check_dimension(d)?;
    if !(k >= 0.0) {
        return Err(Error::Domain(format!("concentration {k} must be ≥ 0")));
    }
    let (hi, lo) = SineIntegrator::shared().adjacent_pair(d - 2, k);
    Ok(hi / lo)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| a.iter().map(|v| v / n).collect())
}

/// `sqrt(1 - (mᵀx)²)`, in `[0, 1]`.
#[inline]
pub fn directional_distance(x: &[f64], m: &[f64]) -> f64 {
    let c = dot(x, m);
    (1.0 - (c * c).min(1.0)).sqrt()
}

/// `(1 - D_l(x, m)) / 2`, in `[0, 1/2]`.
#[inline]
pub fn importance_weight(x: &[f64], m: &[f64]) -> f64 {
    0.5 * (1.0 - directional_distance(x, m))
}

/// Density with the normalizer evaluated once.
#[derive(Clone, Debug)]
pub struct Dld {
    params: DldParams,
    ln_norm: f64,
}

impl Dld {
    pub fn new(params: DldParams) -> Result<Self> {
        let ln_norm = ln_norm_coeff(params.dimension(), params.concentration())?;
        Ok(Self { params, ln_norm })
    }

    pub fn params(&self) -> &DldParams {
        &self.params
    }

    pub fn norm_coeff(&self) -> f64 {
        self.ln_norm.exp()
    }

    pub fn ln_pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.params.dimension() {
            return Err(Error::Dimension {
                expected: self.params.dimension(),
                actual: x.len(),
            });
        }
        let n = norm(x);
        if (n - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!("point has norm {n}, expected 1")));
        }
        Ok(self.ln_norm - self.params.concentration() * directional_distance(x, self.params.mean()))
    }

    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        self.ln_pdf(x).map(f64::exp)
    }
}

pub fn dld_pdf(x: &[f64], params: &DldParams) -> Result<f64> {
    Dld::new(params.clone())?.pdf(x)
}

/// Uniform direction on the sphere in `d` dimensions.
pub fn uniform_direction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(v) = normalized(&g) {
            return v;
        }
    }
}

/// Rejection sampler: uniform proposals accepted with probability
/// `exp(-k · D_l(x, m))`.
pub fn sample_dld_with<R: Rng + ?Sized>(rng: &mut R, params: &DldParams, n: usize) -> Vec<Vec<f64>> {
    let k = params.concentration();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = uniform_direction(rng, params.dimension());
        let accept = (-k * directional_distance(&x, params.mean())).exp();
        if rng.gen::<f64>() < accept {
            out.push(x);
        }
    }
    out
}

pub fn sample_dld(params: &DldParams, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_dld_with(&mut rng, params, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEstimate {
    pub k: f64,
    /// The target lay below `ratio(K_MAX)`; `k` was clamped to [`K_MAX`].
    pub saturated: bool,
}

/// Inverts `ratio(k) = rhs` by bisection on `[0, K_MAX]`.
pub fn solve_concentration(rhs: f64, d: usize) -> Result<ConcentrationEstimate> {
    if !(rhs > 0.0 && rhs < 1.0) {
        return Err(Error::Domain(format!("ratio target {rhs} outside (0, 1)")));
    }
    let ratio = |k: f64| concentration_ratio(d, k);
    // within rounding of the uniform ratio counts as uniform
    if rhs >= ratio(0.0)? * (1.0 - 1e-12) {
        return Ok(ConcentrationEstimate { k: 0.0, saturated: false });
    }
    if rhs <= ratio(K_MAX)? {
        return Ok(ConcentrationEstimate { k: K_MAX, saturated: true });
    }
    let (mut lo, mut hi) = (0.0, K_MAX);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid)? > rhs {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Ok(ConcentrationEstimate {
        k: 0.5 * (lo + hi),
        saturated: false,
    })
}
