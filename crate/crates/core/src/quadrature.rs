//! Gauss-Legendre rules and the `I_D(k)` integral family.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Above this concentration the integrand is squeezed against the endpoints
/// and the substituted half-interval rule takes over.
pub(crate) const ENDPOINT_SWITCH: f64 = 200.0;

pub(crate) const DEFAULT_NODES: usize = 512;

/// Precomputed `sin θ` samples and weights for evaluating
/// `I_D(k) = (1/π) ∫_0^π exp(-k sin θ) sin^D θ dθ` at many `(D, k)`.
#[derive(Debug)]
pub(crate) struct SineIntegrator {
    /// Plain rule over `[0, π]`, weights already divided by π.
    direct: Vec<(f64, f64)>,
    /// Half interval `[0, π/2]` with `θ = (π/2) u²`, Jacobian and the
    /// symmetry factor folded into the weights.
    clustered: Vec<(f64, f64)>,
}

impl SineIntegrator {
    pub(crate) fn new(nodes: usize) -> Self {
        let rule = GaussLegendre::new(nodes);
        let direct = rule
            .mapped(0.0, PI)
            .map(|(theta, w)| (theta.sin(), w / PI))
            .collect();
        let clustered = rule
            .mapped(0.0, 1.0)
            .map(|(u, w)| {
                let theta = 0.5 * PI * u * u;
                // (2/π) · π u du
                (theta.sin(), 2.0 * u * w)
            })
            .collect();
        Self { direct, clustered }
    }

    pub(crate) fn shared() -> &'static SineIntegrator {
        static SHARED: OnceLock<SineIntegrator> = OnceLock::new();
        SHARED.get_or_init(|| SineIntegrator::new(DEFAULT_NODES))
    }

    fn samples(&self, k: f64) -> &[(f64, f64)] {
        if k > ENDPOINT_SWITCH {
            &self.clustered
        } else {
            &self.direct
        }
    }

    pub(crate) fn integral(&self, d: u32, k: f64) -> f64 {
        self.samples(k)
            .iter()
            .map(|&(s, w)| w * (-k * s).exp() * s.powi(d as i32))
            .sum()
    }

    /// `(I_{p+1}(k), I_p(k))` in one pass.
    pub(crate) fn adjacent_pair(&self, p: u32, k: f64) -> (f64, f64) {
        self.samples(k).iter().fold((0.0, 0.0), |(hi, lo), &(s, w)| {
            let base = w * (-k * s).exp() * s.powi(p as i32);
            (hi + base * s, lo + base)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules_are_exact() {
        let rule = GaussLegendre::new(5);
        // exact through degree 9
        let v = rule.integrate(0.0, 2.0, |x| x.powi(9) - 3.0 * x.powi(4));
        let exact = 2f64.powi(10) / 10.0 - 3.0 * 2f64.powi(5) / 5.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [64, 512, 1024] {
            let rule = GaussLegendre::new(n);
            let total: f64 = rule.mapped(-1.0, 1.0).map(|(_, w)| w).sum();
            assert!((total - 2.0).abs() < 1e-12, "n={n}: {total}");
            assert!(rule.mapped(-1.0, 1.0).all(|(x, _)| x.abs() < 1.0));
        }
    }

    #[test]
    fn both_branches_agree_at_switch() {
        let integ = SineIntegrator::shared();
        for d in 0..4 {
            let k = ENDPOINT_SWITCH;
            let plain: f64 = integ.direct.iter().map(|&(s, w)| w * (-k * s).exp() * s.powi(d)).sum();
            let clustered: f64 = integ
                .clustered
                .iter()
                .map(|&(s, w)| w * (-k * s).exp() * s.powi(d))
                .sum();
            assert!((plain - clustered).abs() <= 1e-11 * plain, "d={d}");
        }
    }
}
