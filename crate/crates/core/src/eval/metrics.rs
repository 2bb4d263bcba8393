use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// dB values are clamped to `±METRIC_CAP_DB`.
pub const METRIC_CAP_DB: f64 = 100.0;

/// Beyond this many sources the matching is greedy instead of exhaustive.
const EXHAUSTIVE_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceMetrics {
    pub sdr: f64,
    pub sir: f64,
    pub sar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// Indexed by reference.
    pub per_source: Vec<SourceMetrics>,
    /// `permutation[e]` is the reference matched to estimate `e`.
    pub permutation: Vec<usize>,
    pub averages: SourceMetrics,
}

impl SeparationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn ratio_db(num: f64, den: f64) -> f64 {
    if den <= 0.0 {
        return if num > 0.0 { METRIC_CAP_DB } else { -METRIC_CAP_DB };
    }
    if num <= 0.0 {
        return -METRIC_CAP_DB;
    }
    (10.0 * (num / den).log10()).clamp(-METRIC_CAP_DB, METRIC_CAP_DB)
}

fn energy(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Decomposer<'a> {
    refs: Vec<&'a [f64]>,
    gram: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> Decomposer<'a> {
    fn new(refs: Vec<&'a [f64]>) -> Result<Self> {
        let l = refs.len();
        let gram = DMatrix::from_fn(l, l, |i, j| inner(refs[i], refs[j]));
        let scale = (0..l).map(|i| gram[(i, i)]).fold(0.0, f64::max);
        let gram = gram
            .cholesky()
            .filter(|c| (0..l).all(|i| c.l_dirty()[(i, i)].powi(2) > 1e-12 * scale))
            .ok_or_else(|| Error::Domain("references are linearly dependent".into()))?;
        Ok(Self { refs, gram })
    }

    fn metrics(&self, est: &[f64], target: usize) -> SourceMetrics {
        let r = self.refs[target];
        let scale = inner(est, r) / energy(r);
        let s_target: Vec<f64> = r.iter().map(|v| scale * v).collect();

        let rhs = DVector::from_iterator(self.refs.len(), self.refs.iter().map(|r| inner(est, r)));
        let coef = self.gram.solve(&rhs);
        let mut p_all = vec![0.0; est.len()];
        for (c, r) in coef.iter().zip(&self.refs) {
            p_all.iter_mut().zip(r.iter()).for_each(|(p, v)| *p += c * v);
        }
        let interf: Vec<f64> = p_all.iter().zip(&s_target).map(|(p, s)| p - s).collect();
        let artif: Vec<f64> = est.iter().zip(&p_all).map(|(e, p)| e - p).collect();

        let target_e = energy(&s_target);
        let distortion: f64 = interf.iter().zip(&artif).map(|(i, a)| (i + a) * (i + a)).sum();
        SourceMetrics {
            sdr: ratio_db(target_e, distortion),
            sir: ratio_db(target_e, energy(&interf)),
            sar: ratio_db(energy(&p_all), energy(&artif)),
        }
    }
}

fn best_permutation(sir: &[Vec<f64>]) -> Vec<usize> {
    let l = sir.len();
    if l > EXHAUSTIVE_LIMIT {
        // greedy: repeatedly take the best remaining pair
        let mut perm = vec![usize::MAX; l];
        let mut used = vec![false; l];
        for _ in 0..l {
            let mut best = (0, 0, f64::NEG_INFINITY);
            for (e, row) in sir.iter().enumerate().filter(|(e, _)| perm[*e] == usize::MAX) {
                for (r, &v) in row.iter().enumerate().filter(|(r, _)| !used[*r]) {
                    if v > best.2 {
                        best = (e, r, v);
                    }
                }
            }
            perm[best.0] = best.1;
            used[best.1] = true;
        }
        return perm;
    }
    let mut current: Vec<usize> = (0..l).collect();
    let mut best = current.clone();
    let mut best_total = f64::NEG_INFINITY;
    permute(&mut current, 0, sir, &mut best, &mut best_total);
    best
}

fn permute(p: &mut Vec<usize>, at: usize, sir: &[Vec<f64>], best: &mut Vec<usize>, best_total: &mut f64) {
    if at == p.len() {
        let total: f64 = p.iter().enumerate().map(|(e, &r)| sir[e][r]).sum();
        if total > *best_total {
            *best_total = total;
            best.clone_from(p);
        }
        return;
    }
    for i in at..p.len() {
        p.swap(at, i);
        permute(p, at + 1, sir, best, best_total);
        p.swap(at, i);
    }
}

fn mono<'a>(bufs: &'a [AudioBuffer], what: &str) -> Result<Vec<&'a [f64]>> {
    bufs.iter()
        .enumerate()
        .map(|(i, b)| {
            if b.num_channels() != 1 {
                Err(Error::Config(format!("{what} {} is not mono", i + 1)))
            } else {
                Ok(b.channel(0))
            }
        })
        .collect()
}

/// SDR, SIR and SAR of every estimate against its best-matching reference.
pub fn bss_metrics(estimates: &[AudioBuffer], references: &[AudioBuffer]) -> Result<SeparationReport> {
    if estimates.len() != references.len() {
        return Err(Error::LengthMismatch(format!(
            "{} estimates for {} references",
            estimates.len(),
            references.len()
        )));
    }
    if references.is_empty() {
        return Err(Error::Config("no references".into()));
    }
    let refs = mono(references, "reference")?;
    let ests = mono(estimates, "estimate")?;
    let len = refs[0].len();
    if refs.iter().chain(&ests).any(|s| s.len() != len) {
        return Err(Error::LengthMismatch("estimates and references differ in length".into()));
    }
    if let Some(i) = refs.iter().position(|r| energy(r) == 0.0) {
        return Err(Error::Domain(format!("reference {} is silent", i + 1)));
    }

    let dec = Decomposer::new(refs)?;
    let table: Vec<Vec<SourceMetrics>> = ests
        .iter()
        .map(|e| (0..dec.refs.len()).map(|r| dec.metrics(e, r)).collect())
        .collect();
    let sir: Vec<Vec<f64>> = table.iter().map(|row| row.iter().map(|m| m.sir).collect()).collect();
    let permutation = best_permutation(&sir);

    let mut per_source = vec![SourceMetrics { sdr: 0.0, sir: 0.0, sar: 0.0 }; permutation.len()];
    for (e, &r) in permutation.iter().enumerate() {
        per_source[r] = table[e][r];
    }
    let n = per_source.len() as f64;
    let averages = SourceMetrics {
        sdr: per_source.iter().map(|m| m.sdr).sum::<f64>() / n,
        sir: per_source.iter().map(|m| m.sir).sum::<f64>() / n,
        sar: per_source.iter().map(|m| m.sar).sum::<f64>() / n,
    };
    Ok(SeparationReport {
        per_source,
        permutation,
        averages,
    })
}

/// One row per reference plus a closing `mean` row.
pub fn write_report_csv<W: Write>(mut out: W, report: &SeparationReport) -> std::io::Result<()> {
    writeln!(out, "source,estimate,sdr_db,sir_db,sar_db")?;
    for (r, m) in report.per_source.iter().enumerate() {
        let e = report.permutation.iter().position(|&p| p == r).unwrap_or(r);
        writeln!(out, "{},{},{:.4},{:.4},{:.4}", r + 1, e + 1, m.sdr, m.sir, m.sar)?;
    }
    let a = report.averages;
    writeln!(out, "mean,,{:.4},{:.4},{:.4}", a.sdr, a.sir, a.sar)
}
