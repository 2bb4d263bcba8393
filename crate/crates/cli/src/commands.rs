use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use wmdld::audio::{read_wav, write_wav, AudioBuffer, WavEncoding};
use wmdld::eval::synth::{sparse_bursts, BurstConfig};
use wmdld::eval::{bss_metrics, mix as mix_sources, normalize_peak, write_report_csv, MixingSpec};
use wmdld::mixture::{EmConfig, Mode};
use wmdld::separator::separate as run_separation;
use wmdld::sparsifier::{
    angle_histogram, norm_threshold_for_count, norm_threshold_points, peak_to_valley, select_points,
    write_histogram_csv, SparsifierConfig,
};
use wmdld::stft::{stft, StftConfig};

use crate::args::{
    AnalysisArgs, EvaluateArgs, HistArgs, HistMethod, Material, MixArgs, ModeArg, SeparateArgs, SynthArgs,
};

/// Usage problems exit with 2, everything else with 1.
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path) -> anyhow::Result<AudioBuffer> {
    read_wav(path).with_context(|| format!("reading {}", path.display()))
}

fn save(buf: &AudioBuffer, path: &Path) -> anyhow::Result<()> {
    write_wav(buf, path, WavEncoding::Float32).with_context(|| format!("writing {}", path.display()))
}

fn source_name(i: usize) -> String {
    format!("source_{:02}.wav", i + 1)
}

/// `"a,b,c"` or `"a,b,c;d,e,f"` into angle lists.
fn parse_angles(text: &str) -> Result<Vec<Vec<f64>>, Failure> {
    text.split(';')
        .map(|list| {
            list.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| usage(format!("bad angle {:?} in --angles", v.trim())))
                })
                .collect()
        })
        .collect()
}

#[derive(Serialize)]
struct MixSidecar<'a> {
    sources: &'a [PathBuf],
    mixing: &'a MixingSpec,
    gain: f64,
    seed: u64,
}

pub fn mix(args: MixArgs) -> Outcome {
    let lists = parse_angles(&args.angles)?;
    if let Some(bad) = lists.iter().find(|l| l.len() != args.sources.len()) {
        return Err(usage(format!(
            "--angles gives {} angles per list but there are {} sources",
            bad.len(),
            args.sources.len()
        )));
    }
    let spec = MixingSpec::from_axis_lists(&lists).map_err(|e| usage(e.to_string()))?;
    let sources = args.sources.iter().map(|p| load(p)).collect::<anyhow::Result<Vec<_>>>()?;
    if let Some(i) = sources.iter().position(|s| s.num_channels() != 1) {
        return Err(usage(format!("{} is not mono", args.sources[i].display())));
    }
    let mixed = mix_sources(&sources, &spec).map_err(|e| usage(e.to_string()))?;
    let (mixed, gain) = match args.normalize {
        Some(peak) if peak > 0.0 => normalize_peak(&mixed, peak),
        Some(peak) => return Err(usage(format!("--normalize must be positive, got {peak}"))),
        None => (mixed, 1.0),
    };
    save(&mixed, &args.out)?;
    write_json(
        &args.out.with_extension("json"),
        &MixSidecar {
            sources: &args.sources,
            mixing: &spec,
            gain,
            seed: args.seed,
        },
    )?;
    log::info!(
        "wrote {}-channel mixture of {} sources to {}",
        spec.sensors(),
        spec.sources(),
        args.out.display()
    );
    Ok(())
}

/// Frame length and Q after applying the material defaults.
fn resolve_analysis(a: &AnalysisArgs, sample_rate: u32) -> (f64, usize) {
    let frame_ms = a.frame_ms.unwrap_or(match a.material {
        Material::Speech => 32.0,
        Material::Music if sample_rate >= 44100 => 46.4,
        Material::Music => 128.0,
    });
    let q = a.q.unwrap_or(match a.material {
        Material::Speech => 2,
        Material::Music => 3,
    });
    (frame_ms, q)
}

/// Everything needed to repeat a `separate` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub num_sources: usize,
    pub material: Material,
    pub sample_rate: u32,
    pub frame_ms: f64,
    pub frame_length: usize,
    pub hop: usize,
    pub sparsifier: SparsifierConfig,
    pub mode: ModeArg,
    pub em: EmConfig,
}

impl RunConfig {
    fn from_args(a: &SeparateArgs, sample_rate: u32) -> Result<Self, Failure> {
        let (Some(input), Some(num_sources)) = (a.input.clone(), a.num_sources) else {
            return Err(usage("--input and --num-sources are required"));
        };
        if num_sources == 0 {
            return Err(usage("--num-sources must be at least 1"));
        }
        let (frame_ms, q) = resolve_analysis(&a.analysis, sample_rate);
        let stft_cfg = StftConfig::from_millis(frame_ms, sample_rate).map_err(|e| usage(e.to_string()))?;
        let sparsifier = SparsifierConfig::new(q, a.analysis.conf_threshold, 100 * num_sources)
            .map_err(|e| usage(e.to_string()))?;
        Ok(Self {
            input,
            num_sources,
            material: a.analysis.material,
            sample_rate,
            frame_ms,
            frame_length: stft_cfg.frame_length(),
            hop: stft_cfg.hop(),
            sparsifier,
            mode: a.mode,
            em: EmConfig {
                max_iterations: a.max_iterations,
                k_init: a.k_init,
                step_scale: a.step_scale,
                seed: a.seed,
                ..EmConfig::default()
            },
        })
    }
}

#[derive(Serialize)]
struct SourceCount {
    source: usize,
    file: String,
    points: usize,
}

#[derive(Serialize)]
struct AssignmentSummary {
    sources: Vec<SourceCount>,
    tie_count: usize,
    selected_points: usize,
    confidence_threshold_used: Option<f64>,
    em_iterations: usize,
    em_converged: bool,
}

pub fn separate(args: SeparateArgs) -> Outcome {
    let cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<RunConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let input = args.input.as_ref().ok_or_else(|| usage("--input is required"))?;
            let rate = load(input)?.sample_rate();
            RunConfig::from_args(&args, rate)?
        }
    };
    let mixture = load(&cfg.input)?;
    if mixture.num_channels() < 2 {
        return Err(usage(format!("{} has one channel; need at least two", cfg.input.display())));
    }
    if mixture.sample_rate() != cfg.sample_rate {
        return Err(usage(format!(
            "{} is at {} Hz but the config expects {} Hz",
            cfg.input.display(),
            mixture.sample_rate(),
            cfg.sample_rate
        )));
    }
    let stft_cfg = StftConfig::from_millis(cfg.frame_ms, cfg.sample_rate)?;
    let mode = match cfg.mode {
        ModeArg::Wmdld => Mode::Weighted,
        ModeArg::Mdld => Mode::Unweighted,
    };
    let (out, summary) = run_separation(&mixture, cfg.num_sources, &stft_cfg, &cfg.sparsifier, &cfg.em, mode)?;

    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    for (i, buf) in out.buffers.iter().enumerate() {
        save(buf, &args.out_dir.join(source_name(i)))?;
    }
    fs::write(args.out_dir.join("model.json"), out.model.to_json()? + "\n")?;
    let assignment = AssignmentSummary {
        sources: summary
            .points_per_source
            .iter()
            .enumerate()
            .map(|(i, &points)| SourceCount {
                source: i + 1,
                file: source_name(i),
                points,
            })
            .collect(),
        tie_count: summary.tie_count,
        selected_points: summary.selected_points,
        confidence_threshold_used: summary.confidence_threshold_used,
        em_iterations: summary.em_iterations,
        em_converged: summary.em_converged,
    };
    write_json(&args.out_dir.join("assignment.json"), &assignment)?;
    write_json(&args.out_dir.join("config.json"), &cfg)?;
    log::info!("wrote {} sources to {}", out.buffers.len(), args.out_dir.display());
    Ok(())
}

fn wav_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    files.sort();
    Ok(files)
}

pub fn evaluate(args: EvaluateArgs) -> Outcome {
    let est_files = wav_files(&args.estimates)?;
    let ref_files = wav_files(&args.references)?;
    if est_files.is_empty() || est_files.len() != ref_files.len() {
        return Err(usage(format!(
            "{} estimates but {} references",
            est_files.len(),
            ref_files.len()
        )));
    }
    let estimates = est_files.iter().map(|p| load(p)).collect::<anyhow::Result<Vec<_>>>()?;
    let references = ref_files.iter().map(|p| load(p)).collect::<anyhow::Result<Vec<_>>>()?;
    let len = references[0].len();
    for (p, b) in est_files.iter().zip(&estimates).chain(ref_files.iter().zip(&references)) {
        if b.num_channels() != 1 {
            return Err(usage(format!("{} is not mono", p.display())));
        }
        if b.len() != len {
            return Err(usage(format!("{} has {} samples, expected {len}", p.display(), b.len())));
        }
    }
    let report = bss_metrics(&estimates, &references)?;
    fs::write(&args.report, report.to_json()? + "\n").with_context(|| format!("writing {}", args.report.display()))?;
    let csv = args.report.with_extension("csv");
    write_report_csv(BufWriter::new(File::create(&csv)?), &report)?;
    let a = report.averages;
    log::info!("mean SDR {:.2} dB, SIR {:.2} dB, SAR {:.2} dB", a.sdr, a.sir, a.sar);
    Ok(())
}

pub fn hist(args: HistArgs) -> Outcome {
    let mixture = load(&args.input)?;
    if mixture.num_channels() != 2 {
        return Err(usage(format!(
            "hist needs a stereo mixture, {} has {} channels",
            args.input.display(),
            mixture.num_channels()
        )));
    }
    if args.bins == 0 {
        return Err(usage("--bins must be at least 1"));
    }
    let (frame_ms, q) = resolve_analysis(&args.analysis, mixture.sample_rate());
    let stft_cfg = StftConfig::from_millis(frame_ms, mixture.sample_rate()).map_err(|e| usage(e.to_string()))?;
    let sparse_cfg =
        SparsifierConfig::new(q, args.analysis.conf_threshold, args.min_points).map_err(|e| usage(e.to_string()))?;
    let spec = stft(&mixture, &stft_cfg);
    let set = match (args.method, args.norm_threshold) {
        (HistMethod::Confidence, _) => select_points(&spec, &sparse_cfg)?,
        (HistMethod::Norm, Some(thr)) => norm_threshold_points(&spec, thr),
        (HistMethod::Norm, None) => {
            let count = select_points(&spec, &sparse_cfg)?.len();
            norm_threshold_points(&spec, norm_threshold_for_count(&spec, count))
        }
    };
    let histogram = angle_histogram(&set, args.bins)?;
    write_histogram_csv(BufWriter::new(File::create(&args.out)?), &histogram)
        .with_context(|| format!("writing {}", args.out.display()))?;
    log::info!(
        "{} points, 4-peak peak-to-valley ratio {:.2}",
        set.len(),
        peak_to_valley(&histogram, 4, (args.bins / 36).max(1))
    );
    Ok(())
}

pub fn synth(args: SynthArgs) -> Outcome {
    let cfg = BurstConfig {
        shared_fraction: args.shared_fraction,
        ..BurstConfig::new(args.num_sources, args.seconds, args.rate, args.seed)
    };
    let sources = sparse_bursts(&cfg).map_err(|e| usage(e.to_string()))?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    for (i, s) in sources.iter().enumerate() {
        save(s, &args.out_dir.join(source_name(i)))?;
    }
    write_json(&args.out_dir.join("synth.json"), &cfg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_lists() {
        let Ok(v) = parse_angles("-60, -20,20,70") else { panic!() };
        assert_eq!(v, vec![vec![-60.0, -20.0, 20.0, 70.0]]);
        let Ok(v) = parse_angles("0,-87;85,0") else { panic!() };
        assert_eq!(v, vec![vec![0.0, -87.0], vec![85.0, 0.0]]);
        assert!(parse_angles("1,x").is_err());
    }

    #[test]
    fn material_defaults() {
        let a = |material, frame_ms, q| AnalysisArgs {
            material,
            frame_ms,
            q,
            conf_threshold: 300.0,
        };
        assert_eq!(resolve_analysis(&a(Material::Speech, None, None), 16000), (32.0, 2));
        assert_eq!(resolve_analysis(&a(Material::Music, None, None), 16000), (128.0, 3));
        assert_eq!(resolve_analysis(&a(Material::Music, None, None), 44100), (46.4, 3));
        assert_eq!(resolve_analysis(&a(Material::Music, Some(64.0), Some(4)), 44100), (64.0, 4));
    }
}
