use wmdld::audio::AudioBuffer;
use wmdld::eval::synth::{sparse_bursts, BurstConfig};
use wmdld::eval::{bss_metrics, mix, MixingSpec};
use wmdld::mixture::{EmConfig, Mode};
use wmdld::separator::separate;
use wmdld::sparsifier::{
    angle_histogram, axial_angle_deg, find_peaks, norm_threshold_for_count, norm_threshold_points, peak_to_valley,
    select_points, SparsifierConfig,
};
use wmdld::stft::{stft, StftConfig};

const ANGLES: [f64; 4] = [-60.0, -20.0, 20.0, 70.0];

fn two_by_four(seconds: f64, seed: u64) -> (Vec<AudioBuffer>, AudioBuffer) {
    let src = sparse_bursts(&BurstConfig::new(4, seconds, 16000, seed)).unwrap();
    let spec = MixingSpec::new(ANGLES.iter().map(|a| vec![*a]).collect(), 2).unwrap();
    let x = mix(&src, &spec).unwrap();
    (src, x)
}

fn speech_stft() -> StftConfig {
    StftConfig::from_millis(32.0, 16000).unwrap()
}

#[test]
fn underdetermined_two_by_four() {
    let (src, x) = two_by_four(4.0, 1);
    let (out, summary) = separate(
        &x,
        4,
        &speech_stft(),
        &SparsifierConfig::for_sources(2, 4).unwrap(),
        &EmConfig::with_seed(1),
        Mode::Weighted,
    )
    .unwrap();
    assert_eq!(out.buffers.len(), 4);
    assert!(out.buffers.iter().all(|b| b.len() == x.len() && b.sample_rate() == 16000));
    assert_eq!(summary.points_per_source.iter().sum::<usize>(), 257 * speech_stft().frames_for(x.len()));
    let report = bss_metrics(&out.buffers, &src).unwrap();
    assert!(report.averages.sir >= 8.0, "{report:?}");
}

#[test]
fn orthogonal_columns_recover_disjoint_sources() {
    let cfg = BurstConfig {
        shared_fraction: 0.0,
        ..BurstConfig::new(2, 3.0, 16000, 5)
    };
    let src = sparse_bursts(&cfg).unwrap();
    let x = mix(&src, &MixingSpec::new(vec![vec![10.0], vec![100.0]], 2).unwrap()).unwrap();
    let (out, _) = separate(
        &x,
        2,
        &speech_stft(),
        &SparsifierConfig::for_sources(2, 2).unwrap(),
        &EmConfig::with_seed(2),
        Mode::Unweighted,
    )
    .unwrap();
    let report = bss_metrics(&out.buffers, &src).unwrap();
    assert!(report.per_source.iter().all(|m| m.sir >= 40.0), "{report:?}");
}

#[test]
fn single_source_output_is_a_projection() {
    let (_, x) = two_by_four(2.0, 3);
    let (out, _) = separate(
        &x,
        1,
        &speech_stft(),
        &SparsifierConfig::for_sources(2, 1).unwrap(),
        &EmConfig::with_seed(0),
        Mode::Weighted,
    )
    .unwrap();
    let m = &out.model.components()[0].mean;
    let proj: Vec<f64> = (0..x.len()).map(|n| m[0] * x.channel(0)[n] + m[1] * x.channel(1)[n]).collect();
    let err = out.buffers[0].channel(0).iter().zip(&proj).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn too_few_points_is_an_error() {
    let x = AudioBuffer::silence(2, 16000, 16000).unwrap();
    let res = separate(
        &x,
        2,
        &speech_stft(),
        &SparsifierConfig::for_sources(2, 2).unwrap(),
        &EmConfig::default(),
        Mode::Weighted,
    );
    assert!(res.is_err());
}

#[test]
fn confidence_histogram_is_sharper_than_norm_threshold() {
    let (_, x) = two_by_four(4.0, 7);
    let spec = stft(&x, &speech_stft());
    let confident = select_points(&spec, &SparsifierConfig::for_sources(2, 4).unwrap()).unwrap();
    let loud = norm_threshold_points(&spec, norm_threshold_for_count(&spec, confident.len()));
    assert!(loud.len().abs_diff(confident.len()) <= confident.len() / 100);

    let hc = angle_histogram(&confident, 180).unwrap();
    let hn = angle_histogram(&loud, 180).unwrap();
    assert!(peak_to_valley(&hc, 4, 5) > peak_to_valley(&hn, 4, 5));

    let mut peaks: Vec<f64> = find_peaks(&hc, 4, 5).iter().map(|&i| hc[i].angle_deg + 0.5).collect();
    peaks.sort_by(f64::total_cmp);
    for (p, a) in peaks.iter().zip(ANGLES) {
        assert!((p - a).abs() <= 2.0, "{peaks:?}");
    }
    // most confident points sit near a mixing direction; shared-band bursts account for the rest
    let near = confident
        .points()
        .iter()
        .filter(|p| ANGLES.iter().any(|a| (axial_angle_deg(p) - a).abs() < 5.0))
        .count();
    assert!(near as f64 >= 0.85 * confident.len() as f64, "{near} of {}", confident.len());
}
