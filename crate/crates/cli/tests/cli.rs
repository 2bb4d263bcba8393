use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use wmdld::audio::{read_wav, write_wav, AudioBuffer, WavEncoding};

fn wmdld(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmdld"))
        .args(args)
        .arg("-q")
        .current_dir(dir)
        .env_remove("WMDLD_SEED")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = wmdld(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    wmdld(dir, args).status.code().unwrap()
}

/// Four synthetic sources and their stereo mixture.
fn workspace(sources: usize, seconds: &str) -> TempDir {
    let tmp = TempDir::new().unwrap();
    let n = sources.to_string();
    ok(tmp.path(), &["synth", "--num-sources", &n, "--seconds", seconds, "--seed", "4", "--out-dir", "src"]);
    tmp
}

fn sources(dir: &Path, n: usize) -> Vec<String> {
    (1..=n).map(|i| dir.join(format!("src/source_{i:02}.wav")).display().to_string()).collect()
}

fn stereo_mix(tmp: &TempDir) -> PathBuf {
    let mut args = vec!["mix".to_string(), "--sources".into()];
    args.extend(sources(tmp.path(), 4));
    args.extend(["--angles".into(), "-60,-20,20,70".into(), "--out".into(), "mix.wav".into()]);
    ok(tmp.path(), &args.iter().map(String::as_str).collect::<Vec<_>>());
    tmp.path().join("mix.wav")
}

#[test]
fn mix_writes_stereo_and_sidecar() {
    let tmp = workspace(4, "1");
    let mix = stereo_mix(&tmp);
    let buf = read_wav(&mix).unwrap();
    assert_eq!(buf.num_channels(), 2);
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("mix.json")).unwrap()).unwrap();
    assert_eq!(sidecar["mixing"]["columns"].as_array().unwrap().len(), 4);
    assert_eq!(sidecar["gain"], 1.0);
}

#[test]
fn mix_three_sensors_from_two_angle_lists() {
    let tmp = workspace(5, "1");
    let mut args = vec!["mix".to_string(), "--sources".into()];
    args.extend(sources(tmp.path(), 5));
    args.extend(["--angles".into(), "0,-87,-60,0,45;85,0,-60,0,45".into(), "--out".into(), "mix3.wav".into()]);
    ok(tmp.path(), &args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(read_wav(tmp.path().join("mix3.wav")).unwrap().num_channels(), 3);
}

#[test]
fn mix_usage_errors() {
    let tmp = workspace(2, "0.5");
    let s = sources(tmp.path(), 2);
    assert_eq!(code(tmp.path(), &["mix", "--sources", &s[0], &s[1], "--angles", "10", "--out", "m.wav"]), 2);
    assert_eq!(code(tmp.path(), &["mix", "--sources", &s[0], &s[1], "--angles", "10,abc", "--out", "m.wav"]), 2);
    assert_eq!(code(tmp.path(), &["mix", "--sources", "missing.wav", &s[1], "--angles", "1,2", "--out", "m.wav"]), 1);
}

#[test]
fn separate_writes_all_outputs() {
    let tmp = workspace(4, "3");
    stereo_mix(&tmp);
    for (mode, dir) in [("wmdld", "w"), ("mdld", "u")] {
        ok(tmp.path(), &["separate", "--input", "mix.wav", "--num-sources", "4", "--mode", mode, "--out-dir", dir]);
        let d = tmp.path().join(dir);
        for i in 1..=4 {
            let b = read_wav(d.join(format!("source_{i:02}.wav"))).unwrap();
            assert_eq!((b.num_channels(), b.len()), (1, 48000));
        }
        let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("model.json")).unwrap()).unwrap();
        let expected = if mode == "wmdld" { "weighted" } else { "unweighted" };
        assert_eq!(model["mode"], expected);
        let config: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("config.json")).unwrap()).unwrap();
        assert_eq!(config["frame_length"], 512);
        assert_eq!(config["sparsifier"]["q"], 2);
        assert!(d.join("assignment.json").exists());
    }
    assert_eq!(code(tmp.path(), &["separate", "--input", "mix.wav", "--out-dir", "x"]), 2);
}

#[test]
fn separate_rejects_mono_input() {
    let tmp = workspace(1, "0.5");
    let s = sources(tmp.path(), 1);
    assert_eq!(code(tmp.path(), &["separate", "--input", &s[0], "--num-sources", "2", "--out-dir", "x"]), 2);
}

#[test]
fn evaluate_matches_and_scores() {
    let tmp = workspace(3, "1");
    let refs = tmp.path().join("src");
    ok(tmp.path(), &["evaluate", "--estimates", "src", "--references", "src", "--report", "same.json"]);
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("same.json")).unwrap()).unwrap();
    assert_eq!(rep["averages"]["sdr"], 100.0);
    assert_eq!(rep["permutation"], serde_json::json!([0, 1, 2]));
    assert!(tmp.path().join("same.csv").exists());

    // same files under rotated names
    let shuffled = tmp.path().join("shuffled");
    fs::create_dir(&shuffled).unwrap();
    for (from, to) in [(1, 2), (2, 3), (3, 1)] {
        fs::copy(refs.join(format!("source_{from:02}.wav")), shuffled.join(format!("est_{to}.wav"))).unwrap();
    }
    ok(tmp.path(), &["evaluate", "--estimates", "shuffled", "--references", "src", "--report", "shuf.json"]);
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("shuf.json")).unwrap()).unwrap();
    assert_eq!(rep["permutation"], serde_json::json!([2, 0, 1]));
    assert_eq!(rep["averages"]["sir"], 100.0);

    let short = tmp.path().join("short");
    fs::create_dir(&short).unwrap();
    for i in 1..=3 {
        write_wav(&AudioBuffer::mono(vec![0.1; 100], 16000).unwrap(), short.join(format!("{i}.wav")), WavEncoding::Float32).unwrap();
    }
    assert_eq!(code(tmp.path(), &["evaluate", "--estimates", "short", "--references", "src", "--report", "r.json"]), 2);
    fs::remove_file(short.join("3.wav")).unwrap();
    assert_eq!(code(tmp.path(), &["evaluate", "--estimates", "short", "--references", "src", "--report", "r.json"]), 2);
}

fn histogram(path: &Path) -> Vec<u64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn hist_exports_both_methods() {
    let tmp = workspace(4, "3");
    stereo_mix(&tmp);
    ok(tmp.path(), &["hist", "--input", "mix.wav", "--out", "conf.csv"]);
    ok(tmp.path(), &["hist", "--input", "mix.wav", "--method", "norm", "--out", "norm.csv"]);
    let conf = histogram(&tmp.path().join("conf.csv"));
    let norm = histogram(&tmp.path().join("norm.csv"));
    assert_eq!(conf.len(), 180);
    // matched counts, within ties at the threshold
    let (a, b) = (conf.iter().sum::<u64>(), norm.iter().sum::<u64>());
    assert!(a.abs_diff(b) * 100 <= a, "{a} vs {b}");
    // the four tallest bins of the confidence histogram sit at the mixing angles
    let mut idx: Vec<usize> = (0..180).collect();
    idx.sort_by_key(|&i| std::cmp::Reverse(conf[i]));
    for angle in [-60i64, -20, 20, 70] {
        let bin = (angle + 90) as usize;
        assert!(idx[..12].iter().any(|&i| i.abs_diff(bin) <= 2), "no peak near {angle}");
    }
    ok(tmp.path(), &["hist", "--input", "mix.wav", "--bins", "36", "--out", "c36.csv"]);
    assert_eq!(histogram(&tmp.path().join("c36.csv")).len(), 36);
}

#[test]
fn hist_needs_stereo() {
    let tmp = workspace(3, "0.5");
    let mut args = vec!["mix".to_string(), "--sources".into()];
    args.extend(sources(tmp.path(), 3));
    args.extend(["--angles".into(), "0,40,80;10,20,30".into(), "--out".into(), "m3.wav".into()]);
    ok(tmp.path(), &args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(tmp.path(), &["hist", "--input", "m3.wav", "--out", "h.csv"]), 2);
}

#[test]
fn rerun_from_config_is_bitwise_identical() {
    let tmp = workspace(4, "2");
    stereo_mix(&tmp);
    ok(tmp.path(), &["separate", "--input", "mix.wav", "--num-sources", "4", "--seed", "9", "--out-dir", "a"]);
    ok(tmp.path(), &["separate", "--config", "a/config.json", "--out-dir", "b"]);
    for f in ["model.json", "source_01.wav", "source_04.wav", "config.json"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap(), "{f}");
    }
}
