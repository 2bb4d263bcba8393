use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wmdld::directional::{dot, sample_dld_with, uniform_direction, DldParams};
use wmdld::mixture::{fit, EmConfig, Mode, WmdldModel};
use wmdld::sparsifier::SparseDirectionalSet;

const ANGLES: [f64; 4] = [-60.0, -20.0, 20.0, 70.0];

fn unit(deg: f64) -> Vec<f64> {
    vec![deg.to_radians().cos(), deg.to_radians().sin()]
}

fn fixture(seed: u64, outlier_share: f64) -> SparseDirectionalSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::new();
    for a in ANGLES {
        pts.extend(sample_dld_with(&mut rng, &DldParams::new(unit(a), 30.0).unwrap(), 5000));
    }
    let extra = (pts.len() as f64 * outlier_share / (1.0 - outlier_share)).round() as usize;
    pts.extend((0..extra).map(|_| uniform_direction(&mut rng, 2)));
    SparseDirectionalSet::from_vectors(2, pts).unwrap()
}

/// Largest axial error (degrees) after matching each true angle to a distinct mean.
fn worst_error(model: &WmdldModel) -> f64 {
    let means = model.means();
    let err = |i: usize, a: f64| dot(&means[i], &unit(a)).abs().min(1.0).acos().to_degrees();
    let mut best = f64::INFINITY;
    let mut perm: Vec<usize> = (0..means.len()).collect();
    permutations(&mut perm, 0, &mut |p| {
        let w = ANGLES.iter().zip(p).map(|(a, &i)| err(i, *a)).fold(0.0, f64::max);
        best = best.min(w);
    });
    best
}

fn permutations(p: &mut Vec<usize>, at: usize, visit: &mut dyn FnMut(&[usize])) {
    if at == p.len() {
        return visit(p);
    }
    for i in at..p.len() {
        p.swap(at, i);
        permutations(p, at + 1, visit);
        p.swap(at, i);
    }
}

#[test]
fn recovers_four_directions_in_both_modes() {
    let data = fixture(0, 0.0);
    for mode in [Mode::Weighted, Mode::Unweighted] {
        let model = fit(&data, 4, &EmConfig::with_seed(0), mode).unwrap();
        assert!(worst_error(&model) < 3.0, "{mode:?}");
    }
}

#[test]
fn weighting_lowers_average_outlier_error() {
    // paired runs on identical data; the per-seed ordering is noisy, the mean is not
    let (mut w, mut u) = (0.0, 0.0);
    for seed in 0..10 {
        let data = fixture(seed, 0.1);
        w += worst_error(&fit(&data, 4, &EmConfig::with_seed(seed), Mode::Weighted).unwrap());
        u += worst_error(&fit(&data, 4, &EmConfig::with_seed(seed), Mode::Unweighted).unwrap());
    }
    assert!(w <= u, "weighted {w} unweighted {u}");
}

#[test]
fn fitted_model_survives_json() {
    let data = fixture(3, 0.05);
    let model = fit(&data, 4, &EmConfig::with_seed(3), Mode::Weighted).unwrap();
    let back = WmdldModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(back, model);
}
