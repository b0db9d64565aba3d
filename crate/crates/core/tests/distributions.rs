use aftgl::dists::{sample_skew_normal, ErrorScenario, RngStream};
use aftgl::sampler::{effective_sample_size, hmc_update};
use ndarray::{array, Array1, Array2};

fn moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn mixture_components_are_picked_with_equal_odds() {
    let n = 200_000;
    let mut rng = RngStream::new(5, 0);
    let low = (0..n).filter(|_| ErrorScenario::Bimodal.sample::<f64, _>(&mut rng) < 4.0).count();
    let sd = (n as f64 * 0.25).sqrt();
    assert!((low as f64 - n as f64 / 2.0).abs() < 4.0 * sd, "{low} of {n}");

    let mut rng = RngStream::new(6, 0);
    let wide = (0..n)
        .filter(|_| (ErrorScenario::HeavyTailed.sample::<f64, _>(&mut rng) - 4.0).abs() > 0.5)
        .count();
    // P(|N(0,2)| > 0.5) = 0.7237, the narrow component essentially never leaves the band
    let expect = 0.5 * 0.723_673_609_831_763_4;
    let sd = (n as f64 * expect * (1.0 - expect)).sqrt();
    assert!((wide as f64 - n as f64 * expect).abs() < 4.0 * sd, "{wide}");
}

#[test]
fn scenario_moments() {
    let delta = 20.0 / 401f64.sqrt();
    let skew_mean = 2.8 + 1.7 * delta * (2.0 / std::f64::consts::PI).sqrt();
    let skew_var = 1.7f64.powi(2) * (1.0 - 2.0 * delta * delta / std::f64::consts::PI);
    let cases = [
        (ErrorScenario::LogNormal, 4.0, 1.0),
        (ErrorScenario::Bimodal, 4.0, 0.01 + 1.44),
        (ErrorScenario::HeavyTailed, 4.0, 0.5 * 2.0 + 0.5 * 0.01),
        (ErrorScenario::RightSkewed, skew_mean, skew_var),
    ];
    let n = 400_000;
    for (k, (s, mean, var)) in cases.into_iter().enumerate() {
        let mut rng = RngStream::new(11, k as u64);
        let draws: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let (m, v) = moments(&draws);
        assert!((m - mean).abs() < 4.0 * (var / n as f64).sqrt(), "{s:?} mean {m} vs {mean}");
        assert!((v / var - 1.0).abs() < 0.02, "{s:?} variance {v} vs {var}");
    }
}

#[test]
fn skew_normal_is_right_skewed_for_positive_shape() {
    let mut rng = RngStream::new(2, 0);
    let draws: Vec<f64> = (0..100_000).map(|_| sample_skew_normal(0.0, 1.0, 5.0, &mut rng)).collect();
    let (m, v) = moments(&draws);
    let third = draws.iter().map(|x| (x - m).powi(3)).sum::<f64>() / draws.len() as f64 / v.powf(1.5);
    // skewness of SN(0, 1, 5) from the closed form
    let d = 5.0 / 26f64.sqrt();
    let b = d * (2.0 / std::f64::consts::PI).sqrt();
    let want = (4.0 - std::f64::consts::PI) / 2.0 * b.powi(3) / (1.0 - b * b).powf(1.5);
    assert!((third - want).abs() < 0.05, "{third} vs {want}");
}

#[test]
fn hmc_reproduces_correlated_gaussian_moments() {
    let mean = array![1.0, -2.0];
    let cov = array![[1.0, 0.6], [0.6, 2.0]];
    let det = cov[[0, 0]] * cov[[1, 1]] - cov[[0, 1]] * cov[[1, 0]];
    let prec: Array2<f64> = array![[cov[[1, 1]], -cov[[0, 1]]], [-cov[[1, 0]], cov[[0, 0]]]] / det;
    let mut target = |x: &Array1<f64>| {
        let d = x - &mean;
        let g = -prec.dot(&d);
        (0.5 * d.dot(&g), g)
    };
    let mut rng = RngStream::new(4, 0);
    let mut x = mean.clone();
    let n = 40_000;
    let mut cols = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for _ in 0..n {
        x = hmc_update(&mut target, &x, 0.15, 12, &mut rng).unwrap().position;
        cols[0].push(x[0]);
        cols[1].push(x[1]);
    }
    for j in 0..2 {
        let (m, v) = moments(&cols[j]);
        let ess = effective_sample_size(&[&cols[j]]);
        assert!((m - mean[j]).abs() < 3.0 * (v / ess).sqrt(), "mean[{j}] {m}, ess {ess}");
        assert!((v / cov[[j, j]] - 1.0).abs() < 0.05, "var[{j}] {v}");
    }
}
