use aftgl::data::{back_transform, group_orthonormalize, GroupStructure};
use aftgl::dists::{lognormal_logpdf, lognormal_logsurv, sample_truncated_lognormal, std_normal, LogNormalParams, RngStream};
use aftgl::gradcheck::{random_state, relative_error};
use aftgl::likelihood::{
    beta_log_target_and_grad, complete_data_loglik, gamma_log_target_and_grad, linear_predictor, AugmentedState,
    ModelFrame, PriorConfig,
};
use aftgl::sampler::{run_chains, update_tau2, SamplerConfig};
use aftgl::selection::{best_candidate, candidate_grid, compute_snc, selection_criterion};
use aftgl::design::PriorKind;
use aftgl::sim::{generate_covariates, ScenarioSpec};
use ndarray::{Array1, Array2, Axis};
use proptest::prelude::*;
use rand::{Rng, RngCore};

fn random_matrix(n: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut rng = RngStream::new(seed, 0);
    Array2::from_shape_fn((n, p), |_| std_normal::<f64, _>(&mut rng) * 3.0 + 1.0)
}

fn sizes_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=8, 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_qr_is_orthonormal_and_reconstructs(n in 20usize..=200, sizes in sizes_strategy(), seed in any::<u64>()) {
        let p: usize = sizes.iter().sum();
        let x = random_matrix(n, p, seed);
        let groups = GroupStructure::contiguous(&sizes).unwrap();
        let basis = group_orthonormalize(&x, &groups).unwrap();
        let centered = &x - &x.mean_axis(Axis(0)).unwrap();
        for k in 0..groups.n_groups() {
            let cols = groups.members(k);
            let qk = basis.q.select(Axis(1), cols);
            let gram = qk.t().dot(&qk);
            for a in 0..cols.len() {
                for b in 0..cols.len() {
                    let want = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((gram[[a, b]] - want).abs() < 1e-10);
                }
            }
            let rebuilt = qk.dot(&basis.r[k]);
            let xk = centered.select(Axis(1), cols);
            for (u, v) in rebuilt.iter().zip(xk.iter()) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn back_transform_inverts_r(n in 20usize..=200, sizes in sizes_strategy(), seed in any::<u64>()) {
        let p: usize = sizes.iter().sum();
        let x = random_matrix(n, p, seed);
        let groups = GroupStructure::contiguous(&sizes).unwrap();
        let basis = group_orthonormalize(&x, &groups).unwrap();
        let mut rng = RngStream::new(seed, 1);
        let beta = Array1::from_shape_fn(p, |_| rng.random_range(-3.0..3.0));
        let ortho = basis.to_ortho(&beta).unwrap();
        let back = back_transform(&ortho, &basis).unwrap();
        for (a, b) in back.iter().zip(beta.iter()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let centered = &x - &x.mean_axis(Axis(0)).unwrap();
        let lp_orig = centered.dot(&beta);
        let lp_ortho = basis.q.dot(&ortho);
        for (a, b) in lp_orig.iter().zip(lp_ortho.iter()) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn gradients_match_central_differences(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let s = random_state(&mut rng).unwrap();
        let prior = PriorConfig { v2: 4.0, ..PriorConfig::default() };
        let (_, gb) = beta_log_target_and_grad(&s.theta.beta, &s.theta, &s.aug, &s.frame);
        for j in 0..s.theta.beta.len() {
            let h = 1e-5 * s.theta.beta[j].abs().max(1.0);
            let mut up = s.theta.beta.clone();
            up[j] += h;
            let mut dn = s.theta.beta.clone();
            dn[j] -= h;
            let fd = (beta_log_target_and_grad(&up, &s.theta, &s.aug, &s.frame).0
                - beta_log_target_and_grad(&dn, &s.theta, &s.aug, &s.frame).0) / (2.0 * h);
            prop_assert!(relative_error(gb[j], fd) < 1e-6, "beta[{j}]: {} vs {fd}", gb[j]);
        }
        let (_, gg) = gamma_log_target_and_grad(&s.theta.gamma, &s.theta, &s.aug, &s.frame, &prior);
        for j in 0..s.theta.gamma.len() {
            let h = 1e-5 * s.theta.gamma[j].abs().max(1.0);
            let mut up = s.theta.gamma.clone();
            up[j] += h;
            let mut dn = s.theta.gamma.clone();
            dn[j] -= h;
            let fd = (gamma_log_target_and_grad(&up, &s.theta, &s.aug, &s.frame, &prior).0
                - gamma_log_target_and_grad(&dn, &s.theta, &s.aug, &s.frame, &prior).0) / (2.0 * h);
            prop_assert!(relative_error(gg[j], fd) < 1e-6, "gamma[{j}]: {} vs {fd}", gg[j]);
        }
    }

    #[test]
    fn loglik_ignores_subject_order(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let s = random_state(&mut rng).unwrap();
        let n = s.frame.n();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let f = &s.frame;
        let shuffled = ModelFrame::new(
            f.x.select(Axis(0), &perm),
            f.z.select(Axis(0), &perm),
            f.entry.select(Axis(0), &perm),
            f.lower.select(Axis(0), &perm),
            f.upper.select(Axis(0), &perm),
            f.groups.clone(),
        );
        let aug = AugmentedState { t: s.aug.t.select(Axis(0), &perm) };
        let a = complete_data_loglik(&s.theta, &s.aug, f);
        let b = complete_data_loglik(&s.theta, &aug, &shuffled);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn shifting_a_covariate_into_mu_keeps_the_likelihood(seed in any::<u64>(), c in -5.0f64..5.0) {
        let mut rng = RngStream::new(seed, 0);
        let s = random_state(&mut rng).unwrap();
        let j = rng.random_range(0..s.frame.p());
        let f = &s.frame;
        let mut x = f.x.clone();
        x.column_mut(j).mapv_inplace(|v| v + c);
        let shifted = ModelFrame::new(x, f.z.clone(), f.entry.clone(), f.lower.clone(), f.upper.clone(), f.groups.clone());
        let mut theta = s.theta.clone();
        theta.mu -= c * theta.beta[j];
        let eta0 = linear_predictor(&s.theta, f);
        let eta1 = linear_predictor(&theta, &shifted);
        for (a, b) in eta0.iter().zip(eta1.iter()) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
        let a = complete_data_loglik(&s.theta, &s.aug, f);
        let b = complete_data_loglik(&theta, &s.aug, &shifted);
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
    }

    #[test]
    fn logsurv_derivative_is_the_density(eta in -3.0f64..3.0, sigma in 0.2f64..2.0, z in -2.5f64..2.5) {
        let p = LogNormalParams::new(eta, sigma).unwrap();
        let t = (eta + sigma * z).exp();
        let h = 1e-5 * t;
        let cdf = |u: f64| -lognormal_logsurv(u, &p).exp();
        let fd = (cdf(t + h) - cdf(t - h)) / (2.0 * h);
        let dens = lognormal_logpdf(t, &p).unwrap().exp();
        prop_assert!((fd - dens).abs() <= 1e-6 * dens, "{fd} vs {dens}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn truncated_draws_stay_in_bounds(
        eta in -5.0f64..5.0,
        sigma in 0.05f64..3.0,
        lo_z in -12.0f64..12.0,
        width in prop_oneof![Just(f64::INFINITY), 1e-9f64..1e-3, 1e-3f64..10.0],
        seed in any::<u64>(),
    ) {
        let p = LogNormalParams::new(eta, sigma).unwrap();
        let lo = (eta + sigma * lo_z).exp();
        let hi = if width.is_finite() { lo * (1.0 + width) } else { f64::INFINITY };
        let mut rng = RngStream::new(seed, 3);
        for _ in 0..4000 {
            let t = sample_truncated_lognormal(&p, lo, hi, &mut rng).unwrap();
            prop_assert!(t >= lo && t <= hi, "{t} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn streams_replay_exactly(seed in any::<u64>(), stream in any::<u64>()) {
        let mut a = RngStream::new(seed, stream);
        let mut b = RngStream::new(seed, stream);
        for _ in 0..32 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn snc_ignores_sign(draws in prop::collection::vec(-10.0f64..10.0, 2..300)) {
        let a = Array1::from(draws);
        let b = a.mapv(|v| -v);
        prop_assert_eq!(compute_snc(a.view()).unwrap(), compute_snc(b.view()).unwrap());
    }

    #[test]
    fn candidate_supports_shrink(snc in prop::collection::vec(0.0f64..=1.0, 1..40), m in 1usize..200) {
        let grid = candidate_grid(&snc, m).unwrap();
        prop_assert!(grid.last().unwrap().support.is_empty());
        for w in grid.windows(2) {
            prop_assert!(w[0].kappa_max < w[1].kappa_min);
            prop_assert!(w[1].support.iter().all(|j| w[0].support.contains(j)));
            prop_assert!(w[1].support.len() < w[0].support.len());
        }
    }

    #[test]
    fn equal_likelihood_prefers_smaller_support(l in -1e4f64..0.0, p1 in 0usize..50, p2 in 0usize..50, n in 2usize..5000) {
        prop_assume!(p1 != p2);
        let scores = [(l, p1), (l, p2)];
        let pick = best_candidate(&scores).unwrap();
        prop_assert_eq!(scores[pick].1, p1.min(p2));
        let c = [(selection_criterion(l, p1, n), p1), (selection_criterion(l, p2, n), p2)];
        prop_assert_eq!(c[best_candidate(&c).unwrap()].1, p1.min(p2));
    }

    #[test]
    fn tau2_stays_positive(seed in any::<u64>(), scale in prop_oneof![Just(0.0), 1e-12f64..1e-6, 1e-3f64..50.0]) {
        let mut rng = RngStream::new(seed, 0);
        let groups = GroupStructure::contiguous(&[3, 1, 4]).unwrap();
        let mut theta = aftgl::Params::zeros(8, 0, 3);
        theta.beta = Array1::from_shape_fn(8, |_| scale * std_normal::<f64, _>(&mut rng));
        theta.sigma2 = rng.random_range(1e-3..10.0);
        theta.lambda2 = rng.random_range(1e-3..100.0);
        let tau2 = update_tau2(&theta, &groups, &mut rng).unwrap();
        prop_assert_eq!(tau2.len(), 3);
        prop_assert!(tau2.iter().all(|&t| t > 0.0 && t.is_finite()), "{tau2:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn blocks_correlate_within_more_than_across(seed in any::<u64>()) {
        let spec = ScenarioSpec { n: 200, p: 30, seed, ..ScenarioSpec::default() };
        let mut rng = RngStream::new(seed, 9);
        let (x, _) = generate_covariates(&spec, &mut rng);
        let corr = |a: usize, b: usize| {
            let u = x.column(a);
            let v = x.column(b);
            let (mu, mv) = (u.mean().unwrap(), v.mean().unwrap());
            let cov: f64 = u.iter().zip(v.iter()).map(|(p, q)| (p - mu) * (q - mv)).sum();
            let su: f64 = u.iter().map(|p| (p - mu).powi(2)).sum::<f64>().sqrt();
            let sv: f64 = v.iter().map(|q| (q - mv).powi(2)).sum::<f64>().sqrt();
            cov / (su * sv)
        };
        let bs = spec.block_size;
        let block = |j: usize| if j < spec.n_blocks * bs { Some(j / bs) } else { None };
        let mut min_within = f64::INFINITY;
        let mut max_across = f64::NEG_INFINITY;
        for a in 0..spec.n_blocks * bs {
            for b in a + 1..spec.p {
                let r = corr(a, b).abs();
                if block(a) == block(b) {
                    min_within = min_within.min(r);
                } else {
                    max_across = max_across.max(r);
                }
            }
        }
        prop_assert!(min_within > max_across, "{min_within} vs {max_across}");
    }

    #[test]
    fn chains_replay_bit_for_bit(seed in 0u64..1000) {
        let spec = ScenarioSpec { n: 40, p: 6, n_blocks: 1, block_size: 3, beta_star: vec![1.0, -1.0, 1.0], seed, ..ScenarioSpec::default() };
        let mut rng = aftgl::sim::data_rng(&spec, 0);
        let sim = aftgl::sim::simulate_dataset(&spec, &mut rng).unwrap();
        let cfg = SamplerConfig { n_iter: 60, n_chains: 2, seed, mcem_interval: 10, ..SamplerConfig::default() };
        let a = run_chains(&sim.dataset, &PriorConfig::default(), &cfg, PriorKind::GroupLasso).unwrap();
        let b = run_chains(&sim.dataset, &PriorConfig::default(), &cfg, PriorKind::GroupLasso).unwrap();
        for (ca, cb) in a.chains.iter().zip(b.chains.iter()) {
            prop_assert_eq!(&ca.table(), &cb.table());
            prop_assert_eq!(&ca.lambda2_trace, &cb.lambda2_trace);
            let in_unit = |r: Option<f64>| r.is_none_or(|v| (0.0..=1.0).contains(&v));
            prop_assert!(in_unit(ca.acceptance.beta) && in_unit(ca.acceptance.sigma2) && in_unit(ca.acceptance.mu));
            prop_assert!(ca.sigma2.iter().all(|&s| s > 0.0) && ca.tau2.iter().all(|&t| t > 0.0));
        }
    }
}
