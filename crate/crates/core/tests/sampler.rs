mod common;

use common::{birth_oracle, close_log, joint, normal_ld, post_alphas, random_setup};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sipmix::model::{
    log_complete_joint, CovarianceUpdate, Dataset, GammaPrior, Hyperparams, MixtureState,
    ZetaMode,
};
use sipmix::numeric::{dirichlet_log_density, log_normal_proposal_log_density};
use sipmix::sampler::*;
use sipmix::selberg::sample_dirichlet;

const TOL: f64 = 1e-8;

fn cases(seed: u64, count: usize, mut check: impl FnMut(&mut ChaCha20Rng, usize)) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for k in 0..count {
        check(&mut rng, k);
    }
}

#[test]
fn allocated_mean_ratio_matches_joint() {
    cases(1, 300, |rng, _| {
        let m = rng.random_range(1..6);
        let dim = rng.random_range(1..4);
        let n = rng.random_range(1..12);
        let (data, s, h) = random_setup(rng, m, n, dim, 0);
        let k = s.alloc[0];
        let d = rng.random_range(0..dim);
        let value = s.means[k][d] + rng.random_range(-1.0..1.0);
        let mut t = s.clone();
        t.means[k][d] = value;
        let r = mean_log_ratio(&data, &s, k, d, value).unwrap();
        assert!(close_log(r, joint(&data, &t, &h) - joint(&data, &s, &h), TOL));
    });
}

#[test]
fn identity_mean_proposal_has_unit_ratio() {
    cases(2, 20, |rng, _| {
        let (data, s, _) = random_setup(rng, 3, 6, 2, 0);
        let k = s.alloc[0];
        let r = mean_log_ratio(&data, &s, k, 1, s.means[k][1]).unwrap();
        assert!(r.abs() < 1e-12);
    });
}

#[test]
fn nonallocated_mean_ratio_matches_joint() {
    cases(3, 300, |rng, _| {
        let m = rng.random_range(2..6);
        let dim = rng.random_range(1..4);
        let n = rng.random_range(0..8);
        let (data, s, h) = random_setup(rng, m, n, dim, 1);
        let k = m - 1;
        assert_eq!(s.counts()[k], 0);
        let d = rng.random_range(0..dim);
        let value: f64 = rng.random_range(-3.0..3.0);
        let mut t = s.clone();
        t.means[k][d] = value;
        let correction = normal_ld(s.means[k][d], 1.0 / s.zeta) - normal_ld(value, 1.0 / s.zeta);
        let r = nonallocated_mean_log_ratio(&s, k, d, value);
        assert!(close_log(r, joint(&data, &t, &h) - joint(&data, &s, &h) + correction, TOL));
    });
}

#[test]
fn mean_ratio_approaches_likelihood_ratio_for_tiny_zeta() {
    cases(4, 50, |rng, _| {
        let (data, mut s, _) = random_setup(rng, 3, 10, 2, 0);
        s.zeta = 1e-6;
        let k = s.alloc[0];
        let value = s.means[k][0] + 0.3;
        let mut t = s.clone();
        t.means[k][0] = value;
        let loglik = |st: &MixtureState| -> f64 {
            let g = sipmix::wishart::Gaussian::new(st.means[k].clone(), &st.covs[k]).unwrap();
            data.rows()
                .iter()
                .zip(&st.alloc)
                .filter(|(_, &c)| c == k)
                .map(|(y, _)| g.log_pdf(y))
                .sum()
        };
        let r = mean_log_ratio(&data, &s, k, 0, value).unwrap();
        assert!((r - (loglik(&t) - loglik(&s))).abs() < 1e-4);
    });
}

#[test]
fn weights_ratio_matches_joint() {
    cases(5, 300, |rng, _| {
        let m = rng.random_range(2..7);
        let n = rng.random_range(0..12);
        let empty = rng.random_range(0..m);
        let (data, s, h) = random_setup(rng, m, n, 2, empty);
        let alphas = post_alphas(&s, &h);
        let w = sample_dirichlet(&alphas, rng);
        let mut t = s.clone();
        t.weights = w.clone();
        let correction =
            dirichlet_log_density(&s.weights, &alphas) - dirichlet_log_density(&w, &alphas);
        let r = weights_log_ratio(&s, &w);
        assert!(close_log(r, joint(&data, &t, &h) - joint(&data, &s, &h) + correction, TOL));
    });
}

#[test]
fn weights_ratio_hand_example() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let (_, mut s, _) = random_setup(&mut rng, 3, 0, 1, 3);
    s.weights = vec![0.4, 0.35, 0.25];
    s.gamma = 1.0;
    let r = weights_log_ratio(&s, &[0.6, 0.3, 0.1]);
    assert!((r.exp() - 36.0).abs() < 1e-9);
    s.gamma = 0.0;
    assert_eq!(weights_log_ratio(&s, &[0.6, 0.3, 0.1]), 0.0);
}

#[test]
fn gamma_ratio_matches_joint() {
    cases(7, 300, |rng, _| {
        let m = rng.random_range(1..7);
        let n = rng.random_range(0..10);
        let (data, s, h) = random_setup(rng, m, n, 2, 0);
        let g = s.gamma * rng.random_range(-1.0f64..1.0).exp();
        let mut t = s.clone();
        t.gamma = g;
        let correction = log_normal_proposal_log_density(s.gamma, g, 0.25)
            - log_normal_proposal_log_density(g, s.gamma, 0.25);
        let r = gamma_log_ratio(&s, &h, g);
        assert!(close_log(r, joint(&data, &t, &h) - joint(&data, &s, &h) + correction, TOL));
        assert!(gamma_log_ratio(&s, &h, s.gamma).abs() < 1e-12);
    });
}

#[test]
fn zeta_ratio_matches_joint() {
    cases(8, 300, |rng, _| {
        let m = rng.random_range(1..7);
        let dim = rng.random_range(1..4);
        let n = rng.random_range(0..10);
        let (data, s, h) = random_setup(rng, m, n, dim, 0);
        let z = s.zeta * rng.random_range(-1.0f64..1.0).exp();
        let mut t = s.clone();
        t.zeta = z;
        let correction = log_normal_proposal_log_density(s.zeta, z, 0.3)
            - log_normal_proposal_log_density(z, s.zeta, 0.3);
        let r = zeta_log_ratio(&s, &h, z);
        assert!(close_log(r, joint(&data, &t, &h) - joint(&data, &s, &h) + correction, TOL));
    });
}

#[test]
fn one_dimensional_zeta_ratio_matches_closed_form() {
    cases(9, 100, |rng, _| {
        let m = rng.random_range(2..6);
        let (_, s, h) = random_setup(rng, m, 0, 1, m);
        let ZetaMode::Gamma { shape, rate } = h.zeta_mode else { unreachable!() };
        let z = s.zeta * 1.7;
        let x = s.means_along(0);
        let g = |zeta: f64| sipmix::ensemble::ge_log_norm_const(
            &sipmix::ensemble::GeParams::new(zeta, m).unwrap(),
        );
        let sq: f64 = x.iter().map(|v| v * v).sum();
        let rep = sipmix::selberg::log_pairwise_repulsion(&x, sipmix::selberg::Convention::All);
        let expected = g(s.zeta) - g(z) - 0.5 * (z - s.zeta) * sq
            + (z - s.zeta) * rep
            + (shape - 1.0) * (z / s.zeta).ln()
            - rate * (z - s.zeta)
            + (z / s.zeta).ln();
        assert!((zeta_log_ratio(&s, &h, z) - expected).abs() < 1e-9);
    });
}

#[test]
fn tied_gamma_ratio_matches_joint() {
    cases(10, 300, |rng, _| {
        let m = rng.random_range(1..7);
        let n = rng.random_range(0..10);
        let (data, mut s, mut h) = random_setup(rng, m, n, 2, 0);
        let rho = rng.random_range(0.1..3.0);
        h.zeta_mode = ZetaMode::Ratio { rho };
        s.zeta = rho * s.gamma;
        let g = s.gamma * rng.random_range(-1.0f64..1.0).exp();
        let mut t = s.clone();
        t.gamma = g;
        t.zeta = rho * g;
        let correction = log_normal_proposal_log_density(s.gamma, g, 0.25)
            - log_normal_proposal_log_density(g, s.gamma, 0.25);
        let r = gamma_tied_log_ratio(&s, &h, g, rho);
        assert!(close_log(r, joint(&data, &t, &h) - joint(&data, &s, &h) + correction, TOL));
    });
}

#[test]
fn tied_gamma_with_tiny_ratio_differs_from_free_gamma_only_by_normalizer() {
    // the kernel terms vanish as ζ → 0 but ln G(M, ρ γ) keeps -(M/2) ln ζ per dimension
    cases(11, 50, |rng, _| {
        let (_, mut s, h) = random_setup(rng, 4, 0, 2, 4);
        let rho = 1e-9;
        s.zeta = rho * s.gamma;
        let g = s.gamma * 1.3;
        let diff = gamma_tied_log_ratio(&s, &h, g, rho) - gamma_log_ratio(&s, &h, g);
        let normalizer = 0.5 * (s.m() * s.dim()) as f64 * (g / s.gamma).ln();
        assert!((diff - normalizer).abs() < 1e-6, "{diff} vs {normalizer}");
    });
}

#[test]
fn birth_ratio_matches_joint() {
    cases(12, 300, |rng, _| {
        let m = rng.random_range(1..6);
        let dim = rng.random_range(1..3);
        let empty = rng.random_range(0..=m);
        let n = rng.random_range(0..10);
        let (data, s, h) = random_setup(rng, m, n, dim, empty);
        let b = propose_birth(&s, &h, rng).unwrap();
        let r = birth_log_ratio(&s, &b, &h);
        assert!(close_log(r, birth_oracle(&data, &s, &b, &h), TOL));
    });
}

#[test]
fn death_ratio_matches_joint() {
    cases(13, 300, |rng, _| {
        let m = rng.random_range(2..7);
        let dim = rng.random_range(1..3);
        let n = rng.random_range(0..10);
        let empty = rng.random_range(1..m);
        let (data, s, h) = random_setup(rng, m, n, dim, empty);
        let d = propose_death(&s, &h, rng).expect("an empty component exists");
        let small = apply_death(&s, &d);
        let reverse = BirthProposal {
            position: d.index,
            weights: s.weights.clone(),
            mean: s.means[d.index].clone(),
            cov: s.covs[d.index].clone(),
        };
        let r = death_log_ratio(&s, &d, &h);
        assert!(close_log(r, -birth_oracle(&data, &small, &reverse, &h), TOL));
    });
}

#[test]
fn birth_and_death_are_reciprocal() {
    cases(14, 300, |rng, _| {
        let m = rng.random_range(1..6);
        let n = rng.random_range(0..10);
        let empty = rng.random_range(0..=m);
        let (_, s, h) = random_setup(rng, m, n, 2, empty);
        let b = propose_birth(&s, &h, rng).unwrap();
        let big = apply_birth(&s, &b);
        let d = DeathProposal {
            index: b.position,
            weights: s.weights.clone(),
        };
        assert_eq!(apply_death(&big, &d), s);
        let sum = birth_log_ratio(&s, &b, &h) + death_log_ratio(&big, &d, &h);
        assert!(sum.abs() < TOL, "{sum}");
    });
}

#[test]
fn birth_keeps_allocations_and_death_only_removes_empty_components() {
    cases(15, 100, |rng, _| {
        let (data, s, h) = random_setup(rng, 4, 12, 2, 2);
        let b = propose_birth(&s, &h, rng).unwrap();
        let big = apply_birth(&s, &b);
        for i in 0..data.n() {
            assert_eq!(big.means[big.alloc[i]], s.means[s.alloc[i]]);
        }
        assert_eq!(big.m_allocated(), s.m_allocated());
        if let Some(d) = propose_death(&big, &h, rng) {
            assert_eq!(big.counts()[d.index], 0);
            let small = apply_death(&big, &d);
            assert_eq!(small.m_allocated(), big.m_allocated());
            for i in 0..data.n() {
                assert_eq!(small.means[small.alloc[i]], big.means[big.alloc[i]]);
            }
        }
    });
}

#[test]
fn death_of_the_only_component_is_impossible() {
    let mut rng = ChaCha20Rng::seed_from_u64(16);
    let (_, s, h) = random_setup(&mut rng, 1, 0, 1, 1);
    let d = propose_death(&s, &h, &mut rng).unwrap();
    assert_eq!(death_log_ratio(&s, &d, &h), f64::NEG_INFINITY);
}

#[test]
fn allocation_probabilities_match_hand_computation() {
    let data = Dataset::new(vec![vec![0.5]]).unwrap();
    let s = MixtureState {
        weights: vec![0.2, 0.5, 0.3],
        means: vec![-1.0, 0.0, 2.0].into_iter().map(|v| DVector::from_vec(vec![v])).collect(),
        covs: vec![1.0, 4.0, 0.25].into_iter().map(|v| DMatrix::from_element(1, 1, v)).collect(),
        alloc: vec![0],
        gamma: 0.0,
        zeta: 1.0,
    };
    let dens = |mu: f64, var: f64| (-(0.5f64 - mu).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
    let raw = [0.2 * dens(-1.0, 1.0), 0.5 * dens(0.0, 4.0), 0.3 * dens(2.0, 0.25)];
    let total: f64 = raw.iter().sum();
    let p = allocation_probabilities(&data, &s, 0).unwrap();
    for (a, b) in p.iter().zip(raw.iter()) {
        assert!((a - b / total).abs() < 1e-12);
    }
}

#[test]
fn far_separated_components_allocate_deterministically() {
    let data = Dataset::new(vec![vec![-50.0], vec![50.2], vec![-49.5], vec![49.0]]).unwrap();
    let s = MixtureState {
        weights: vec![0.5, 0.5],
        means: vec![DVector::from_vec(vec![-50.0]), DVector::from_vec(vec![50.0])],
        covs: vec![DMatrix::from_element(1, 1, 1.0); 2],
        alloc: vec![1, 0, 1, 0],
        gamma: 0.0,
        zeta: 1.0,
    };
    for i in 0..4 {
        let p = allocation_probabilities(&data, &s, i).unwrap();
        let nearest = usize::from(data.row(i)[0] > 0.0);
        assert!(p[nearest] >= 1.0 - 1e-6);
    }
    let mut t = s.clone();
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    update_allocations(&data, &mut t, &mut rng).unwrap();
    assert_eq!(t.alloc, vec![0, 1, 0, 1]);
}

#[test]
fn single_component_allocation_is_unchanged() {
    let mut rng = ChaCha20Rng::seed_from_u64(18);
    let (data, mut s, _) = random_setup(&mut rng, 1, 8, 2, 0);
    s.weights = vec![1.0];
    update_allocations(&data, &mut s, &mut rng).unwrap();
    assert!(s.alloc.iter().all(|&c| c == 0));
}

#[test]
fn covariance_posterior_parameters() {
    let mut rng = ChaCha20Rng::seed_from_u64(19);
    let (data, s, mut h) = random_setup(&mut rng, 3, 10, 2, 1);
    let (v, nu) = covariance_posterior(&data, &s, 2, &h);
    assert_eq!(v, h.v0);
    assert_eq!(nu, h.nu0);
    let counts = s.counts();
    for k in 0..2 {
        let (v, nu) = covariance_posterior(&data, &s, k, &h);
        assert_eq!(nu, counts[k] as f64 + h.nu0);
        let mut scatter = h.v0.clone();
        for (y, &c) in data.rows().iter().zip(&s.alloc) {
            if c == k {
                let r = y - &s.means[k];
                scatter += &r * r.transpose();
            }
        }
        assert!((v - scatter).amax() < 1e-12);
    }
    h.covariance_update = CovarianceUpdate::Literal;
    let (v, _) = covariance_posterior(&data, &s, 0, &h);
    let mut literal = h.v0.clone();
    for (y, &c) in data.rows().iter().zip(&s.alloc) {
        if c == 0 {
            literal += y * y.transpose();
        }
    }
    assert!((v - literal).amax() < 1e-12);
}

#[test]
fn covariance_posterior_mean_is_consistent() {
    let truth = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
    let chol = truth.clone().cholesky().unwrap().unpack();
    let mut rng = ChaCha20Rng::seed_from_u64(20);
    let rows: Vec<Vec<f64>> = (0..5000)
        .map(|_| {
            let z = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            (&chol * z).iter().copied().collect()
        })
        .collect();
    let data = Dataset::new(rows).unwrap();
    let s = MixtureState {
        weights: vec![1.0],
        means: vec![DVector::zeros(2)],
        covs: vec![DMatrix::identity(2, 2)],
        alloc: vec![0; 5000],
        gamma: 0.0,
        zeta: 1.0,
    };
    let h = Hyperparams::new(2);
    let (v, nu) = covariance_posterior(&data, &s, 0, &h);
    let mean = v / (nu - 3.0);
    for (a, b) in mean.iter().zip(truth.iter()) {
        assert!((a - b).abs() < 0.05 * truth.amax(), "{mean}");
    }
}

#[test]
fn gamma_zero_weights_always_accepted() {
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let (_, mut s, h) = random_setup(&mut rng, 4, 10, 1, 1);
    s.gamma = 0.0;
    let mut c = Counter::default();
    for _ in 0..200 {
        update_weights(&mut s, &h, &mut c, &mut rng);
    }
    assert_eq!(c.accepted, 200);
}

fn short_config(data_dim: usize, seed: u64) -> SamplerConfig {
    let mut h = Hyperparams::new(data_dim);
    h.burn_in = 100;
    h.thin = 2;
    h.n_samples = 100;
    h.gamma_prior = GammaPrior::Gamma { shape: 2.0, rate: 4.0 };
    h.zeta_mode = ZetaMode::Gamma { shape: 2.0, rate: 2.0 };
    SamplerConfig {
        hyper: h,
        seed,
        record_weights: true,
    }
}

#[test]
fn run_is_deterministic_and_valid() {
    let (data, _) = sipmix::model::simulate_benchmark(3);
    let config = short_config(2, 99);
    let (a, da) = run_sampler(&data, &config).unwrap();
    let (b, db) = run_sampler(&data, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(da, db);
    assert_eq!(a.len(), 100);
    a.validate().unwrap();
    for s in &a.samples {
        let w = s.weights.as_ref().unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.m_a >= 1 && s.m_a <= s.m.min(data.n()));
    }
    let (c, _) = run_sampler(&data, &short_config(2, 100)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn sweeps_preserve_state_invariants() {
    let (data, _) = sipmix::model::simulate_benchmark(4);
    let h = short_config(2, 0).hyper;
    let mut rng = ChaCha20Rng::seed_from_u64(22);
    let mut s = initial_state(&data, &h, &mut rng).unwrap();
    let mut diag = StepDiagnostics::default();
    for _ in 0..100 {
        update_allocations(&data, &mut s, &mut rng).unwrap();
        update_means(&data, &mut s, 0.25, &mut diag.means, &mut rng).unwrap();
        update_covariances(&data, &mut s, &h, &mut rng).unwrap();
        update_weights(&mut s, &h, &mut diag.weights, &mut rng);
        update_gamma(&mut s, &h, 0.25, &mut diag.gamma, &mut rng);
        update_zeta_full_conditional(&mut s, &h, 0.25, &mut diag.zeta, &mut rng);
        birth_death_step(&mut s, &h, &mut diag, &mut rng).unwrap();
        s.validate(&data).unwrap();
        assert_eq!(s.m(), s.m_allocated() + s.m_non_allocated());
        assert!(log_complete_joint(&data, &s, &h).unwrap().is_finite());
    }
    for c in [diag.means, diag.weights, diag.gamma, diag.zeta, diag.birth, diag.death] {
        assert!((0.0..=1.0).contains(&c.rate()));
    }
}

#[test]
fn ratio_mode_keeps_zeta_tied() {
    let (data, _) = sipmix::model::simulate_benchmark(5);
    let mut config = short_config(2, 7);
    config.hyper.zeta_mode = ZetaMode::Ratio { rho: 0.4 };
    let (trace, diag) = run_sampler(&data, &config).unwrap();
    assert!(diag.gamma.proposed > 0);
    assert_eq!(diag.zeta.proposed, 0);
    for s in &trace.samples {
        assert!((s.zeta - 0.4 * s.gamma).abs() < 1e-12);
    }
}

#[test]
fn invalid_configuration_is_rejected() {
    let (data, _) = sipmix::model::simulate_benchmark(5);
    let mut config = short_config(2, 7);
    config.hyper.gamma_prior = GammaPrior::Fixed(0.5);
    config.hyper.zeta_mode = ZetaMode::Ratio { rho: 0.4 };
    assert!(run_sampler(&data, &config).is_err());
    let mut config = short_config(2, 7);
    config.hyper.q = 1.0;
    assert!(run_sampler(&data, &config).is_err());
}

#[test]
fn prior_run_without_data() {
    let mut config = short_config(2, 8);
    config.hyper.n_samples = 2000;
    config.hyper.thin = 1;
    let (trace, diag) = run_sampler(&Dataset::empty(2), &config).unwrap();
    assert!(trace.samples.iter().all(|s| s.m_a == 0 && s.alloc.is_empty()));
    assert!(diag.birth.accepted > 0 && diag.death.accepted > 0);
}
