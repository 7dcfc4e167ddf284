#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use sipmix::model::{
    log_complete_joint, CovarianceUpdate, Dataset, GammaPrior, Hyperparams, MixtureState, ZetaMode,
};
use sipmix::numeric::dirichlet_log_density;
use sipmix::sampler::{apply_birth, BirthProposal};
use sipmix::selberg::sample_dirichlet;
use sipmix::wishart::iw_log_density;

/// Tanh-sinh quadrature on `[a, b]`, halving the step until two successive
/// estimates agree to `rel_tol`. The integrand receives `(x, x - a, b - x)`
/// with both gaps computed without cancellation, so endpoint singularities
/// can be evaluated accurately.
pub fn tanh_sinh_gaps<F: FnMut(f64, f64, f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    let t_max = 4.0;
    let mut node = |t: f64| -> f64 {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        // distance from the endpoint the node approaches
        let delta = half * 2.0 / (1.0 + (2.0 * u.abs()).exp());
        if w == 0.0 || delta <= 0.0 {
            return 0.0;
        }
        let (x, lo, hi) = if t >= 0.0 {
            (b - delta, 2.0 * half - delta, delta)
        } else {
            (a + delta, delta, 2.0 * half - delta)
        };
        half * w * f(x, lo, hi)
    };
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += node(t) + node(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..10 {
        h /= 2.0;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            sum += node(t) + node(-t);
            k += 2;
        }
        let next = sum * h;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

pub fn tanh_sinh<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    tanh_sinh_gaps(|x, _, _| f(x), a, b, rel_tol)
}

/// `∫∫_{w1 + w2 ≤ 1} f(w1, w2, w3, |w1 - w2|)` with `w3 = 1 - w1 - w2`,
/// split where `|w1 - w2|` has its kink. All four arguments are passed
/// without cancellation error.
pub fn simplex_integral<F: Fn(f64, f64, f64, f64) -> f64>(f: F, rel_tol: f64) -> f64 {
    let inner_tol = rel_tol * 0.01;
    let inner = |w1: f64, top: f64| {
        if w1 < top {
            // w2 in [0, w1]: gap = w1 - w2; w2 in [w1, top]: w3 = top - w2
            tanh_sinh_gaps(|w2, _, gap| f(w1, w2, top - w2, gap), 0.0, w1, inner_tol)
                + tanh_sinh_gaps(|w2, gap, w3| f(w1, w2, w3, gap), w1, top, inner_tol)
        } else {
            tanh_sinh_gaps(|w2, _, w3| f(w1, w2, w3, w1 - w2), 0.0, top, inner_tol)
        }
    };
    tanh_sinh_gaps(|w1, _, _| inner(w1, 1.0 - w1), 0.0, 0.5, rel_tol)
        + tanh_sinh_gaps(|w1, _, top| inner(w1, top), 0.5, 1.0, rel_tol)
}

/// Mean and batch-means standard error of a correlated series.
pub fn batch_mean_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

/// Batch-means estimate of a variance and its standard error.
pub fn batch_variance_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let size = n / batches;
    let vars: Vec<f64> = (0..batches)
        .map(|b| {
            let chunk = &xs[b * size..(b + 1) * size];
            let m = chunk.iter().sum::<f64>() / size as f64;
            chunk.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (size - 1) as f64
        })
        .collect();
    let vm = vars.iter().sum::<f64>() / batches as f64;
    let vv = vars.iter().map(|v| (v - vm).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var, (vv / batches as f64).sqrt())
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Critical value of the two-sample KS test at level 0.01.
pub fn ks_critical_01(n: usize, m: usize) -> f64 {
    1.628 * (((n + m) as f64) / ((n * m) as f64)).sqrt()
}

/// Random-walk Metropolis draws targeting `exp(log_target)`, thinned.
pub fn rw_metropolis<F: Fn(&[f64]) -> f64>(
    log_target: F,
    start: Vec<f64>,
    step: f64,
    n: usize,
    thin: usize,
    rng: &mut ChaCha20Rng,
) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, step).unwrap();
    let mut x = start;
    let mut lx = log_target(&x);
    let mut out = Vec::with_capacity(n);
    for it in 0..(n * thin + 2000) {
        let y: Vec<f64> = x.iter().map(|v| v + normal.sample(rng)).collect();
        let ly = log_target(&y);
        if rng.random::<f64>().ln() < ly - lx {
            x = y;
            lx = ly;
        }
        if it >= 2000 && (it - 2000) % thin == 0 {
            out.push(x.clone());
        }
    }
    out
}

pub fn random_spd(dim: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.7);
    &a * a.transpose() + DMatrix::identity(dim, dim) * 0.3
}

/// A random model with hyperpriors on `γ` and `ζ`, `M` components, `N`
/// observations (possibly zero) and at least `empty` non-allocated components.
pub fn random_setup(
    rng: &mut ChaCha20Rng,
    m: usize,
    n: usize,
    dim: usize,
    empty: usize,
) -> (Dataset, MixtureState, Hyperparams) {
    let data = if n == 0 {
        Dataset::empty(dim)
    } else {
        Dataset::new(
            (0..n)
                .map(|_| (0..dim).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect())
                .collect(),
        )
        .unwrap()
    };
    let allocated = (m - empty.min(m)).max(1);
    let alloc = (0..n).map(|_| rng.random_range(0..allocated)).collect();
    let gamma = rng.random_range(0.05..2.0);
    let zeta = rng.random_range(0.1..2.0);
    let s = MixtureState {
        weights: sample_dirichlet(&vec![1.0; m], rng),
        means: (0..m)
            .map(|_| DVector::from_fn(dim, |_, _| 1.5 * rng.sample::<f64, _>(StandardNormal)))
            .collect(),
        covs: (0..m).map(|_| random_spd(dim, rng)).collect(),
        alloc,
        gamma,
        zeta,
    };
    let mut h = Hyperparams::new(dim);
    h.alpha0 = rng.random_range(0.5..3.0);
    h.lambda = rng.random_range(0.5..6.0);
    h.v0 = random_spd(dim, rng);
    h.nu0 = dim as f64 + rng.random_range(0.5..4.0);
    h.q = rng.random_range(0.2..0.8);
    h.gamma_prior = GammaPrior::Gamma {
        shape: rng.random_range(0.5..4.0),
        rate: rng.random_range(0.5..4.0),
    };
    h.zeta_mode = ZetaMode::Gamma {
        shape: rng.random_range(0.5..4.0),
        rate: rng.random_range(0.5..4.0),
    };
    h.covariance_update = CovarianceUpdate::Centered;
    (data, s, h)
}

/// Compares two log-ratios, treating matching infinities as equal.
pub fn close_log(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        a == b
    } else {
        (a - b).abs() <= tol
    }
}

pub fn joint(data: &Dataset, s: &MixtureState, h: &Hyperparams) -> f64 {
    log_complete_joint(data, s, h).unwrap()
}

pub fn normal_ld(x: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * x * x / var
}

pub fn post_alphas(s: &MixtureState, h: &Hyperparams) -> Vec<f64> {
    s.counts().iter().map(|&n| h.alpha0 + n as f64).collect()
}

fn birth_probability(s: &MixtureState, h: &Hyperparams) -> f64 {
    if s.m_non_allocated() == 0 {
        1.0
    } else {
        h.q
    }
}

/// Joint ratio times reverse over forward proposal, for a birth `s → s'`.
pub fn birth_oracle(data: &Dataset, s: &MixtureState, b: &BirthProposal, h: &Hyperparams) -> f64 {
    let big = apply_birth(s, b);
    let mut alphas = post_alphas(s, h);
    alphas.insert(b.position, h.alpha0);
    let forward = birth_probability(s, h).ln() - ((s.m() + 1) as f64).ln()
        + dirichlet_log_density(&b.weights, &alphas)
        + b.mean.iter().map(|&x| normal_ld(x, 1.0 / s.zeta)).sum::<f64>()
        + iw_log_density(&b.cov, &h.v0, h.nu0).unwrap();
    let reverse = (1.0 - h.q).ln() - (big.m_non_allocated() as f64).ln()
        + dirichlet_log_density(&s.weights, &post_alphas(s, h));
    joint(data, &big, h) - joint(data, s, h) + reverse - forward
}
