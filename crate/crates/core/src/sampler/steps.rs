use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{ge_term, sdir_term, CovarianceUpdate, Dataset, GammaPrior, Hyperparams, MixtureState, ZetaMode};
use crate::numeric::{gamma_log_density, log_sum_exp};
use crate::sampler::Counter;
use crate::selberg::{log_pairwise_repulsion, sample_dirichlet, scaled_repulsion, Convention};
use crate::wishart::{sample_iw, Gaussian};

/// Metropolis–Hastings accept/reject on the log scale. NaN ratios reject.
pub(crate) fn accept<R: Rng + ?Sized>(log_r: f64, rng: &mut R) -> bool {
    if log_r.is_nan() {
        return false;
    }
    log_r >= 0.0 || rng.random::<f64>().ln() < log_r
}

fn members(s: &MixtureState) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); s.m()];
    for (i, &c) in s.alloc.iter().enumerate() {
        out[c].push(i);
    }
    out
}

/// Normalized log-probabilities of each label for `y`.
fn label_log_probs(y: &DVector<f64>, log_w: &[f64], comps: &[Gaussian], buf: &mut [f64]) -> f64 {
    for (k, g) in comps.iter().enumerate() {
        buf[k] = log_w[k] + g.log_pdf(y);
    }
    log_sum_exp(buf)
}

/// Full-conditional label probabilities of observation `i`.
pub fn allocation_probabilities(data: &Dataset, s: &MixtureState, i: usize) -> Result<Vec<f64>> {
    let comps = s.gaussians()?;
    let log_w: Vec<f64> = s.weights.iter().map(|w| w.ln()).collect();
    let mut buf = vec![0.0; s.m()];
    let lse = label_log_probs(data.row(i), &log_w, &comps, &mut buf);
    Ok(buf.iter().map(|b| (b - lse).exp()).collect())
}

/// Gibbs update of every label from `w_m N(y_i | μ_m, Σ_m)`, computed in log space.
pub fn update_allocations<R: Rng + ?Sized>(
    data: &Dataset,
    s: &mut MixtureState,
    rng: &mut R,
) -> Result<()> {
    let comps = s.gaussians()?;
    let log_w: Vec<f64> = s.weights.iter().map(|w| w.ln()).collect();
    let mut buf = vec![0.0; s.m()];
    for (i, y) in data.rows().iter().enumerate() {
        let lse = label_log_probs(y, &log_w, &comps, &mut buf);
        if !lse.is_finite() {
            return Err(Error::domain(
                "alloc",
                format!("observation {} has zero density under every component", i + 1),
            ));
        }
        let mut u = rng.random::<f64>();
        let mut pick = buf.len() - 1;
        for (k, b) in buf.iter().enumerate() {
            let p = (b - lse).exp();
            if u < p {
                pick = k;
                break;
            }
            u -= p;
        }
        s.alloc[i] = pick;
    }
    Ok(())
}

/// Change in `ln GE` along dimension `d` when `μ_{m,d}` moves to `value`.
fn ge_coordinate_delta(s: &MixtureState, m: usize, d: usize, value: f64, zeta: f64) -> f64 {
    let old = s.means[m][d];
    let mut rep = 0.0;
    for (j, mu) in s.means.iter().enumerate() {
        if j == m {
            continue;
        }
        let gap_new = (value - mu[d]).abs();
        if gap_new == 0.0 {
            return f64::NEG_INFINITY;
        }
        rep += gap_new.ln() - (old - mu[d]).abs().ln();
    }
    zeta * rep - 0.5 * zeta * (value * value - old * old)
}

fn component_loglik(data: &Dataset, idx: &[usize], g: &Gaussian, mean: &DVector<f64>) -> f64 {
    idx.iter().map(|&i| g.log_pdf_at(data.row(i), mean)).sum()
}

/// Log acceptance ratio for the random-walk move `μ_{m,d} → value` of an
/// allocated component.
pub fn mean_log_ratio(data: &Dataset, s: &MixtureState, m: usize, d: usize, value: f64) -> Result<f64> {
    let idx = &members(s)[m];
    let g = Gaussian::new(s.means[m].clone(), &s.covs[m])?;
    let mut prop = s.means[m].clone();
    prop[d] = value;
    Ok(ge_coordinate_delta(s, m, d, value, s.zeta)
        + component_loglik(data, idx, &g, &prop)
        - component_loglik(data, idx, &g, &s.means[m]))
}

/// Log acceptance ratio for the independence move `μ_{m,d} → value` of a
/// non-allocated component, with proposal `N(0, 1/ζ)`.
pub fn nonallocated_mean_log_ratio(s: &MixtureState, m: usize, d: usize, value: f64) -> f64 {
    let old = s.means[m][d];
    let mut rep = 0.0;
    for (j, mu) in s.means.iter().enumerate() {
        if j == m {
            continue;
        }
        let gap_new = (value - mu[d]).abs();
        if gap_new == 0.0 {
            return f64::NEG_INFINITY;
        }
        rep += gap_new.ln() - (old - mu[d]).abs().ln();
    }
    s.zeta * rep
}

/// One coordinate-wise sweep over all component means.
pub fn update_means<R: Rng + ?Sized>(
    data: &Dataset,
    s: &mut MixtureState,
    step_mu: f64,
    counter: &mut Counter,
    rng: &mut R,
) -> Result<()> {
    let groups = members(s);
    let rw = Normal::new(0.0, step_mu.sqrt()).map_err(|e| Error::domain("step_mu", e.to_string()))?;
    let prior = Normal::new(0.0, (1.0 / s.zeta).sqrt()).map_err(|e| Error::domain("zeta", e.to_string()))?;
    for m in 0..s.m() {
        let idx = &groups[m];
        if idx.is_empty() {
            for d in 0..s.dim() {
                let value = prior.sample(rng);
                if accept(nonallocated_mean_log_ratio(s, m, d, value), rng) {
                    s.means[m][d] = value;
                }
            }
            continue;
        }
        let g = Gaussian::new(s.means[m].clone(), &s.covs[m])?;
        let mut ll_old = component_loglik(data, idx, &g, &s.means[m]);
        for d in 0..s.dim() {
            let value = s.means[m][d] + rw.sample(rng);
            let mut prop = s.means[m].clone();
            prop[d] = value;
            let ll_new = component_loglik(data, idx, &g, &prop);
            let log_r = ge_coordinate_delta(s, m, d, value, s.zeta) + ll_new - ll_old;
            let ok = accept(log_r, rng);
            counter.record(ok);
            if ok {
                s.means[m] = prop;
                ll_old = ll_new;
            }
        }
    }
    Ok(())
}

/// Inverse-Wishart full conditional `(V_post, ν_post)` of `Σ_m`.
pub fn covariance_posterior(
    data: &Dataset,
    s: &MixtureState,
    m: usize,
    h: &Hyperparams,
) -> (DMatrix<f64>, f64) {
    let mut v = h.v0.clone();
    let mut n = 0usize;
    for (y, &c) in data.rows().iter().zip(&s.alloc) {
        if c != m {
            continue;
        }
        n += 1;
        let r = match h.covariance_update {
            CovarianceUpdate::Centered => y - &s.means[m],
            CovarianceUpdate::Literal => y.clone(),
        };
        v += &r * r.transpose();
    }
    (v, h.nu0 + n as f64)
}

/// Gibbs update of all covariances; non-allocated ones are drawn from the prior.
pub fn update_covariances<R: Rng + ?Sized>(
    data: &Dataset,
    s: &mut MixtureState,
    h: &Hyperparams,
    rng: &mut R,
) -> Result<()> {
    for m in 0..s.m() {
        let (v, nu) = covariance_posterior(data, s, m, h);
        s.covs[m] = sample_iw(&v, nu, rng)?;
    }
    Ok(())
}

/// Log acceptance ratio for replacing the weights by `proposal`, drawn from
/// the Dirichlet full conditional without repulsion.
pub fn weights_log_ratio(s: &MixtureState, proposal: &[f64]) -> f64 {
    if proposal.iter().any(|&w| w <= 0.0) {
        return f64::NEG_INFINITY;
    }
    let two_g = 2.0 * s.gamma;
    scaled_repulsion(two_g, log_pairwise_repulsion(proposal, Convention::ExcludeLast))
        - scaled_repulsion(two_g, log_pairwise_repulsion(&s.weights, Convention::ExcludeLast))
}

/// Independence update of the weights from `Dir(α₀ + n)`.
pub fn update_weights<R: Rng + ?Sized>(
    s: &mut MixtureState,
    h: &Hyperparams,
    counter: &mut Counter,
    rng: &mut R,
) {
    if s.m() == 1 {
        return;
    }
    let alphas: Vec<f64> = s.counts().iter().map(|&n| h.alpha0 + n as f64).collect();
    let proposal = sample_dirichlet(&alphas, rng);
    let ok = accept(weights_log_ratio(s, &proposal), rng);
    counter.record(ok);
    if ok {
        s.weights = proposal;
    }
}

fn gamma_prior_term(h: &Hyperparams, gamma: f64) -> f64 {
    match h.gamma_prior {
        GammaPrior::Gamma { shape, rate } => gamma_log_density(gamma, shape, rate),
        GammaPrior::Fixed(_) => 0.0,
    }
}

/// Log acceptance ratio for `γ → gamma_new` under a log-normal random walk.
pub fn gamma_log_ratio(s: &MixtureState, h: &Hyperparams, gamma_new: f64) -> f64 {
    if !(gamma_new > 0.0) {
        return f64::NEG_INFINITY;
    }
    sdir_term(&s.weights, h.alpha0, gamma_new) - sdir_term(&s.weights, h.alpha0, s.gamma)
        + gamma_prior_term(h, gamma_new)
        - gamma_prior_term(h, s.gamma)
        + gamma_new.ln()
        - s.gamma.ln()
}

/// Log acceptance ratio for `ζ → zeta_new` under a log-normal random walk,
/// with the Gaussian-ensemble terms of every dimension.
pub fn zeta_log_ratio(s: &MixtureState, h: &Hyperparams, zeta_new: f64) -> f64 {
    if !(zeta_new > 0.0) {
        return f64::NEG_INFINITY;
    }
    let prior = |z: f64| match h.zeta_mode {
        ZetaMode::Gamma { shape, rate } => gamma_log_density(z, shape, rate),
        _ => 0.0,
    };
    ge_term(&s.means, zeta_new) - ge_term(&s.means, s.zeta) + prior(zeta_new) - prior(s.zeta)
        + zeta_new.ln()
        - s.zeta.ln()
}

/// Log acceptance ratio for `γ → gamma_new` with `ζ = ρ γ` moving along.
pub fn gamma_tied_log_ratio(s: &MixtureState, h: &Hyperparams, gamma_new: f64, rho: f64) -> f64 {
    if !(gamma_new > 0.0) {
        return f64::NEG_INFINITY;
    }
    gamma_log_ratio(s, h, gamma_new) + ge_term(&s.means, rho * gamma_new)
        - ge_term(&s.means, s.zeta)
}

fn log_normal_step<R: Rng + ?Sized>(x: f64, variance: f64, rng: &mut R) -> f64 {
    let z: f64 = rand_distr::StandardNormal.sample(rng);
    x * (variance.sqrt() * z).exp()
}

pub fn update_gamma<R: Rng + ?Sized>(
    s: &mut MixtureState,
    h: &Hyperparams,
    step: f64,
    counter: &mut Counter,
    rng: &mut R,
) {
    let proposal = log_normal_step(s.gamma, step, rng);
    let ok = accept(gamma_log_ratio(s, h, proposal), rng);
    counter.record(ok);
    if ok {
        s.gamma = proposal;
    }
}

pub fn update_zeta_full_conditional<R: Rng + ?Sized>(
    s: &mut MixtureState,
    h: &Hyperparams,
    step: f64,
    counter: &mut Counter,
    rng: &mut R,
) {
    let proposal = log_normal_step(s.zeta, step, rng);
    let ok = accept(zeta_log_ratio(s, h, proposal), rng);
    counter.record(ok);
    if ok {
        s.zeta = proposal;
    }
}

pub fn update_gamma_ratio_tied<R: Rng + ?Sized>(
    s: &mut MixtureState,
    h: &Hyperparams,
    rho: f64,
    step: f64,
    counter: &mut Counter,
    rng: &mut R,
) {
    let proposal = log_normal_step(s.gamma, step, rng);
    let ok = accept(gamma_tied_log_ratio(s, h, proposal, rho), rng);
    counter.record(ok);
    if ok {
        s.gamma = proposal;
        s.zeta = rho * proposal;
    }
}
