//! The Selberg Dirichlet distribution on the simplex and its generalized,
//! component-specific-concentration variant.
//!
//! The Selberg Dirichlet density with parameters `(α, γ, M)` is
//!
//! ```text
//! SDir(w) = D(α, γ, M)^-1 · Π_m w_m^(α-1) · |Δw|^(2γ),
//! |Δw|    = Π_{1 ≤ i < j ≤ M-1} |w_i - w_j|
//! ```
//!
//! taken with respect to Lebesgue measure on `(w_1, …, w_{M-1})`. The
//! repulsion product runs over the first `M - 1` coordinates only, so the
//! density is symmetric in those coordinates while `w_M` plays a distinct
//! role. In particular the closed-form marginal moments returned by
//! [`sdir_moments`] are the moments of `w_M`.
//!
//! All constants are evaluated in log space through `ln Γ`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{ensure_dim, Error, Result};
use crate::numeric::{ln_gamma, xlogy};

/// Entries of a weight vector must sum to one within this tolerance.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Which pairs enter the pairwise repulsion product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// Pairs among the first `M - 1` coordinates (Selberg Dirichlet).
    ExcludeLast,
    /// Pairs among all `M` coordinates (Gaussian ensemble).
    All,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdirParams {
    alpha: f64,
    gamma: f64,
    m: usize,
}

impl SdirParams {
    pub fn new(alpha: f64, gamma: f64, m: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain("alpha", format!("must be positive, got {alpha}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::domain("gamma", format!("must be non-negative, got {gamma}")));
        }
        if m < 2 {
            return Err(Error::domain("m", format!("must be at least 2, got {m}")));
        }
        Ok(Self { alpha, gamma, m })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `η = αM + (M-1)(M-2)γ`.
    pub fn eta(&self) -> f64 {
        let m = self.m as f64;
        self.alpha * m + (m - 1.0) * (m - 2.0) * self.gamma
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::domain("weights", "empty weight vector"));
        }
        if let Some(bad) = w.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::domain("weights", format!("entry {bad} outside [0, 1]")));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::domain("weights", format!("entries sum to {total}")));
        }
        Ok(Self(w))
    }

    /// Normalizes non-negative entries onto the simplex.
    pub fn from_unnormalized(mut w: Vec<f64>) -> Result<Self> {
        let total: f64 = w.iter().sum();
        if !(total > 0.0 && total.is_finite()) || w.iter().any(|&x| x < 0.0) {
            return Err(Error::domain("weights", "cannot normalize"));
        }
        w.iter_mut().for_each(|x| *x /= total);
        Self::new(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for WeightVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsdirParams {
    alphas: Vec<f64>,
    gamma: f64,
}

impl GsdirParams {
    pub fn new(alphas: Vec<f64>, gamma: f64) -> Result<Self> {
        if alphas.is_empty() || alphas.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::domain("alphas", "all concentrations must be positive"));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::domain("gamma", format!("must be non-negative, got {gamma}")));
        }
        Ok(Self { alphas, gamma })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// `Σ_{i<j} ln|x_i - x_j|` over the pairs selected by `convention`.
///
/// Returns `-inf` as soon as a pair ties exactly. Works for any real vector,
/// so the Gaussian ensemble uses it as well.
pub fn log_pairwise_repulsion(x: &[f64], convention: Convention) -> f64 {
    let k = match convention {
        Convention::ExcludeLast => x.len().saturating_sub(1),
        Convention::All => x.len(),
    };
    let mut out = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            let gap = (x[i] - x[j]).abs();
            if gap == 0.0 {
                return f64::NEG_INFINITY;
            }
            out += gap.ln();
        }
    }
    out
}

/// `exponent * log_rep`, with a zero exponent switching the term off even when
/// the repulsion is `-inf`.
pub(crate) fn scaled_repulsion(exponent: f64, log_rep: f64) -> f64 {
    if exponent == 0.0 {
        0.0
    } else {
        exponent * log_rep
    }
}

/// Shared Selberg product `Σ_{j=1}^{M-1} [ln Γ(α+(j-1)γ) + ln Γ(1+jγ) - ln Γ(1+γ)]`.
fn selberg_product(alpha: f64, gamma: f64, m: usize) -> f64 {
    let lg1 = ln_gamma(1.0 + gamma);
    (1..m)
        .map(|j| {
            let j = j as f64;
            ln_gamma(alpha + (j - 1.0) * gamma) + ln_gamma(1.0 + j * gamma) - lg1
        })
        .sum()
}

/// `ln D(α, γ, M)` without parameter validation. `M = 1` gives zero.
pub(crate) fn log_norm_const_raw(alpha: f64, gamma: f64, m: usize) -> f64 {
    let mf = m as f64;
    ln_gamma(alpha) - ln_gamma(mf * alpha + gamma * (mf - 1.0) * (mf - 2.0))
        + selberg_product(alpha, gamma, m)
}

/// Log normalizing constant `ln D(α, γ, M)`.
pub fn sdir_log_norm_const(p: &SdirParams) -> f64 {
    log_norm_const_raw(p.alpha, p.gamma, p.m)
}

/// Unnormalized log-kernel for any `M ≥ 1` and common concentration.
pub(crate) fn sdir_log_kernel(w: &[f64], alpha: f64, gamma: f64) -> f64 {
    let base: f64 = w.iter().map(|&x| xlogy(alpha - 1.0, x)).sum();
    if base == f64::NEG_INFINITY {
        return base;
    }
    base + scaled_repulsion(
        2.0 * gamma,
        log_pairwise_repulsion(w, Convention::ExcludeLast),
    )
}

pub fn sdir_log_density(w: &WeightVector, p: &SdirParams) -> Result<f64> {
    ensure_dim(p.m, w.len())?;
    Ok(sdir_log_kernel(w.as_slice(), p.alpha, p.gamma) - sdir_log_norm_const(p))
}

/// `ln A(α, β, γ, M)`, the Mehta-type integral in which the last coordinate
/// carries exponent `β - 1` instead of `α - 1`.
pub fn mehta_log_a(alpha: f64, beta: f64, gamma: f64, m: usize) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain("alpha", format!("must be positive, got {alpha}")));
    }
    if !(beta > 0.0) {
        return Err(Error::domain("beta", format!("must be positive, got {beta}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::domain("gamma", format!("must be non-negative, got {gamma}")));
    }
    if m < 2 {
        return Err(Error::domain("m", format!("must be at least 2, got {m}")));
    }
    let mf = m as f64;
    Ok(ln_gamma(beta)
        - ln_gamma(alpha * (mf - 1.0) + beta + (mf - 1.0) * (mf - 2.0) * gamma)
        + selberg_product(alpha, gamma, m))
}

/// Closed-form moments. The marginal quantities refer to `w_M`, the
/// coordinate left out of the repulsion product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdirMoments {
    pub mean: f64,
    /// `E{w_M^k}`.
    pub marginal_k_moment: f64,
    pub second_moment: f64,
    pub variance: f64,
    /// `E{Π_i w_i^k}`.
    pub product_moment_k: f64,
}

pub fn sdir_moments(p: &SdirParams, k: u32) -> SdirMoments {
    let eta = p.eta();
    let a = p.alpha;
    let kf = f64::from(k);
    let mean = a / eta;
    let marginal_k_moment =
        (ln_gamma(a + kf) + ln_gamma(eta) - ln_gamma(a) - ln_gamma(eta + kf)).exp();
    let second_moment = a * (a + 1.0) / ((eta + 1.0) * eta);
    let variance = mean * (1.0 - mean) / (eta + 1.0);
    let product_moment_k =
        (log_norm_const_raw(a + kf, p.gamma, p.m) - sdir_log_norm_const(p)).exp();
    SdirMoments {
        mean,
        marginal_k_moment,
        second_moment,
        variance,
        product_moment_k,
    }
}

/// `E{θ_τ} = D(α, γ + τ/2, M) / D(α, γ, M)` where
/// `θ_τ(w) = |Π_{i<j≤M-1} (w_i - w_j)|^τ`.
pub fn internal_dispersion_expectation(p: &SdirParams, tau: f64) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::domain("tau", format!("must be non-negative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(1.0);
    }
    Ok((log_norm_const_raw(p.alpha, p.gamma + tau / 2.0, p.m) - sdir_log_norm_const(p)).exp())
}

/// Unnormalized generalized Selberg Dirichlet log-density. Its normalizing
/// constant has no closed form and is never needed: every use is a ratio.
pub fn gsdir_log_density_unnorm(w: &WeightVector, p: &GsdirParams) -> Result<f64> {
    ensure_dim(p.alphas.len(), w.len())?;
    Ok(gsdir_log_kernel(w.as_slice(), &p.alphas, p.gamma))
}

pub(crate) fn gsdir_log_kernel(w: &[f64], alphas: &[f64], gamma: f64) -> f64 {
    let base: f64 = w.iter().zip(alphas).map(|(&x, &a)| xlogy(a - 1.0, x)).sum();
    if base == f64::NEG_INFINITY {
        return base;
    }
    base + scaled_repulsion(
        2.0 * gamma,
        log_pairwise_repulsion(w, Convention::ExcludeLast),
    )
}

/// Draws from `Dir(alphas)` by normalizing independent gamma variates.
pub fn sample_dirichlet<R: Rng + ?Sized>(alphas: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let mut g: Vec<f64> = alphas
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
            .collect();
        let total: f64 = g.iter().sum();
        if total > 0.0 && total.is_finite() {
            g.iter_mut().for_each(|x| *x /= total);
            return g;
        }
    }
}

/// Tuning for [`sample_sdir_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SdirSamplerOptions {
    pub burn_in: usize,
    pub thin: usize,
    /// Adds a sweep of pairwise-exchange moves after each independence
    /// proposal. Independence proposals alone stall once the repulsion term
    /// dominates (large `γ` or `M`).
    pub pair_moves: bool,
}

impl Default for SdirSamplerOptions {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            thin: 5,
            pair_moves: true,
        }
    }
}

/// Draws `n` Selberg Dirichlet vectors with the default options.
pub fn sample_sdir<R: Rng + ?Sized>(p: &SdirParams, n: usize, rng: &mut R) -> Vec<WeightVector> {
    sample_sdir_with(p, n, SdirSamplerOptions::default(), rng)
}

/// MCMC sampler for `SDir(α, γ, M)`.
///
/// Each iteration makes an independence Metropolis–Hastings proposal from
/// `Dir(α)`, accepted with probability `min(1, |Δw⁺|^{2γ} / |Δw⁻|^{2γ})`,
/// optionally followed by `M` pairwise moves that redistribute the mass of two
/// random coordinates uniformly. With `γ = 0` the draws are exact i.i.d.
/// Dirichlet samples.
pub fn sample_sdir_with<R: Rng + ?Sized>(
    p: &SdirParams,
    n: usize,
    opts: SdirSamplerOptions,
    rng: &mut R,
) -> Vec<WeightVector> {
    let alphas = vec![p.alpha; p.m];
    if p.gamma == 0.0 {
        return (0..n)
            .map(|_| WeightVector(sample_dirichlet(&alphas, rng)))
            .collect();
    }
    let thin = opts.thin.max(1);
    let mut chain = SdirChain::new(*p, rng);
    for _ in 0..opts.burn_in {
        chain.step(opts.pair_moves, rng);
    }
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        for _ in 0..thin {
            chain.step(opts.pair_moves, rng);
        }
        out.push(WeightVector(chain.w.clone()));
    }
    out
}

struct SdirChain {
    p: SdirParams,
    alphas: Vec<f64>,
    w: Vec<f64>,
    log_rep: f64,
}

impl SdirChain {
    fn new<R: Rng + ?Sized>(p: SdirParams, rng: &mut R) -> Self {
        let alphas = vec![p.alpha; p.m];
        loop {
            let w = sample_dirichlet(&alphas, rng);
            let log_rep = log_pairwise_repulsion(&w, Convention::ExcludeLast);
            if log_rep.is_finite() && w.iter().all(|&x| x > 0.0) {
                return Self {
                    p,
                    alphas,
                    w,
                    log_rep,
                };
            }
        }
    }

    fn step<R: Rng + ?Sized>(&mut self, pair_moves: bool, rng: &mut R) {
        let two_gamma = 2.0 * self.p.gamma;
        let proposal = sample_dirichlet(&self.alphas, rng);
        let rep = log_pairwise_repulsion(&proposal, Convention::ExcludeLast);
        if rep.is_finite() && rng.random::<f64>().ln() < two_gamma * (rep - self.log_rep) {
            self.w = proposal;
            self.log_rep = rep;
        }
        if !pair_moves {
            return;
        }
        let m = self.p.m;
        let am1 = self.p.alpha - 1.0;
        for _ in 0..m {
            let i = rng.random_range(0..m);
            let mut j = rng.random_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            let total = self.w[i] + self.w[j];
            let u: f64 = rng.random();
            let (wi, wj) = (total * u, total * (1.0 - u));
            if wi <= 0.0 || wj <= 0.0 {
                continue;
            }
            let (old_i, old_j) = (self.w[i], self.w[j]);
            self.w[i] = wi;
            self.w[j] = wj;
            let rep = log_pairwise_repulsion(&self.w, Convention::ExcludeLast);
            let log_ratio = am1 * (wi.ln() + wj.ln() - old_i.ln() - old_j.ln())
                + two_gamma * (rep - self.log_rep);
            if rep.is_finite() && rng.random::<f64>().ln() < log_ratio {
                self.log_rep = rep;
            } else {
                self.w[i] = old_i;
                self.w[j] = old_j;
            }
        }
    }
}
