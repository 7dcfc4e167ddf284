//! Mixture state, hyperparameters and the complete-data joint density of the
//! repulsive Gaussian mixture.
//!
//! The hierarchy is
//!
//! ```text
//! y_i | c_i            ~ N(μ_{c_i}, Σ_{c_i})
//! μ_{1:M,d}            ~ GE(M, ζ)           for each dimension d
//! Σ_m                  ~ IW(V₀, ν₀)
//! c_i | w              ~ Categorical(w)
//! w                    ~ SDir(α₀, γ, M)
//! M                    ~ Poi₁(λ)            (M - 1 ~ Poisson(λ))
//! γ, ζ                 ~ Gamma hyperpriors, fixed values, or ζ = ργ
//! ```
//!
//! Labels are internal zero-based indices `0..M`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};

use crate::ensemble;
use crate::error::{ensure_dim, Error, Result};
use crate::numeric::{gamma_log_density, ln_gamma, log_sum_exp, xlogy};
use crate::selberg;
use crate::wishart::{iw_log_density, Gaussian};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    rows: Vec<DVector<f64>>,
}

impl Dataset {
    /// Builds a dataset from observation rows. Requires at least one row.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::domain("data", "no observations"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::domain("data", "observations have no columns"));
        }
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            ensure_dim(dim, row.len())?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain("data", "non-finite entry"));
            }
            out.push(DVector::from_vec(row));
        }
        Ok(Self { dim, rows: out })
    }

    /// A dataset with no observations, used to run the sampler on the prior.
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[DVector<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &DVector<f64> {
        &self.rows[i]
    }

    /// Copy with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            rows: self.rows.iter().map(|r| r * factor).collect(),
        }
    }
}

/// Prior on the weight repulsion `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaPrior {
    Fixed(f64),
    Gamma { shape: f64, rate: f64 },
}

impl GammaPrior {
    /// Fixed value, or the prior mean used as the starting point.
    pub fn initial(&self) -> f64 {
        match *self {
            GammaPrior::Fixed(v) => v,
            GammaPrior::Gamma { shape, rate } => shape / rate,
        }
    }
}

/// Treatment of the location repulsion `ζ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaMode {
    Fixed(f64),
    Gamma { shape: f64, rate: f64 },
    /// `ζ = ρ γ`, updated jointly with `γ`.
    Ratio { rho: f64 },
}

impl ZetaMode {
    /// Starting value of `ζ` given the starting `γ`.
    pub fn initial(&self, gamma: f64) -> f64 {
        match *self {
            ZetaMode::Fixed(v) => v,
            ZetaMode::Gamma { shape, rate } => shape / rate,
            ZetaMode::Ratio { rho } => rho * gamma,
        }
    }
}

/// Scatter matrix used in the covariance full conditional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceUpdate {
    /// `Σ_i (y_i - μ_m)(y_i - μ_m)ᵀ`, the conditional of the model.
    #[default]
    Centered,
    /// `Σ_i y_i y_iᵀ`, reproducing the uncentered scatter literally.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub alpha0: f64,
    pub lambda: f64,
    pub v0: DMatrix<f64>,
    pub nu0: f64,
    pub gamma_prior: GammaPrior,
    pub zeta_mode: ZetaMode,
    /// Birth probability when a death is possible.
    pub q: f64,
    /// Variance of the Gaussian random-walk proposal on means.
    pub step_mu: f64,
    /// Variance of the log-normal proposal on `γ` (and `ζ`).
    pub step_gamma: f64,
    pub covariance_update: CovarianceUpdate,
    pub burn_in: usize,
    pub thin: usize,
    pub n_samples: usize,
    /// Adapt proposal scales during burn-in.
    pub adapt: bool,
}

impl Hyperparams {
    /// Settings used for the synthetic benchmark: `α₀ = 1`, `λ = 3`,
    /// `IW(I_D, 2)`, `q = 0.5`, `γ = 0`, `ζ = 0.1`, 5000 retained draws after
    /// 5000 burn-in with thinning 10.
    pub fn new(dim: usize) -> Self {
        Self {
            alpha0: 1.0,
            lambda: 3.0,
            v0: DMatrix::identity(dim, dim),
            nu0: 2.0,
            gamma_prior: GammaPrior::Fixed(0.0),
            zeta_mode: ZetaMode::Fixed(0.1),
            q: 0.5,
            step_mu: 0.25,
            step_gamma: 0.25,
            covariance_update: CovarianceUpdate::Centered,
            burn_in: 5000,
            thin: 10,
            n_samples: 5000,
            adapt: true,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(name, format!("must be positive, got {v}")))
            }
        };
        pos("alpha0", self.alpha0)?;
        pos("lambda", self.lambda)?;
        pos("step_mu", self.step_mu)?;
        pos("step_gamma", self.step_gamma)?;
        ensure_dim(dim, self.v0.nrows())?;
        ensure_dim(dim, self.v0.ncols())?;
        if nalgebra::Cholesky::new(self.v0.clone()).is_none() {
            return Err(Error::NotPositiveDefinite {
                context: "v0".into(),
            });
        }
        if !(self.nu0 > dim as f64 - 1.0) {
            return Err(Error::domain("nu0", format!("must exceed D - 1, got {}", self.nu0)));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::domain("q", format!("must lie in (0, 1), got {}", self.q)));
        }
        match self.gamma_prior {
            GammaPrior::Fixed(v) => {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::domain("gamma", format!("must be non-negative, got {v}")));
                }
            }
            GammaPrior::Gamma { shape, rate } => {
                pos("gamma_shape", shape)?;
                pos("gamma_rate", rate)?;
            }
        }
        match self.zeta_mode {
            ZetaMode::Fixed(v) => pos("zeta", v)?,
            ZetaMode::Gamma { shape, rate } => {
                pos("zeta_shape", shape)?;
                pos("zeta_rate", rate)?;
            }
            ZetaMode::Ratio { rho } => {
                pos("rho", rho)?;
                if matches!(self.gamma_prior, GammaPrior::Fixed(_)) {
                    return Err(Error::domain(
                        "zeta_mode",
                        "the ratio mode needs a hyperprior on gamma",
                    ));
                }
            }
        }
        if self.thin == 0 || self.n_samples == 0 {
            return Err(Error::domain("thin", "thin and n_samples must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState {
    pub weights: Vec<f64>,
    /// One `D`-vector per component.
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
    /// Zero-based component label per observation.
    pub alloc: Vec<usize>,
    pub gamma: f64,
    pub zeta: f64,
}

impl MixtureState {
    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, |m| m.len())
    }

    /// Number of observations per component.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.m()];
        for &c in &self.alloc {
            counts[c] += 1;
        }
        counts
    }

    pub fn m_allocated(&self) -> usize {
        self.counts().iter().filter(|&&n| n > 0).count()
    }

    pub fn m_non_allocated(&self) -> usize {
        self.m() - self.m_allocated()
    }

    /// Means along dimension `d` for all components.
    pub fn means_along(&self, d: usize) -> Vec<f64> {
        self.means.iter().map(|mu| mu[d]).collect()
    }

    pub fn validate(&self, data: &Dataset) -> Result<()> {
        let m = self.m();
        if m == 0 {
            return Err(Error::domain("state", "no components"));
        }
        ensure_dim(m, self.means.len())?;
        ensure_dim(m, self.covs.len())?;
        ensure_dim(data.n(), self.alloc.len())?;
        for mu in &self.means {
            ensure_dim(data.dim(), mu.len())?;
        }
        if self.alloc.iter().any(|&c| c >= m) {
            return Err(Error::domain("alloc", "label out of range"));
        }
        selberg::WeightVector::new(self.weights.clone())?;
        for (k, cov) in self.covs.iter().enumerate() {
            if nalgebra::Cholesky::new(cov.clone()).is_none() {
                return Err(Error::NotPositiveDefinite {
                    context: format!("covariance of component {k}"),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn gaussians(&self) -> Result<Vec<Gaussian>> {
        self.means
            .iter()
            .zip(&self.covs)
            .map(|(mu, cov)| Gaussian::new(mu.clone(), cov))
            .collect()
    }
}

/// `ln Poi₁(m | λ)`, i.e. `ln Poisson(m - 1 | λ)`; `-inf` for `m < 1`.
pub fn poi1_log_pmf(m: usize, lambda: f64) -> f64 {
    if m < 1 {
        return f64::NEG_INFINITY;
    }
    let k = (m - 1) as f64;
    xlogy(k, lambda) - lambda - ln_gamma(k + 1.0)
}

/// Mixture log-likelihood `Σ_i ln Σ_m w_m N(y_i | μ_m, Σ_m)`.
pub fn log_likelihood(data: &Dataset, s: &MixtureState) -> Result<f64> {
    let comps = s.gaussians()?;
    let log_w: Vec<f64> = s.weights.iter().map(|w| w.ln()).collect();
    let mut buf = vec![0.0; s.m()];
    let mut total = 0.0;
    for y in data.rows() {
        for (k, g) in comps.iter().enumerate() {
            buf[k] = log_w[k] + g.log_pdf(y);
        }
        total += log_sum_exp(&buf);
    }
    Ok(total)
}

/// SDir log-density for any `M ≥ 1`; `M = 1` is the point mass at `w = (1)`.
pub(crate) fn sdir_term(w: &[f64], alpha0: f64, gamma: f64) -> f64 {
    if w.len() == 1 {
        return 0.0;
    }
    selberg::sdir_log_kernel(w, alpha0, gamma)
        - selberg::log_norm_const_raw(alpha0, gamma, w.len())
}

/// `Σ_d ln GE(μ_{1:M,d} | M, ζ)`.
pub(crate) fn ge_term(means: &[DVector<f64>], zeta: f64) -> f64 {
    let m = means.len();
    let dim = means.first().map_or(0, |v| v.len());
    let log_g = ensemble::log_norm_const_raw(zeta, m);
    (0..dim)
        .map(|d| {
            let x: Vec<f64> = means.iter().map(|mu| mu[d]).collect();
            ensemble::ge_log_kernel(&x, zeta) - log_g
        })
        .sum()
}

/// Joint log-density of data, allocations and every parameter.
pub fn log_complete_joint(data: &Dataset, s: &MixtureState, h: &Hyperparams) -> Result<f64> {
    let comps = s.gaussians()?;
    let counts = s.counts();
    let mut total = 0.0;
    for (y, &c) in data.rows().iter().zip(&s.alloc) {
        total += comps[c].log_pdf(y);
    }
    total += ge_term(&s.means, s.zeta);
    for cov in &s.covs {
        total += iw_log_density(cov, &h.v0, h.nu0)?;
    }
    for (&n, &w) in counts.iter().zip(&s.weights) {
        total += xlogy(n as f64, w);
    }
    total += sdir_term(&s.weights, h.alpha0, s.gamma);
    total += poi1_log_pmf(s.m(), h.lambda);
    if let GammaPrior::Gamma { shape, rate } = h.gamma_prior {
        total += gamma_log_density(s.gamma, shape, rate);
    }
    if let ZetaMode::Gamma { shape, rate } = h.zeta_mode {
        total += gamma_log_density(s.zeta, shape, rate);
    }
    Ok(total)
}

/// Ground truth of the synthetic five-component benchmark.
pub struct Benchmark {
    pub weights: [f64; 5],
    pub means: [[f64; 2]; 5],
    pub covs: [[[f64; 2]; 2]; 5],
}

pub const BENCHMARK: Benchmark = Benchmark {
    weights: [0.2, 0.2, 0.2, 0.3, 0.1],
    means: [[-3.0, -2.5], [-3.0, 3.0], [3.0, -3.0], [3.0, 3.0], [-1.0, 0.0]],
    covs: [
        [[3.0, 1.0], [1.0, 3.0]],
        [[3.0, 1.0], [1.0, 3.0]],
        [[3.0, 1.0], [1.0, 3.0]],
        [[3.0, 1.0], [1.0, 3.0]],
        [[0.25, 0.0], [0.0, 0.25]],
    ],
};

pub const BENCHMARK_N: usize = 300;

/// Simulates the 300-point, five-component bivariate benchmark. Returns the
/// dataset and zero-based true labels. Uses `ChaCha20Rng::seed_from_u64(seed)`.
pub fn simulate_benchmark(seed: u64) -> (Dataset, Vec<usize>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let picker = WeightedIndex::new(BENCHMARK.weights).expect("valid weights");
    let factors: Vec<DMatrix<f64>> = BENCHMARK
        .covs
        .iter()
        .map(|c| {
            let m = DMatrix::from_row_slice(2, 2, &[c[0][0], c[0][1], c[1][0], c[1][1]]);
            nalgebra::Cholesky::new(m).expect("SPD").unpack()
        })
        .collect();
    let mut rows = Vec::with_capacity(BENCHMARK_N);
    let mut labels = Vec::with_capacity(BENCHMARK_N);
    for _ in 0..BENCHMARK_N {
        let k = picker.sample(&mut rng);
        let z = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &factors[k] * z + DVector::from_row_slice(&BENCHMARK.means[k]);
        rows.push(y.iter().copied().collect());
        labels.push(k);
    }
    (Dataset::new(rows).expect("finite draws"), labels)
}
