//! Posterior sampler: Gibbs and Metropolis–Hastings updates within a fixed
//! number of components, plus a birth–death move over empty components.

mod birth_death;
mod steps;

use nalgebra::DVector;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::analysis::{PosteriorTrace, TraceSample};
use crate::ensemble::{sample_ge_one, GeParams};
use crate::error::{Error, Result};
use crate::model::{Dataset, GammaPrior, Hyperparams, MixtureState, ZetaMode};
use crate::selberg::sample_dirichlet;
use crate::wishart::sample_iw;

pub use birth_death::{
    apply_birth, apply_death, birth_death_step, birth_log_ratio, death_log_ratio, propose_birth,
    propose_death, BirthProposal, DeathProposal,
};
pub use steps::{
    allocation_probabilities, covariance_posterior, gamma_log_ratio, gamma_tied_log_ratio,
    mean_log_ratio, nonallocated_mean_log_ratio, update_allocations, update_covariances,
    update_gamma, update_gamma_ratio_tied, update_means, update_weights,
    update_zeta_full_conditional, weights_log_ratio, zeta_log_ratio,
};

const ADAPT_EVERY: usize = 50;
const TARGET_LOW: f64 = 0.2;
const TARGET_HIGH: f64 = 0.4;

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub hyper: Hyperparams,
    pub seed: u64,
    pub record_weights: bool,
}

impl SamplerConfig {
    pub fn new(hyper: Hyperparams, seed: u64) -> Self {
        Self {
            hyper,
            seed,
            record_weights: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counter {
    pub proposed: u64,
    pub accepted: u64,
}

impl Counter {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    /// Acceptance rate, zero when nothing was proposed.
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepDiagnostics {
    pub means: Counter,
    pub weights: Counter,
    pub gamma: Counter,
    pub zeta: Counter,
    pub birth: Counter,
    pub death: Counter,
    pub m: usize,
    pub m_a: usize,
}

/// Starting state: `round(λ) + 1` components with means at jittered data rows
/// (prior draws when there is no data), covariances `V₀`, Dirichlet weights and
/// nearest-mean allocations.
pub fn initial_state<R: Rng + ?Sized>(data: &Dataset, h: &Hyperparams, rng: &mut R) -> Result<MixtureState> {
    let m = h.lambda.round() as usize + 1;
    let dim = data.dim();
    let gamma = h.gamma_prior.initial();
    let zeta = h.zeta_mode.initial(gamma);
    let means: Vec<DVector<f64>> = if data.n() == 0 {
        let ge = GeParams::new(zeta, m)?;
        let cols: Vec<Vec<f64>> = (0..dim).map(|_| sample_ge_one(&ge, rng).into_inner()).collect();
        (0..m).map(|k| DVector::from_fn(dim, |d, _| cols[d][k])).collect()
    } else {
        let jitter = Normal::new(0.0, 1e-3).expect("valid scale");
        let rows: Vec<usize> = if m <= data.n() {
            sample_indices(rng, data.n(), m).into_vec()
        } else {
            (0..m).map(|_| rng.random_range(0..data.n())).collect()
        };
        rows.iter()
            .map(|&i| data.row(i).map(|v| v + jitter.sample(rng)))
            .collect()
    };
    let covs = if data.n() == 0 {
        (0..m).map(|_| sample_iw(&h.v0, h.nu0, rng)).collect::<Result<_>>()?
    } else {
        vec![h.v0.clone(); m]
    };
    let alloc = data
        .rows()
        .iter()
        .map(|y| {
            (0..m)
                .min_by(|&a, &b| (y - &means[a]).norm_squared().total_cmp(&(y - &means[b]).norm_squared()))
                .expect("at least one component")
        })
        .collect();
    Ok(MixtureState {
        weights: sample_dirichlet(&vec![h.alpha0; m], rng),
        means,
        covs,
        alloc,
        gamma,
        zeta,
    })
}

struct Tuning {
    step_mu: f64,
    step_gamma: f64,
    step_zeta: f64,
    window: StepDiagnostics,
}

fn adapt(step: &mut f64, now: Counter, before: Counter) {
    let proposed = now.proposed - before.proposed;
    if proposed == 0 {
        return;
    }
    let rate = (now.accepted - before.accepted) as f64 / proposed as f64;
    if rate < TARGET_LOW {
        *step *= 0.7;
    } else if rate > TARGET_HIGH {
        *step *= 1.4;
    }
}

fn sweep<R: Rng + ?Sized>(
    data: &Dataset,
    s: &mut MixtureState,
    h: &Hyperparams,
    tuning: &Tuning,
    diag: &mut StepDiagnostics,
    rng: &mut R,
) -> Result<()> {
    update_allocations(data, s, rng)?;
    update_means(data, s, tuning.step_mu, &mut diag.means, rng)?;
    update_covariances(data, s, h, rng)?;
    update_weights(s, h, &mut diag.weights, rng);
    match (h.gamma_prior, h.zeta_mode) {
        (GammaPrior::Gamma { .. }, ZetaMode::Ratio { rho }) => {
            update_gamma_ratio_tied(s, h, rho, tuning.step_gamma, &mut diag.gamma, rng)
        }
        (gp, zm) => {
            if let GammaPrior::Gamma { .. } = gp {
                update_gamma(s, h, tuning.step_gamma, &mut diag.gamma, rng);
            }
            if let ZetaMode::Gamma { .. } = zm {
                update_zeta_full_conditional(s, h, tuning.step_zeta, &mut diag.zeta, rng);
            }
        }
    }
    birth_death_step(s, h, diag, rng)
}

/// Runs one chain and returns the retained draws and acceptance counts.
pub fn run_sampler(data: &Dataset, config: &SamplerConfig) -> Result<(PosteriorTrace, StepDiagnostics)> {
    let h = &config.hyper;
    h.validate(data.dim())?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut s = initial_state(data, h, &mut rng)?;
    let mut diag = StepDiagnostics::default();
    let mut tuning = Tuning {
        step_mu: h.step_mu,
        step_gamma: h.step_gamma,
        step_zeta: h.step_gamma,
        window: StepDiagnostics::default(),
    };
    let total = h.burn_in + h.thin * h.n_samples;
    let mut samples = Vec::with_capacity(h.n_samples);
    for t in 0..total {
        sweep(data, &mut s, h, &tuning, &mut diag, &mut rng).map_err(|e| Error::Sweep {
            sweep: t + 1,
            source: Box::new(e),
        })?;
        if h.adapt && t < h.burn_in && (t + 1) % ADAPT_EVERY == 0 {
            adapt(&mut tuning.step_mu, diag.means, tuning.window.means);
            adapt(&mut tuning.step_gamma, diag.gamma, tuning.window.gamma);
            adapt(&mut tuning.step_zeta, diag.zeta, tuning.window.zeta);
            tuning.window = diag.clone();
        }
        if t >= h.burn_in && (t + 1 - h.burn_in) % h.thin == 0 {
            let m_a = s.m_allocated();
            samples.push(TraceSample {
                m: s.m(),
                m_a,
                alloc: s.alloc.clone(),
                gamma: s.gamma,
                zeta: s.zeta,
                weights: config.record_weights.then(|| s.weights.clone()),
            });
        }
    }
    diag.m = s.m();
    diag.m_a = s.m_allocated();
    Ok((PosteriorTrace::new(samples), diag))
}
