use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{ge_term, poi1_log_pmf, sdir_term, Hyperparams, MixtureState};
use crate::numeric::{dirichlet_log_density, xlogy};
use crate::sampler::steps::accept;
use crate::sampler::StepDiagnostics;
use crate::selberg::sample_dirichlet;
use crate::wishart::sample_iw;

/// A new empty component inserted at label `position`, together with the
/// full weight vector of the enlarged state.
#[derive(Debug, Clone)]
pub struct BirthProposal {
    pub position: usize,
    pub weights: Vec<f64>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Removal of the empty component `index`, with the weights of the reduced state.
#[derive(Debug, Clone)]
pub struct DeathProposal {
    pub index: usize,
    pub weights: Vec<f64>,
}

fn posterior_alphas(s: &MixtureState, alpha0: f64) -> Vec<f64> {
    s.counts().iter().map(|&n| alpha0 + n as f64).collect()
}

fn birth_probability(s: &MixtureState, q: f64) -> f64 {
    if s.m_non_allocated() == 0 {
        1.0
    } else {
        q
    }
}

pub fn propose_birth<R: Rng + ?Sized>(
    s: &MixtureState,
    h: &Hyperparams,
    rng: &mut R,
) -> Result<BirthProposal> {
    let position = rng.random_range(0..=s.m());
    let mut alphas = posterior_alphas(s, h.alpha0);
    alphas.insert(position, h.alpha0);
    let weights = sample_dirichlet(&alphas, rng);
    let normal = Normal::new(0.0, (1.0 / s.zeta).sqrt())
        .map_err(|e| Error::domain("zeta", e.to_string()))?;
    let mean = DVector::from_fn(s.dim(), |_, _| normal.sample(rng));
    let cov = sample_iw(&h.v0, h.nu0, rng)?;
    Ok(BirthProposal {
        position,
        weights,
        mean,
        cov,
    })
}

pub fn apply_birth(s: &MixtureState, b: &BirthProposal) -> MixtureState {
    let mut out = s.clone();
    out.weights = b.weights.clone();
    out.means.insert(b.position, b.mean.clone());
    out.covs.insert(b.position, b.cov.clone());
    for c in out.alloc.iter_mut() {
        if *c >= b.position {
            *c += 1;
        }
    }
    out
}

/// Picks an empty component uniformly; `None` when every component is allocated.
pub fn propose_death<R: Rng + ?Sized>(
    s: &MixtureState,
    h: &Hyperparams,
    rng: &mut R,
) -> Option<DeathProposal> {
    let counts = s.counts();
    let empty: Vec<usize> = (0..s.m()).filter(|&k| counts[k] == 0).collect();
    if empty.is_empty() {
        return None;
    }
    let index = empty[rng.random_range(0..empty.len())];
    let mut alphas: Vec<f64> = counts.iter().map(|&n| h.alpha0 + n as f64).collect();
    alphas.remove(index);
    let weights = if alphas.is_empty() {
        Vec::new()
    } else {
        sample_dirichlet(&alphas, rng)
    };
    Some(DeathProposal { index, weights })
}

pub fn apply_death(s: &MixtureState, d: &DeathProposal) -> MixtureState {
    let mut out = s.clone();
    out.weights = d.weights.clone();
    out.means.remove(d.index);
    out.covs.remove(d.index);
    for c in out.alloc.iter_mut() {
        if *c > d.index {
            *c -= 1;
        }
    }
    out
}

/// Log acceptance ratio for moving from `small` to `big`, where `big` equals
/// `small` with an empty component inserted at `position` and new weights.
/// The covariance of the new component is proposed from its prior and cancels.
fn transdimensional_log_ratio(
    small: &MixtureState,
    big: &MixtureState,
    position: usize,
    h: &Hyperparams,
) -> f64 {
    if small.m() == 0 || big.weights.iter().chain(&small.weights).any(|&w| w <= 0.0) {
        return f64::NEG_INFINITY;
    }
    let (m, zeta) = (small.m() as f64, small.zeta);
    let a_small = posterior_alphas(small, h.alpha0);
    let a_big = posterior_alphas(big, h.alpha0);
    let categorical = |s: &MixtureState| -> f64 {
        s.counts()
            .iter()
            .zip(&s.weights)
            .map(|(&n, &w)| xlogy(n as f64, w))
            .sum()
    };
    let target = sdir_term(&big.weights, h.alpha0, big.gamma)
        - sdir_term(&small.weights, h.alpha0, small.gamma)
        + categorical(big)
        - categorical(small)
        + ge_term(&big.means, zeta)
        - ge_term(&small.means, zeta)
        + poi1_log_pmf(big.m(), h.lambda)
        - poi1_log_pmf(small.m(), h.lambda);
    let new_mean_density: f64 = big.means[position]
        .iter()
        .map(|&x| 0.5 * (zeta / (2.0 * std::f64::consts::PI)).ln() - 0.5 * zeta * x * x)
        .sum();
    let proposal = dirichlet_log_density(&small.weights, &a_small)
        - dirichlet_log_density(&big.weights, &a_big)
        - new_mean_density;
    let moves = (1.0 - h.q).ln() - birth_probability(small, h.q).ln()
        - (big.m_non_allocated() as f64).ln()
        + (m + 1.0).ln();
    target + proposal + moves
}

pub fn birth_log_ratio(s: &MixtureState, b: &BirthProposal, h: &Hyperparams) -> f64 {
    transdimensional_log_ratio(s, &apply_birth(s, b), b.position, h)
}

pub fn death_log_ratio(s: &MixtureState, d: &DeathProposal, h: &Hyperparams) -> f64 {
    if s.m() < 2 {
        return f64::NEG_INFINITY;
    }
    -transdimensional_log_ratio(&apply_death(s, d), s, d.index, h)
}

/// Birth with probability `q`, or always when no component is empty; death otherwise.
pub fn birth_death_step<R: Rng + ?Sized>(
    s: &mut MixtureState,
    h: &Hyperparams,
    diag: &mut StepDiagnostics,
    rng: &mut R,
) -> Result<()> {
    let birth = s.m_non_allocated() == 0 || rng.random::<f64>() < h.q;
    if birth {
        let b = propose_birth(s, h, rng)?;
        let ok = accept(birth_log_ratio(s, &b, h), rng);
        diag.birth.record(ok);
        if ok {
            *s = apply_birth(s, &b);
        }
    } else if let Some(d) = propose_death(s, h, rng) {
        let ok = accept(death_log_ratio(s, &d, h), rng);
        diag.death.record(ok);
        if ok {
            *s = apply_death(s, &d);
        }
    }
    Ok(())
}
