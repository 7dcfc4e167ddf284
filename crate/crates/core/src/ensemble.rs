//! Gaussian ensemble prior on one coordinate of the component locations:
//!
//! ```text
//! GE(x | M, ζ) = G(M, ζ)^-1 · Π_m exp(-ζ x_m² / 2) · |Δx|^ζ,   Δx over all M entries
//! ```
//!
//! This is the β-Hermite eigenvalue law with `β = ζ` rescaled by `1/√ζ`, which
//! gives both the closed-form constant and an exact sampler.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{ensure_dim, Error, Result};
use crate::numeric::ln_gamma;
use crate::selberg::{log_pairwise_repulsion, Convention};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeParams {
    zeta: f64,
    m: usize,
}

impl GeParams {
    pub fn new(zeta: f64, m: usize) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::domain("zeta", format!("must be positive, got {zeta}")));
        }
        if m < 1 {
            return Err(Error::domain("m", "must be at least 1"));
        }
        Ok(Self { zeta, m })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// Component locations along one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationVector(Vec<f64>);

impl LocationVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("locations", "entries must be finite"));
        }
        Ok(Self(x))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for LocationVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn log_norm_const_raw(zeta: f64, m: usize) -> f64 {
    let mf = m as f64;
    let half = zeta / 2.0;
    let lg = ln_gamma(1.0 + half);
    let prod: f64 = (0..m)
        .map(|j| ln_gamma(1.0 + (j as f64 + 1.0) * half) - lg)
        .sum();
    -(mf / 2.0 + zeta * mf * (mf - 1.0) / 4.0) * zeta.ln()
        + mf / 2.0 * (2.0 * std::f64::consts::PI).ln()
        + prod
}

/// `ln G(M, ζ)`.
pub fn ge_log_norm_const(p: &GeParams) -> f64 {
    log_norm_const_raw(p.zeta, p.m)
}

pub(crate) fn ge_log_kernel(x: &[f64], zeta: f64) -> f64 {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    let rep = log_pairwise_repulsion(x, Convention::All);
    if rep == f64::NEG_INFINITY {
        return rep;
    }
    -0.5 * zeta * sq + zeta * rep
}

pub fn ge_log_density(x: &[f64], p: &GeParams) -> Result<f64> {
    ensure_dim(p.m, x.len())?;
    Ok(ge_log_kernel(x, p.zeta) - ge_log_norm_const(p))
}

/// One exact draw: eigenvalues of the β-Hermite tridiagonal matrix with
/// `β = ζ`, divided by `√ζ` and returned in random order.
pub fn sample_ge_one<R: Rng + ?Sized>(p: &GeParams, rng: &mut R) -> LocationVector {
    let m = p.m;
    let scale = p.zeta.sqrt();
    if m == 1 {
        let z: f64 = StandardNormal.sample(rng);
        return LocationVector(vec![z / scale]);
    }
    let mut h = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        h[(i, i)] = StandardNormal.sample(rng);
    }
    for i in 0..m - 1 {
        let dof = (m - 1 - i) as f64 * p.zeta;
        let chi = ChiSquared::new(dof).expect("positive dof").sample(rng).sqrt();
        let off = chi / std::f64::consts::SQRT_2;
        h[(i, i + 1)] = off;
        h[(i + 1, i)] = off;
    }
    let mut x: Vec<f64> = h
        .symmetric_eigenvalues()
        .iter()
        .map(|ev| ev / scale)
        .collect();
    x.shuffle(rng);
    LocationVector(x)
}

pub fn sample_ge<R: Rng + ?Sized>(p: &GeParams, n: usize, rng: &mut R) -> Vec<LocationVector> {
    (0..n).map(|_| sample_ge_one(p, rng)).collect()
}
