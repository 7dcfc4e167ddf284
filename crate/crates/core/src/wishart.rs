//! Inverse-Wishart density and sampling, plus the multivariate normal helper
//! used by the component likelihoods.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numeric::ln_multi_gamma;

const JITTER: f64 = 1e-10;

/// Cholesky factorization, retried once with `1e-10 · I` added to the diagonal.
pub fn cholesky_with_jitter(a: &DMatrix<f64>, context: &str) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok(c);
    }
    let n = a.nrows();
    Cholesky::new(a + DMatrix::<f64>::identity(n, n) * JITTER).ok_or_else(|| {
        Error::NotPositiveDefinite {
            context: context.to_string(),
        }
    })
}

fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Multivariate normal with a cached Cholesky factor.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(cov.clone()).ok_or_else(|| Error::NotPositiveDefinite {
            context: "component covariance".into(),
        })?;
        let d = mean.len() as f64;
        let log_norm = -0.5 * d * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det(&chol);
        Ok(Self {
            mean,
            chol,
            log_norm,
        })
    }

    pub fn log_pdf(&self, y: &DVector<f64>) -> f64 {
        self.log_pdf_at(y, &self.mean)
    }

    /// Log-density with the mean replaced by `mean`, reusing the covariance factor.
    pub fn log_pdf_at(&self, y: &DVector<f64>, mean: &DVector<f64>) -> f64 {
        let diff = y - mean;
        let z = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("non-singular factor");
        self.log_norm - 0.5 * z.norm_squared()
    }
}

/// `ln IW(Σ | V, ν)` for `Σ, V` of size `D × D`.
pub fn iw_log_density(sigma: &DMatrix<f64>, v: &DMatrix<f64>, nu: f64) -> Result<f64> {
    let d = sigma.nrows();
    let cs = Cholesky::new(sigma.clone()).ok_or_else(|| Error::NotPositiveDefinite {
        context: "covariance in inverse-Wishart density".into(),
    })?;
    let cv = Cholesky::new(v.clone()).ok_or_else(|| Error::NotPositiveDefinite {
        context: "inverse-Wishart scale".into(),
    })?;
    let df = d as f64;
    let trace = (cs.inverse() * v).trace();
    Ok(0.5 * nu * log_det(&cv)
        - 0.5 * nu * df * 2f64.ln()
        - ln_multi_gamma(d, nu / 2.0)
        - 0.5 * (nu + df + 1.0) * log_det(&cs)
        - 0.5 * trace)
}

/// Draws `Σ ~ IW(V, ν)` by inverting a Bartlett-decomposed Wishart draw with
/// scale `V⁻¹`.
pub fn sample_iw<R: Rng + ?Sized>(v: &DMatrix<f64>, nu: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let d = v.nrows();
    if !(nu > d as f64 - 1.0) {
        return Err(Error::domain("nu", format!("must exceed D - 1 = {}, got {nu}", d - 1)));
    }
    let scale_inv = cholesky_with_jitter(v, "inverse-Wishart scale")?.inverse();
    let l = cholesky_with_jitter(&scale_inv, "inverse-Wishart scale inverse")?.unpack();
    let mut a = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        let dof = nu - i as f64;
        a[(i, i)] = ChiSquared::new(dof).expect("positive dof").sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let la = l * a;
    let w = &la * la.transpose();
    let sigma = cholesky_with_jitter(&w, "Wishart draw")?.inverse();
    Ok((&sigma + sigma.transpose()) * 0.5)
}
