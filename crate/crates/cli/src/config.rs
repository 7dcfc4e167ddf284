use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sipmix::model::{CovarianceUpdate, GammaPrior, Hyperparams, ZetaMode};

use crate::args::Overrides;
use crate::CliError;

/// Flat run configuration. Keys mirror the hyperparameter names; at most one
/// of the `gamma*` and one of the `zeta*`/`rho` groups may be given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_shape: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_shape: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance_update: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adapt: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_weights: Option<bool>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Applies flag values on top of the file values. A flag from one
    /// `gamma` or `zeta` group clears the file's other settings in that group.
    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($($f:ident),*) => {$(if o.$f.is_some() { self.$f = o.$f.clone(); })*};
        }
        if o.gamma.is_some() || o.gamma_shape.is_some() {
            self.gamma = None;
            self.gamma_shape = None;
            self.gamma_rate = None;
        }
        if o.zeta.is_some() || o.zeta_shape.is_some() || o.rho.is_some() {
            self.zeta = None;
            self.zeta_shape = None;
            self.zeta_rate = None;
            self.rho = None;
        }
        if o.v0_scale.is_some() {
            self.v0 = None;
        }
        set!(
            alpha0, lambda, v0_scale, nu0, gamma, gamma_shape, gamma_rate, zeta, zeta_shape,
            zeta_rate, rho, q, step_mu, step_gamma, covariance_update, burn_in, thin, n_samples,
            adapt, seed, chains, record_weights
        );
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn chains(&self) -> usize {
        self.chains.unwrap_or(1)
    }

    pub fn record_weights(&self) -> bool {
        self.record_weights.unwrap_or(false)
    }

    /// Builds validated hyperparameters for data of dimension `dim`.
    pub fn hyperparams(&self, dim: usize) -> Result<Hyperparams, CliError> {
        let usage = |m: &str| CliError::Usage(m.to_string());
        let mut h = Hyperparams::new(dim);
        macro_rules! copy {
            ($($f:ident),*) => {$(if let Some(v) = self.$f { h.$f = v; })*};
        }
        copy!(alpha0, lambda, nu0, q, step_mu, step_gamma, burn_in, thin, n_samples, adapt);
        match (&self.v0, self.v0_scale) {
            (Some(_), Some(_)) => return Err(usage("give either v0 or v0_scale")),
            (Some(rows), None) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(usage(&format!("v0 must be {dim} x {dim}")));
                }
                h.v0 = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
            }
            (None, Some(c)) => h.v0 = DMatrix::identity(dim, dim) * c,
            (None, None) => {}
        }
        h.gamma_prior = match (self.gamma, self.gamma_shape, self.gamma_rate) {
            (None, None, None) => h.gamma_prior,
            (Some(g), None, None) => GammaPrior::Fixed(g),
            (None, Some(shape), Some(rate)) => GammaPrior::Gamma { shape, rate },
            _ => return Err(usage("give either gamma or both gamma_shape and gamma_rate")),
        };
        h.zeta_mode = match (self.zeta, self.zeta_shape, self.zeta_rate, self.rho) {
            (None, None, None, None) => h.zeta_mode,
            (Some(z), None, None, None) => ZetaMode::Fixed(z),
            (None, Some(shape), Some(rate), None) => ZetaMode::Gamma { shape, rate },
            (None, None, None, Some(rho)) => ZetaMode::Ratio { rho },
            _ => return Err(usage("give one of zeta, zeta_shape with zeta_rate, or rho")),
        };
        h.covariance_update = match self.covariance_update.as_deref() {
            None | Some("centered") => CovarianceUpdate::Centered,
            Some("literal") => CovarianceUpdate::Literal,
            Some(other) => {
                return Err(usage(&format!(
                    "covariance_update must be `centered` or `literal`, got `{other}`"
                )))
            }
        };
        if self.chains == Some(0) {
            return Err(usage("chains must be at least 1"));
        }
        h.validate(dim).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(h)
    }
}
