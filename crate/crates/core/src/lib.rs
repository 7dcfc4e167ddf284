//! Repulsive Gaussian mixture models with sparsity-inducing Selberg Dirichlet
//! weights, Gaussian ensemble priors on component locations, and a
//! birth–death MCMC sampler over the number of components.

pub mod analysis;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod model;
pub mod numeric;
pub mod sampler;
pub mod selberg;
pub mod wishart;

pub use error::{Error, Result};
