//! Label-invariant summaries of posterior and prior draws.

mod elicit;
mod kmeans;
mod partition;
mod prior;
mod trace;

pub use elicit::{elicit_zeta, mean_pairwise_gap, Elicitation};
pub use kmeans::{kmeans, KMeans, KMeansOptions};
pub use partition::{
    binder_estimate, binder_loss, canonical_labels, posterior_similarity, BinderEstimate,
    SimilarityMatrix,
};
pub use prior::{prior_ma_simulation, MaHistogram};
pub use trace::{count_allocated, PosteriorTrace, TraceSample};
