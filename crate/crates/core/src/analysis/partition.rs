use std::collections::{HashMap, HashSet};

use crate::analysis::trace::PosteriorTrace;
use crate::error::{ensure_dim, Error, Result};

/// Posterior co-clustering frequencies, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// `s_ij` = fraction of samples in which observations `i` and `j` share a label.
pub fn posterior_similarity(trace: &PosteriorTrace) -> Result<SimilarityMatrix> {
    if trace.is_empty() {
        return Err(Error::domain("trace", "no samples"));
    }
    let n = trace.n_obs();
    let mut counts = vec![0u32; n * n];
    for s in &trace.samples {
        ensure_dim(n, s.alloc.len())?;
        for i in 0..n {
            let ci = s.alloc[i];
            let row = &mut counts[i * n..(i + 1) * n];
            for (j, &cj) in s.alloc.iter().enumerate().skip(i + 1) {
                if ci == cj {
                    row[j] += 1;
                }
            }
        }
    }
    let t = trace.len() as f64;
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        data[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let v = f64::from(counts[i * n + j]) / t;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(SimilarityMatrix { n, data })
}

/// Binder loss with equal misclassification costs:
/// `Σ_{i<j} (1{c_i = c_j} - s_ij)²`.
pub fn binder_loss(partition: &[usize], psm: &SimilarityMatrix) -> f64 {
    let n = partition.len();
    let mut loss = 0.0;
    for i in 0..n {
        let row = psm.row(i);
        for j in (i + 1)..n {
            let same = if partition[i] == partition[j] { 1.0 } else { 0.0 };
            let diff = same - row[j];
            loss += diff * diff;
        }
    }
    loss
}

/// Relabels a partition by order of first appearance, starting at zero.
pub fn canonical_labels(partition: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    partition
        .iter()
        .map(|c| {
            let next = map.len();
            *map.entry(*c).or_insert(next)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinderEstimate {
    /// Canonically relabeled partition.
    pub partition: Vec<usize>,
    /// Index of the first sample carrying this partition.
    pub sample_index: usize,
    pub loss: f64,
}

/// Sampled partition minimizing the Binder loss; ties go to the earliest sample.
pub fn binder_estimate(trace: &PosteriorTrace, psm: &SimilarityMatrix) -> Result<BinderEstimate> {
    if trace.is_empty() {
        return Err(Error::domain("trace", "no samples"));
    }
    ensure_dim(psm.n(), trace.n_obs())?;
    let mut seen = HashSet::new();
    let mut best: Option<BinderEstimate> = None;
    for (t, s) in trace.samples.iter().enumerate() {
        let canon = canonical_labels(&s.alloc);
        if !seen.insert(canon.clone()) {
            continue;
        }
        let loss = binder_loss(&canon, psm);
        if best.as_ref().is_none_or(|b| loss < b.loss) {
            best = Some(BinderEstimate {
                partition: canon,
                sample_index: t,
                loss,
            });
        }
    }
    Ok(best.expect("non-empty trace"))
}
