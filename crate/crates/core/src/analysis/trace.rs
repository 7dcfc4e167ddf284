use std::collections::HashSet;

use crate::error::{Error, Result};

/// Number of distinct labels in an allocation vector.
pub fn count_allocated(alloc: &[usize]) -> usize {
    alloc.iter().collect::<HashSet<_>>().len()
}

/// One retained posterior draw. Labels are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub m: usize,
    pub m_a: usize,
    pub alloc: Vec<usize>,
    pub gamma: f64,
    pub zeta: f64,
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PosteriorTrace {
    pub samples: Vec<TraceSample>,
}

impl PosteriorTrace {
    pub fn new(samples: Vec<TraceSample>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of observations, taken from the first sample.
    pub fn n_obs(&self) -> usize {
        self.samples.first().map_or(0, |s| s.alloc.len())
    }

    /// Appends the samples of another chain.
    pub fn extend(&mut self, other: PosteriorTrace) {
        self.samples.extend(other.samples);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_obs();
        for (t, s) in self.samples.iter().enumerate() {
            let bad = |reason: String| Error::domain("trace", format!("sample {t}: {reason}"));
            if s.alloc.len() != n {
                return Err(bad(format!("{} labels, expected {n}", s.alloc.len())));
            }
            if s.alloc.iter().any(|&c| c >= s.m) {
                return Err(bad(format!("label outside 1..={}", s.m)));
            }
            if count_allocated(&s.alloc) != s.m_a {
                return Err(bad("m_a does not match the allocation".into()));
            }
            if let Some(w) = &s.weights {
                if w.len() != s.m {
                    return Err(bad("weights length differs from m".into()));
                }
            }
        }
        Ok(())
    }

    /// Empirical distribution of `M_a`: entry `k` is the frequency of `M_a = k`.
    pub fn m_a_histogram(&self) -> Vec<f64> {
        let max = self.samples.iter().map(|s| s.m_a).max().unwrap_or(0);
        let mut hist = vec![0.0; max + 1];
        for s in &self.samples {
            hist[s.m_a] += 1.0;
        }
        let total = self.samples.len().max(1) as f64;
        hist.iter_mut().for_each(|h| *h /= total);
        hist
    }

    /// Empirical distribution of `M`: entry `k` is the frequency of `M = k`.
    pub fn m_histogram(&self) -> Vec<f64> {
        let max = self.samples.iter().map(|s| s.m).max().unwrap_or(0);
        let mut hist = vec![0.0; max + 1];
        for s in &self.samples {
            hist[s.m] += 1.0;
        }
        let total = self.samples.len().max(1) as f64;
        hist.iter_mut().for_each(|h| *h /= total);
        hist
    }

    pub fn mean_m_a(&self) -> f64 {
        self.samples.iter().map(|s| s.m_a as f64).sum::<f64>() / self.samples.len().max(1) as f64
    }
}
