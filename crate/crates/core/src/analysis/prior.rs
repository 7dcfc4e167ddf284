use rand::Rng;

use crate::analysis::trace::count_allocated;
use crate::error::{Error, Result};
use crate::selberg::{sample_sdir, SdirParams};

/// Distribution of the number of allocated components: `probs[k] = P(M_a = k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaHistogram {
    pub probs: Vec<f64>,
}

impl MaHistogram {
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, _)| k)
    }
}

fn draw_categorical<R: Rng + ?Sized>(cumulative: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    cumulative
        .partition_point(|&c| c <= u)
        .min(cumulative.len() - 1)
}

/// Prior-predictive distribution of `M_a` for `n` observations when
/// `w ~ SDir(α₀, γ, M)` and labels are drawn i.i.d. from `w`.
pub fn prior_ma_simulation<R: Rng + ?Sized>(
    alpha0: f64,
    gamma: f64,
    m: usize,
    n: usize,
    reps: usize,
    rng: &mut R,
) -> Result<MaHistogram> {
    if n == 0 || reps == 0 {
        return Err(Error::domain("n, reps", "must be at least 1"));
    }
    if m == 0 {
        return Err(Error::domain("m", "must be at least 1"));
    }
    let mut probs = vec![0.0; m.min(n) + 1];
    if m == 1 {
        probs[1] = 1.0;
        return Ok(MaHistogram { probs });
    }
    let params = SdirParams::new(alpha0, gamma, m)?;
    let draws = sample_sdir(&params, reps, rng);
    let mut alloc = vec![0usize; n];
    let mut cumulative = vec![0.0; m];
    for w in &draws {
        let mut acc = 0.0;
        for (c, wi) in cumulative.iter_mut().zip(w.as_slice()) {
            acc += wi;
            *c = acc;
        }
        for a in alloc.iter_mut() {
            *a = draw_categorical(&cumulative, rng);
        }
        probs[count_allocated(&alloc)] += 1.0;
    }
    probs.iter_mut().for_each(|p| *p /= reps as f64);
    Ok(MaHistogram { probs })
}
