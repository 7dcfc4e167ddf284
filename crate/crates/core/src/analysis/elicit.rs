use rand::Rng;

use crate::analysis::kmeans::{kmeans, KMeansOptions};
use crate::ensemble::{sample_ge_one, GeParams};
use crate::error::{Error, Result};
use crate::model::Dataset;

/// Mean of `|x_i - x_j|` over pairs `i < j`.
pub fn mean_pairwise_gap(x: &[f64]) -> f64 {
    let m = x.len();
    if m < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            total += (x[i] - x[j]).abs();
        }
    }
    total / (m * (m - 1) / 2) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elicitation {
    pub zeta: f64,
    /// Center gap statistic of the data, averaged over dimensions.
    pub data_gap: f64,
    pub data_gap_per_dim: Vec<f64>,
    /// Monte Carlo gap statistic for each grid value, in grid order.
    pub grid_gaps: Vec<f64>,
}

/// Chooses `ζ` from `grid` so that Gaussian-ensemble draws of size `k` have
/// pairwise gaps closest to those of k-means centers fitted to `data`.
pub fn elicit_zeta<R: Rng + ?Sized>(
    data: &Dataset,
    k: usize,
    grid: &[f64],
    reps: usize,
    rng: &mut R,
) -> Result<Elicitation> {
    if k < 2 {
        return Err(Error::domain("k", "must be at least 2"));
    }
    if grid.is_empty() {
        return Err(Error::domain("grid", "must not be empty"));
    }
    if reps == 0 {
        return Err(Error::domain("reps", "must be at least 1"));
    }
    if k > data.n() {
        return Err(Error::domain(
            "k",
            format!("{k} clusters requested for {} observations", data.n()),
        ));
    }
    let km = kmeans(data.rows(), k, KMeansOptions::default(), rng)?;
    let data_gap_per_dim: Vec<f64> = (0..data.dim())
        .map(|d| {
            let xs: Vec<f64> = km.centers.iter().map(|c| c[d]).collect();
            mean_pairwise_gap(&xs)
        })
        .collect();
    let data_gap = data_gap_per_dim.iter().sum::<f64>() / data.dim() as f64;

    let mut grid_gaps = Vec::with_capacity(grid.len());
    for &zeta in grid {
        let p = GeParams::new(zeta, k)?;
        let total: f64 = (0..reps)
            .map(|_| mean_pairwise_gap(sample_ge_one(&p, rng).as_slice()))
            .sum();
        grid_gaps.push(total / reps as f64);
    }
    let best = grid_gaps
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, g)| {
            let diff = (g - data_gap).abs();
            if diff < acc.1 {
                (i, diff)
            } else {
                acc
            }
        })
        .0;
    Ok(Elicitation {
        zeta: grid[best],
        data_gap,
        data_gap_per_dim,
        grid_gaps,
    })
}
