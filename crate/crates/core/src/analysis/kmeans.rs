use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when no center moves by more than this (Euclidean).
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 500,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeans {
    pub centers: Vec<DVector<f64>>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
}

fn nearest(x: &DVector<f64>, centers: &[DVector<f64>]) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(k, c)| (k, (x - c).norm_squared()))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn seed_plus_plus<R: Rng + ?Sized>(points: &[DVector<f64>], k: usize, rng: &mut R) -> Vec<DVector<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| (p - &centers[0]).norm_squared()).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points[idx].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min((p - &c).norm_squared());
        }
        centers.push(c);
    }
    centers
}

fn lloyd(points: &[DVector<f64>], mut centers: Vec<DVector<f64>>, opts: &KMeansOptions) -> KMeans {
    let k = centers.len();
    let dim = points[0].len();
    let mut labels = vec![0; points.len()];
    for _ in 0..opts.max_iter {
        for (l, p) in labels.iter_mut().zip(points) {
            *l = nearest(p, &centers).0;
        }
        let mut sums = vec![DVector::<f64>::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (l, p) in labels.iter().zip(points) {
            sums[*l] += p;
            counts[*l] += 1;
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            // empty clusters keep their previous center
            if counts[j] > 0 {
                let c = &sums[j] / counts[j] as f64;
                shift = shift.max((&c - &centers[j]).norm());
                centers[j] = c;
            }
        }
        if shift <= opts.tol {
            break;
        }
    }
    let mut inertia = 0.0;
    for (l, p) in labels.iter_mut().zip(points) {
        let (j, d) = nearest(p, &centers);
        *l = j;
        inertia += d;
    }
    KMeans {
        centers,
        labels,
        inertia,
    }
}

/// Lloyd's algorithm with k-means++ seeding; the best of `opts.restarts` runs
/// by inertia is returned.
pub fn kmeans<R: Rng + ?Sized>(
    points: &[DVector<f64>],
    k: usize,
    opts: KMeansOptions,
    rng: &mut R,
) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::domain("k", "must be at least 1"));
    }
    if k > points.len() {
        return Err(Error::domain(
            "k",
            format!("{k} clusters requested for {} observations", points.len()),
        ));
    }
    let mut best: Option<KMeans> = None;
    for _ in 0..opts.restarts.max(1) {
        let run = lloyd(points, seed_plus_plus(points, k, rng), &opts);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
