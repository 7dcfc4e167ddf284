//! Small numerical helpers shared by the density code.

pub use statrs::function::gamma::ln_gamma;

/// `log(sum(exp(xs)))` without overflow. Returns `-inf` for an empty slice or
/// when every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Log of the multivariate gamma function Γ_p(a).
pub fn ln_multi_gamma(p: usize, a: f64) -> f64 {
    let pf = p as f64;
    let mut out = pf * (pf - 1.0) / 4.0 * std::f64::consts::PI.ln();
    for j in 0..p {
        out += ln_gamma(a - j as f64 / 2.0);
    }
    out
}

/// Log-density of the Dirichlet distribution with concentrations `alphas`,
/// taken with respect to Lebesgue measure on the first `len - 1` coordinates.
/// A single-coordinate vector is a point mass with log-density zero.
pub fn dirichlet_log_density(w: &[f64], alphas: &[f64]) -> f64 {
    debug_assert_eq!(w.len(), alphas.len());
    if w.len() == 1 {
        return 0.0;
    }
    let total: f64 = alphas.iter().sum();
    let mut out = ln_gamma(total);
    for (&x, &a) in w.iter().zip(alphas) {
        out -= ln_gamma(a);
        out += xlogy(a - 1.0, x);
    }
    out
}

/// `a * ln(x)` with the convention `0 * ln(0) = 0`.
pub fn xlogy(a: f64, x: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * x.ln()
    }
}

/// Gamma(shape, rate) log-density.
pub fn gamma_log_density(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Log-density of a log-normal random-walk proposal `to = from * exp(s * Z)`,
/// `Z ~ N(0, 1)`, evaluated at `to`.
pub fn log_normal_proposal_log_density(to: f64, from: f64, variance: f64) -> f64 {
    let z = to.ln() - from.ln();
    -to.ln() - 0.5 * (2.0 * std::f64::consts::PI * variance).ln() - z * z / (2.0 * variance)
}
