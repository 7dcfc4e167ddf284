use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sipmix::analysis::{
    binder_estimate, elicit_zeta, posterior_similarity, prior_ma_simulation, PosteriorTrace,
};
use sipmix::ensemble::{ge_log_density, ge_log_norm_const, GeParams};
use sipmix::io::{
    read_dataset, read_json, read_trace, write_dataset, write_json, write_labels,
    write_similarity, write_trace, RunSummary,
};
use sipmix::model::{simulate_benchmark, CovarianceUpdate, GammaPrior, Hyperparams, ZetaMode};
use sipmix::sampler::{run_sampler, SamplerConfig};
use sipmix::selberg::{
    internal_dispersion_expectation, sdir_log_density, sdir_log_norm_const, sdir_moments,
    SdirParams, WeightVector,
};

use crate::args::*;
use crate::config::RunConfig;
use crate::CliError;

pub const RNG_NAME: &str = "ChaCha20Rng";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let (data, labels) = simulate_benchmark(a.seed);
    write_dataset(&a.out, &data)?;
    if let Some(path) = &a.labels {
        write_labels(path, &labels)?;
    }
    Ok(())
}

/// Everything needed to repeat a `fit` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub rng: String,
    pub data: PathBuf,
    pub seed: u64,
    /// Chain `i` is seeded with `seed ^ i`.
    pub chain_seeds: Vec<u64>,
    pub config: RunConfig,
    pub outputs: Vec<String>,
}

/// The fully specified configuration behind `h`.
fn resolved(h: &Hyperparams, seed: u64, chains: usize, record_weights: bool) -> RunConfig {
    let mut c = RunConfig {
        alpha0: Some(h.alpha0),
        lambda: Some(h.lambda),
        v0: Some(h.v0.row_iter().map(|r| r.iter().copied().collect()).collect()),
        nu0: Some(h.nu0),
        q: Some(h.q),
        step_mu: Some(h.step_mu),
        step_gamma: Some(h.step_gamma),
        covariance_update: Some(
            match h.covariance_update {
                CovarianceUpdate::Centered => "centered",
                CovarianceUpdate::Literal => "literal",
            }
            .into(),
        ),
        burn_in: Some(h.burn_in),
        thin: Some(h.thin),
        n_samples: Some(h.n_samples),
        adapt: Some(h.adapt),
        seed: Some(seed),
        chains: Some(chains),
        record_weights: Some(record_weights),
        ..Default::default()
    };
    match h.gamma_prior {
        GammaPrior::Fixed(g) => c.gamma = Some(g),
        GammaPrior::Gamma { shape, rate } => {
            c.gamma_shape = Some(shape);
            c.gamma_rate = Some(rate);
        }
    }
    match h.zeta_mode {
        ZetaMode::Fixed(z) => c.zeta = Some(z),
        ZetaMode::Gamma { shape, rate } => {
            c.zeta_shape = Some(shape);
            c.zeta_rate = Some(rate);
        }
        ZetaMode::Ratio { rho } => c.rho = Some(rho),
    }
    c
}

pub fn fit(a: &FitArgs) -> Result<(), CliError> {
    let (data_path, config) = match &a.from_manifest {
        Some(path) => {
            let m: Manifest = read_json(path).map_err(|e| CliError::Usage(e.to_string()))?;
            if m.rng != RNG_NAME {
                return Err(CliError::Usage(format!("manifest uses unsupported generator {}", m.rng)));
            }
            let mut config = m.config;
            config.apply(&a.overrides);
            (a.data.clone().unwrap_or(m.data), config)
        }
        None => {
            let mut config = match &a.config {
                Some(path) => RunConfig::from_file(path)?,
                None => RunConfig::default(),
            };
            config.apply(&a.overrides);
            (a.data.clone().expect("clap requires --data"), config)
        }
    };
    let data = read_dataset(&data_path)?;
    let h = config.hyperparams(data.dim())?;
    let (seed, chains, record_weights) = (config.seed(), config.chains(), config.record_weights());
    create_dir(&a.out)?;

    let chain_seeds: Vec<u64> = (0..chains as u64).map(|i| seed ^ i).collect();
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = chain_seeds
            .iter()
            .map(|&s| {
                let mut cfg = SamplerConfig::new(h.clone(), s);
                cfg.record_weights = record_weights;
                let data = &data;
                scope.spawn(move || run_sampler(data, &cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampler thread panicked"))
            .collect()
    });

    let mut outputs = Vec::new();
    for (i, result) in results.into_iter().enumerate() {
        let (trace, diag) = result?;
        let trace_name = format!("trace_{i}.ndjson");
        let summary_name = format!("summary_{i}.json");
        write_trace(&a.out.join(&trace_name), &trace)?;
        write_json(&a.out.join(&summary_name), &RunSummary::new(&trace, &diag))?;
        outputs.push(trace_name);
        outputs.push(summary_name);
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        rng: RNG_NAME.into(),
        data: fs::canonicalize(&data_path).unwrap_or(data_path),
        seed,
        chain_seeds,
        config: resolved(&h, seed, chains, record_weights),
        outputs,
    };
    write_json(&a.out.join("manifest.json"), &manifest)?;
    Ok(())
}

#[derive(Serialize)]
struct Analysis {
    n_samples: usize,
    mean_m_a: f64,
    m_a_histogram: Vec<f64>,
    m_histogram: Vec<f64>,
    binder_loss: f64,
    binder_clusters: usize,
}

pub fn analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    let mut pooled = PosteriorTrace::default();
    for path in &a.trace {
        let t = read_trace(path)?;
        if !pooled.is_empty() && !t.is_empty() && t.n_obs() != pooled.n_obs() {
            return Err(CliError::Usage(format!(
                "{}: traces cover different numbers of observations",
                path.display()
            )));
        }
        pooled.extend(t);
    }
    create_dir(&a.out)?;
    let psm = posterior_similarity(&pooled)?;
    let est = binder_estimate(&pooled, &psm)?;
    write_similarity(&a.out.join("psm.csv"), &psm)?;
    write_labels(&a.out.join("binder.csv"), &est.partition)?;
    let report = Analysis {
        n_samples: pooled.len(),
        mean_m_a: pooled.mean_m_a(),
        m_a_histogram: pooled.m_a_histogram(),
        m_histogram: pooled.m_histogram(),
        binder_loss: est.loss,
        binder_clusters: est.partition.iter().max().map_or(0, |m| m + 1),
    };
    write_json(&a.out.join("analysis.json"), &report)?;
    Ok(())
}

pub fn prior_ma(a: &PriorMaArgs) -> Result<(), CliError> {
    let mut rng = ChaCha20Rng::seed_from_u64(a.seed);
    let mut out = String::from("gamma,m,m_a,prob\n");
    for &gamma in &a.gamma {
        for &m in &a.m {
            let hist = prior_ma_simulation(a.alpha0, gamma, m, a.n, a.reps, &mut rng)?;
            for k in hist.support() {
                out.push_str(&format!("{gamma},{m},{k},{}\n", hist.probs[k]));
            }
        }
    }
    emit(a.out.as_deref(), &out)
}

#[derive(Serialize)]
struct ElicitReport {
    zeta: f64,
    data_gap: f64,
    data_gap_per_dim: Vec<f64>,
    grid: Vec<f64>,
    grid_gaps: Vec<f64>,
}

pub fn elicit(a: &ElicitArgs) -> Result<(), CliError> {
    let data = read_dataset(&a.data)?;
    let mut rng = ChaCha20Rng::seed_from_u64(a.seed);
    let e = elicit_zeta(&data, a.k, &a.grid, a.reps, &mut rng).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("{}", e.zeta);
    if let Some(path) = &a.out {
        write_json(
            path,
            &ElicitReport {
                zeta: e.zeta,
                data_gap: e.data_gap,
                data_gap_per_dim: e.data_gap_per_dim,
                grid: a.grid.clone(),
                grid_gaps: e.grid_gaps,
            },
        )?;
    }
    Ok(())
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this quantity")))
}

pub fn dist(a: &DistArgs) -> Result<(), CliError> {
    let usage = |e: sipmix::Error| CliError::Usage(e.to_string());
    let q = &a.quantity;
    let sdir = || -> Result<SdirParams, CliError> {
        SdirParams::new(need(a.alpha, "alpha")?, need(a.gamma, "gamma")?, need(a.m, "m")?).map_err(usage)
    };
    let value = if q.sdir_mean {
        sdir_moments(&sdir()?, 1).mean
    } else if q.sdir_variance {
        sdir_moments(&sdir()?, 2).variance
    } else if q.sdir_log_const {
        sdir_log_norm_const(&sdir()?)
    } else if q.sdir_log_density {
        let w = a.w.clone().ok_or_else(|| CliError::Usage("--w is required".into()))?;
        let p = SdirParams::new(need(a.alpha, "alpha")?, need(a.gamma, "gamma")?, w.len()).map_err(usage)?;
        sdir_log_density(&WeightVector::new(w).map_err(usage)?, &p).map_err(usage)?
    } else if q.dispersion {
        internal_dispersion_expectation(&sdir()?, need(a.tau, "tau")?).map_err(usage)?
    } else if q.ge_log_const {
        ge_log_norm_const(&GeParams::new(need(a.zeta, "zeta")?, need(a.m, "m")?).map_err(usage)?)
    } else {
        let x = a.x.clone().ok_or_else(|| CliError::Usage("--x is required".into()))?;
        let p = GeParams::new(need(a.zeta, "zeta")?, x.len()).map_err(usage)?;
        ge_log_density(&x, &p).map_err(usage)?
    };
    println!("{value}");
    Ok(())
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}
