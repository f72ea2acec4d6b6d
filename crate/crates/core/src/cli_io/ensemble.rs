use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{moment_table, path_functionals, MomentTable, PathFunctionals, MIN_PATHS};
use crate::error::{Error, Result};
use crate::integrator::{Integrator, SimConfig, Trajectory};
use crate::jump_noise::sample_path;

use super::config::resolve_initial;

/// Summary of one ensemble member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub index: u64,
    pub seed: u64,
    pub jumps: usize,
    pub final_energy: f64,
    #[serde(flatten)]
    pub functionals: PathFunctionals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub index: u64,
    pub seed: u64,
    pub error: String,
}

/// Reduced statistics; identical for any worker count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub requested: usize,
    pub completed: usize,
    pub mean_jumps: f64,
    pub jumps_standard_error: f64,
    pub mean_final_energy: f64,
    /// Present when at least the minimum number of paths completed.
    pub moments: Option<MomentTable>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub paths: Vec<PathSummary>,
    pub failures: Vec<PathFailure>,
    pub stats: EnsembleStats,
}

/// Ensemble member `index`, with snapshot initial conditions resolved.
pub fn run_path(config: &SimConfig, index: u64) -> Result<Trajectory> {
    let seed = config.path_seed(index);
    let mut integ = Integrator::new(config)?;
    let initial = resolve_initial(config, integ.basis(), seed)?;
    let events = sample_path(&config.noise, config.horizon, seed)?;
    integ.run(initial, seed, &events)
}

pub fn summarize(traj: &Trajectory, index: u64) -> PathSummary {
    PathSummary {
        index,
        seed: traj.seed,
        jumps: traj.jumps.len(),
        final_energy: traj.final_sample().ledger.energy(),
        functionals: path_functionals(traj),
    }
}

/// Run `n_paths` members on `workers` threads. Workers only return finished
/// summaries; the reduction runs afterwards in path order.
pub fn ensemble(config: &SimConfig, n_paths: usize, workers: usize) -> Result<EnsembleResult> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("ensemble needs at least one path".into()));
    }
    config.validate()?;
    let cfg = SimConfig {
        store_states: false,
        ..config.clone()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let outcomes: Vec<std::result::Result<PathSummary, PathFailure>> = pool.install(|| {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| {
                run_path(&cfg, i).map(|t| summarize(&t, i)).map_err(|e| PathFailure {
                    index: i,
                    seed: cfg.path_seed(i),
                    error: e.to_string(),
                })
            })
            .collect()
    });
    let mut paths = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(p) => paths.push(p),
            Err(f) => failures.push(f),
        }
    }
    let stats = reduce(&paths, n_paths, cfg.cutoff)?;
    Ok(EnsembleResult { paths, failures, stats })
}

fn reduce(paths: &[PathSummary], requested: usize, cutoff: usize) -> Result<EnsembleStats> {
    let n = paths.len() as f64;
    let mean = |f: &dyn Fn(&PathSummary) -> f64| paths.iter().map(f).sum::<f64>() / n;
    let mean_jumps = mean(&|p| p.jumps as f64);
    let jumps_standard_error = if paths.len() > 1 {
        let var = paths.iter().map(|p| (p.jumps as f64 - mean_jumps).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let moments = if paths.len() >= MIN_PATHS {
        let funcs: Vec<PathFunctionals> = paths.iter().map(|p| p.functionals).collect();
        Some(moment_table(&funcs, cutoff, &[1, 2], &[1, 2])?)
    } else {
        None
    };
    Ok(EnsembleStats {
        requested,
        completed: paths.len(),
        mean_jumps: if paths.is_empty() { 0.0 } else { mean_jumps },
        jumps_standard_error,
        mean_final_energy: if paths.is_empty() { 0.0 } else { mean(&|p| p.final_energy) },
        moments,
    })
}
