use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{initial_state, Integrator, SimConfig, Trajectory};
use crate::jump_noise::sample_path;
use crate::spectral_basis::NormKind;

/// `L^2(0,T; H) x L^2(0,T; L^2)` distance between two resolutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub coarse: usize,
    pub fine: usize,
    /// `(int |u_c - u_f|^2 dt)^(1/2)`.
    pub velocity: f64,
    /// `(int |d_c - d_f|^2 dt)^(1/2)`.
    pub director: f64,
    /// `(velocity^2 + director^2)^(1/2)`.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Successive distances strictly decrease.
    pub fn is_cauchy_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].distance < w[0].distance)
    }
}

/// Runs `config` at each cutoff with one shared jump path and initial seed,
/// then measures successive distances with the time integral taken by the
/// trapezoidal rule over the common sample times.
pub fn galerkin_convergence_study(config: &SimConfig, cutoffs: &[usize], seed: u64) -> Result<ConvergenceTable> {
    if cutoffs.is_empty() || cutoffs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("cutoffs must be non-empty and non-decreasing".into()));
    }
    let events = sample_path(&config.noise, config.horizon, seed)?;
    let runs: Vec<Trajectory> = cutoffs
        .iter()
        .map(|&k| {
            let cfg = SimConfig {
                cutoff: k,
                store_states: true,
                ..config.clone()
            };
            let mut integ = Integrator::new(&cfg)?;
            let initial = initial_state(&cfg, integ.basis(), seed)?;
            integ.run(initial, seed, &events)
        })
        .collect::<Result<_>>()?;
    let rows = runs
        .windows(2)
        .map(|w| distance(&w[0], &w[1]))
        .collect::<Result<_>>()?;
    Ok(ConvergenceTable { seed, rows })
}

fn distance(coarse: &Trajectory, fine: &Trajectory) -> Result<ConvergenceRow> {
    if coarse.samples.len() != fine.samples.len() {
        return Err(Error::Format("resolutions produced different sample times".into()));
    }
    let mut vel = Vec::with_capacity(fine.samples.len());
    let mut dir = Vec::with_capacity(fine.samples.len());
    for (c, f) in coarse.samples.iter().zip(&fine.samples) {
        let (sc, sf) = (c.state.as_ref().ok_or(Error::MissingStates)?, f.state.as_ref().ok_or(Error::MissingStates)?);
        vel.push(sc.velocity.embed(&fine.basis)?.sub(&sf.velocity).norm_sq(NormKind::L2));
        dir.push(sc.director.embed(&fine.basis)?.sub(&sf.director).norm_sq(NormKind::L2));
    }
    let trap = |v: &[f64]| -> f64 {
        fine.samples
            .windows(2)
            .zip(v.windows(2))
            .map(|(s, x)| 0.5 * (s[1].time - s[0].time) * (x[0] + x[1]))
            .sum()
    };
    let (v2, d2) = (trap(&vel), trap(&dir));
    Ok(ConvergenceRow {
        coarse: coarse.basis.cutoff(),
        fine: fine.basis.cutoff(),
        velocity: v2.sqrt(),
        director: d2.sqrt(),
        distance: (v2 + d2).sqrt(),
    })
}
