//! Modulus of a cadlag path,
//!
//! ```text
//! W(u; delta) = inf over partitions 0 = t_0 < ... < t_n = T with t_{i+1} - t_i >= delta
//!               of max_i sup_{t_i <= s < t < t_{i+1}} rho(u(t), u(s)),
//! ```
//!
//! evaluated exactly for a path known at finitely many times. Left limits
//! (pre-jump samples) are not values of the path and are ignored; at a
//! repeated time the last sample is the value. A cell `[a, b)` sees exactly
//! the samples with times in it, so a partition is a grouping of consecutive
//! samples plus cut positions, the cut before group `j` lying in
//! `(tau_{j-1}, tau_j]`. The sample at `T` itself belongs to no cell.

use crate::error::{Error, Result};
use crate::integrator::{SampleKind, Trajectory};
use crate::spectral_basis::NormKind;

/// Cut position `value`, or `value + 0` (just after it) when `open`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Cut {
    value: f64,
    open: bool,
}

impl Cut {
    fn shift(self, delta: f64) -> Self {
        Cut {
            value: self.value + delta,
            open: self.open,
        }
    }
}

fn max_cut(a: Cut, b: Cut) -> Cut {
    if a >= b {
        a
    } else {
        b
    }
}

/// Modulus for a path with values at strictly increasing `times` in `[0, T]`,
/// `times[0] = 0`, using the pairwise distance `dist(i, j)`.
pub fn modulus_of_samples(times: &[f64], horizon: f64, delta: f64, dist: impl Fn(usize, usize) -> f64) -> Result<f64> {
    if !(delta > 0.0 && delta < horizon) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} must lie in (0, T = {horizon})"
        )));
    }
    if times.first().is_some_and(|&t| t != 0.0) || times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("sample times must start at 0 and increase strictly".into()));
    }
    let m = times.iter().take_while(|&&t| t < horizon).count();
    if m == 0 {
        return Ok(0.0);
    }
    // osc[i][j]: oscillation of samples i..=j
    let mut osc = vec![vec![0.0f64; m]; m];
    for j in 0..m {
        let mut through = 0.0f64;
        for i in (0..j).rev() {
            through = through.max(dist(i, j));
            osc[i][j] = osc[i][j - 1].max(through);
        }
    }
    let mut candidates: Vec<f64> = osc.iter().flat_map(|r| r.iter().copied()).collect();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let end = Cut {
        value: horizon,
        open: false,
    };
    let feasible = |w: f64| -> bool {
        // earliest[j]: earliest start cut of a cell beginning at sample j
        let mut earliest: Vec<Option<Cut>> = vec![None; m];
        earliest[0] = Some(Cut {
            value: 0.0,
            open: false,
        });
        for j in 0..m {
            let Some(start) = earliest[j] else { continue };
            if osc[j][m - 1] <= w && start.shift(delta) <= end {
                return true;
            }
            for k in j + 1..m {
                if osc[j][k - 1] > w {
                    break;
                }
                let lower = Cut {
                    value: times[k - 1],
                    open: true,
                };
                let cut = max_cut(start.shift(delta), lower);
                let upper = Cut {
                    value: times[k],
                    open: false,
                };
                if cut <= upper && earliest[k].map_or(true, |e| cut < e) {
                    earliest[k] = Some(cut);
                }
            }
        }
        false
    };
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(candidates[lo])
}

/// Which component of the state the modulus measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulusField {
    Velocity,
    Director,
}

/// Modulus of the velocity path in the norm `norm_kind`.
pub fn cadlag_modulus(traj: &Trajectory, delta: f64, norm_kind: NormKind) -> Result<f64> {
    cadlag_modulus_of(traj, delta, norm_kind, ModulusField::Velocity)
}

pub fn cadlag_modulus_of(traj: &Trajectory, delta: f64, norm_kind: NormKind, field: ModulusField) -> Result<f64> {
    let horizon = traj.config.horizon;
    let mut picked: Vec<usize> = Vec::new();
    for (i, s) in traj.samples.iter().enumerate() {
        if s.kind == SampleKind::PreJump {
            continue;
        }
        if s.state.is_none() {
            return Err(Error::MissingStates);
        }
        match picked.last() {
            Some(&last) if traj.samples[last].time == s.time => *picked.last_mut().unwrap() = i,
            _ => picked.push(i),
        }
    }
    let times: Vec<f64> = picked.iter().map(|&i| traj.samples[i].time).collect();
    let state = |i: usize| traj.samples[picked[i]].state.as_ref().unwrap();
    modulus_of_samples(&times, horizon, delta, |i, j| match field {
        ModulusField::Velocity => state(i).velocity.sub(&state(j).velocity).norm_sq(norm_kind).sqrt(),
        ModulusField::Director => state(i).director.sub(&state(j).director).norm_sq(norm_kind).sqrt(),
    })
}
