use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{SampleKind, Trajectory};
use crate::jump_noise::noise_coefficient;
use crate::spectral_basis::NormKind;

/// Pathwise check of the `|d|^p` balance on a trajectory.
///
/// With `W = |d|_{L^2}` the Galerkin director equation gives exactly
///
/// ```text
/// W(t)^p + p int W^(p-2) (||grad d||^2 + <f(d), d>) ds = W(0)^p
/// ```
///
/// (transport drops out). The checked inequality replaces `<f(d), d>` by its
/// lower bound `b_N/2 int |d|^(2N+2) - C |d|^2` with `C` the coercivity gap of `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectorEnergyCheck {
    pub p: f64,
    /// `C` in the lower bound of `<f(d), d>`.
    pub gap_constant: f64,
    pub times: Vec<f64>,
    /// `|d(t)|^p`.
    pub l2_pow: Vec<f64>,
    /// `p int |d|^(p-2) (||grad d||^2 + b_N/2 ||d||^(2N+2)_{2N+2}) ds`.
    pub dissipation: Vec<f64>,
    /// `|d(0)|^p + p C int |d|^p ds`.
    pub rhs: Vec<f64>,
    /// `lhs - rhs`; positive entries are violations.
    pub margin: Vec<f64>,
    /// Defect of the exact balance, `O(dt)` for the scheme.
    pub identity_residual: Vec<f64>,
    pub tolerance: f64,
}

impl DirectorEnergyCheck {
    pub fn max_margin(&self) -> f64 {
        self.margin.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_identity_residual(&self) -> f64 {
        self.identity_residual.iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    /// Times where `lhs - rhs` exceeds the tolerance.
    pub fn violations(&self) -> Vec<(f64, f64)> {
        self.times
            .iter()
            .zip(&self.margin)
            .filter(|(_, m)| **m > self.tolerance)
            .map(|(t, m)| (*t, *m))
            .collect()
    }
}

/// Between-jump energy balance and jump contributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledEnergyCheck {
    pub times: Vec<f64>,
    /// `Psi(d) + |u|^2`.
    pub psi: Vec<f64>,
    /// `int (||grad u||^2 + |Laplacian d - f_n(d)|^2) ds`.
    pub dissipation: Vec<f64>,
    /// `int |Laplacian d|^2 ds`.
    pub laplacian_integral: Vec<f64>,
    /// Trapezoidal residual of `d[Psi + |u|^2/2] + dissipation` per deterministic step.
    pub step_residuals: Vec<f64>,
    /// `|ledger jump - (|u- + P_n F|^2 - |u-|^2)|` per jump.
    pub jump_mismatch: Vec<f64>,
}

impl CoupledEnergyCheck {
    pub fn max_step_residual(&self) -> f64 {
        self.step_residuals.iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    pub fn max_jump_mismatch(&self) -> f64 {
        self.jump_mismatch.iter().fold(0.0, |a, r| a.max(*r))
    }
}

/// Both energy sections for one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub director: DirectorEnergyCheck,
    pub coupled: CoupledEnergyCheck,
}

pub fn energy_report(traj: &Trajectory, p: f64) -> Result<EnergyReport> {
    Ok(EnergyReport {
        director: energy_check_director(traj, p)?,
        coupled: energy_check_coupled(traj)?,
    })
}

fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        out.push(acc);
    }
    out
}

pub fn energy_check_director(traj: &Trajectory, p: f64) -> Result<DirectorEnergyCheck> {
    if !(p >= 2.0) {
        return Err(Error::InvalidArgument(format!("exponent p = {p} must be at least 2")));
    }
    let cfg = &traj.config;
    let potential = cfg.physics.potential;
    let poly = &cfg.poly;
    let lead = 0.5 * poly.coeffs()[poly.degree()];
    let gap = if potential { poly.coercivity_gap() } else { 0.0 };
    let times = traj.times();
    let w = |l: &crate::integrator::EnergyLedger| l.d_l2_sq.sqrt();
    let l2_pow: Vec<f64> = traj.samples.iter().map(|s| w(&s.ledger).powf(p)).collect();
    let weight = |l: &crate::integrator::EnergyLedger| {
        if p == 2.0 {
            1.0
        } else {
            w(l).powf(p - 2.0)
        }
    };
    let bounded: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| {
            let l = &s.ledger;
            let power = if potential { lead * l.d_power } else { 0.0 };
            p * weight(l) * (l.d_grad_sq + power)
        })
        .collect();
    let exact: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| {
            let l = &s.ledger;
            let fd = if potential { l.f_dot_d } else { 0.0 };
            p * weight(l) * (l.d_grad_sq + fd)
        })
        .collect();
    let growth: Vec<f64> = l2_pow.iter().map(|x| p * gap * x).collect();
    let dissipation = cumulative_trapezoid(&times, &bounded);
    let exact_int = cumulative_trapezoid(&times, &exact);
    let growth_int = cumulative_trapezoid(&times, &growth);
    let w0 = l2_pow.first().copied().unwrap_or(0.0);
    let rhs: Vec<f64> = growth_int.iter().map(|g| w0 + g).collect();
    let margin = l2_pow
        .iter()
        .zip(&dissipation)
        .zip(&rhs)
        .map(|((a, b), r)| a + b - r)
        .collect();
    let identity_residual = l2_pow.iter().zip(&exact_int).map(|(a, b)| a + b - w0).collect();
    Ok(DirectorEnergyCheck {
        p,
        gap_constant: gap,
        times,
        l2_pow,
        dissipation,
        rhs,
        margin,
        identity_residual,
        tolerance: cfg.dt * w0.max(1.0),
    })
}

pub fn energy_check_coupled(traj: &Trajectory) -> Result<CoupledEnergyCheck> {
    let times = traj.times();
    let ledgers: Vec<_> = traj.samples.iter().map(|s| s.ledger).collect();
    let diss: Vec<f64> = ledgers.iter().map(|l| l.u_grad_sq + l.lap_minus_f_sq).collect();
    let lap: Vec<f64> = ledgers.iter().map(|l| l.d_lap_sq).collect();
    let mut step_residuals = Vec::new();
    let mut jump_mismatch = Vec::new();
    let mut jumps = traj.jumps.iter();
    for w in traj.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.kind == SampleKind::PostJump {
            let rec = jumps
                .next()
                .ok_or_else(|| Error::Format("more jump samples than jump records".into()))?;
            let ledger_jump = b.ledger.u_l2_sq - a.ledger.u_l2_sq;
            let recomputed = match &a.state {
                Some(pre) => {
                    let inc = noise_coefficient(&traj.config.noise, rec.time, &pre.velocity, &rec.mark)?;
                    let mut post = pre.velocity.clone();
                    post.add_scaled(&inc, 1.0);
                    post.norm_sq(NormKind::L2) - pre.velocity.norm_sq(NormKind::L2)
                }
                None => rec.energy_jump,
            };
            jump_mismatch.push((ledger_jump - recomputed).abs());
        } else if b.time > a.time {
            let h = b.time - a.time;
            let r = b.ledger.energy() - a.ledger.energy()
                + 0.5 * h * (a.ledger.dissipation() + b.ledger.dissipation());
            step_residuals.push(r);
        }
    }
    Ok(CoupledEnergyCheck {
        psi: ledgers.iter().map(|l| l.psi).collect(),
        dissipation: cumulative_trapezoid(&times, &diss),
        laplacian_integral: cumulative_trapezoid(&times, &lap),
        times,
        step_residuals,
        jump_mismatch,
    })
}
