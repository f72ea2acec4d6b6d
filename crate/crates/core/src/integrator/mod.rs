//! Jump-adapted exponential Euler scheme for the Galerkin system
//!
//! ```text
//! du + [A u + B_n(u) + M_n(d)] dt = int P_n F(t, u(t-); y) eta~(dt, dy)
//! dd + [A d + B~_n(u, d) + f_n(d)] dt = 0
//! ```
//!
//! The diagonal linear part is integrated exactly, the nonlinear terms and the
//! compensator drift `-int F dnu` are frozen over each sub-step, and jumps are
//! applied at their exact times using the left limit `u(t-)`.

mod config;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use config::{initial_state, InitialCondition, ModeSpec, Physics, SimConfig, State, STABILITY_LIMIT};

use crate::error::{Error, Result};
use crate::jump_noise::{compensator_drift, noise_coefficient, sample_path, JumpEvent};
use crate::operators::OperatorWorkspace;
use crate::spectral_basis::{Basis, DirectorState, NormKind, SpectralVelocity};

/// Smooth cutoff: 1 on `r <= n`, 0 on `r >= n + 1`, `C^inf` and non-increasing between.
pub fn cutoff_theta(r: f64, n: f64) -> f64 {
    let s = r - n;
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let bump = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let a = bump(1.0 - s);
    a / (a + bump(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    /// End of a regular time step (or the initial time).
    Grid,
    /// Left limit at a jump time.
    PreJump,
    /// Value right after a jump.
    PostJump,
}

/// Energy quantities of one state. `galerkin_defect` collects the pairings
/// that cancel for the continuous system but not exactly after projection,
/// so that between jumps
///
/// ```text
/// d/dt [Psi + |u|^2/2] = -(u_grad_sq + lap_minus_f_sq + galerkin_defect + drift_power)
/// ```
///
/// holds exactly for the Galerkin ODE.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub u_l2_sq: f64,
    pub u_grad_sq: f64,
    pub d_l2_sq: f64,
    pub d_grad_sq: f64,
    /// `|Laplacian d|^2`.
    pub d_lap_sq: f64,
    /// `|Laplacian d - f_n(d)|^2`.
    pub lap_minus_f_sq: f64,
    /// `int |d|^(2N+2)`.
    pub d_power: f64,
    /// `int f(d) . d`.
    pub f_dot_d: f64,
    /// `Psi(d)`.
    pub psi_director: f64,
    /// `Psi(d) + |u|^2`.
    pub psi: f64,
    pub galerkin_defect: f64,
    /// `<int F(u; y) nu(dy), u>`.
    pub drift_power: f64,
}

impl EnergyLedger {
    /// `Psi(d) + |u|^2 / 2`.
    pub fn energy(&self) -> f64 {
        self.psi_director + 0.5 * self.u_l2_sq
    }

    /// Rate of energy loss between jumps.
    pub fn dissipation(&self) -> f64 {
        self.u_grad_sq + self.lap_minus_f_sq + self.galerkin_defect + self.drift_power
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub kind: SampleKind,
    pub ledger: EnergyLedger,
    pub state: Option<State>,
}

/// One applied jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    #[serde(rename = "t")]
    pub time: f64,
    pub mark: Vec<f64>,
    /// `|P_n F(t, u(t-); y)|_H`.
    pub applied_increment_norm: f64,
    /// `|u(t)|^2 - |u(t-)|^2`.
    pub energy_jump: f64,
}

/// Samples in time order with pre/post values at jumps.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SimConfig,
    /// Seed of this path (noise stream 0, initial-condition stream 1).
    pub seed: u64,
    pub basis: Arc<Basis>,
    pub samples: Vec<Sample>,
    pub jumps: Vec<JumpRecord>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    /// States of all samples; fails if states were not stored.
    pub fn states(&self) -> Result<Vec<&State>> {
        self.samples
            .iter()
            .map(|s| s.state.as_ref().ok_or(Error::MissingStates))
            .collect()
    }

    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds the initial sample")
    }
}

/// Nonlinear right-hand sides and the energy ledger at one state.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// `-(B'_n(u) + M'_n(d) + int F dnu)`.
    pub velocity_rate: SpectralVelocity,
    /// `-(B~'_n(u, d) + f_n(d))`.
    pub director_rate: DirectorState,
    pub ledger: EnergyLedger,
}

/// Stepping engine bound to one configuration.
pub struct Integrator {
    config: SimConfig,
    basis: Arc<Basis>,
    ws: OperatorWorkspace,
    velocity_eig: Vec<f64>,
    director_eig: Vec<f64>,
}

impl Integrator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let basis = config.basis()?;
        let dim = basis.dim();
        let director_eig = (0..basis.director_len()).map(|j| basis.eigenvalues()[j / dim]).collect();
        Ok(Self {
            config: config.clone(),
            ws: OperatorWorkspace::new(&basis),
            velocity_eig: basis.velocity_eigenvalues(),
            director_eig,
            basis,
        })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn thetas(&self, state: &State) -> (f64, f64) {
        match self.config.truncation_level {
            None => (1.0, 1.0),
            Some(n) => (
                cutoff_theta(state.velocity.norm_sq(NormKind::VDual).sqrt(), n),
                cutoff_theta(state.director.norm_sq(NormKind::H2Dual).sqrt(), n),
            ),
        }
    }

    /// Right-hand sides and ledger at `state`.
    pub fn evaluate(&mut self, state: &State, t: f64) -> Result<Evaluation> {
        let cfg = &self.config;
        let ph = cfg.physics;
        let u = &state.velocity;
        let d = &state.director;
        let terms = self.ws.galerkin_terms(u, d, &cfg.poly)?;
        let (th1, th2) = self.thetas(state);
        let on = |flag: bool, theta: f64| if flag { theta } else { 0.0 };
        let conv = terms.convective.scaled(on(ph.convection, th1));
        let eric = terms.ericksen.scaled(on(ph.ericksen_stress, th2));
        let trans = terms.transport.scaled(on(ph.director_transport, th1));
        let f = terms.f.scaled(on(ph.potential, 1.0));
        let drift = compensator_drift(&cfg.noise, t, u)?;

        let mut velocity_rate = conv.scaled(-1.0);
        velocity_rate.add_scaled(&eric, -1.0);
        velocity_rate.add_scaled(&drift, -1.0);
        let mut director_rate = trans.scaled(-1.0);
        director_rate.add_scaled(&f, -1.0);

        let lap: Vec<_> = d
            .coeffs()
            .iter()
            .zip(&self.director_eig)
            .map(|(c, l)| -c * l)
            .collect();
        let lap = DirectorState::from_coeffs(&self.basis, lap)?;
        let mut lap_minus_f = lap.clone();
        lap_minus_f.add_scaled(&f, -1.0);
        let defect = conv.inner(u, NormKind::L2) + eric.inner(u, NormKind::L2)
            - lap_minus_f.inner(&trans, NormKind::L2);
        let u_l2_sq = u.norm_sq(NormKind::L2);
        let d_grad_sq = d.norm_sq(NormKind::H1Seminorm);
        let potential = if ph.potential { terms.potential_integral } else { 0.0 };
        let psi_director = 0.5 * d_grad_sq + 0.5 * potential;
        let ledger = EnergyLedger {
            u_l2_sq,
            u_grad_sq: u.norm_sq(NormKind::H1Seminorm),
            d_l2_sq: d.norm_sq(NormKind::L2),
            d_grad_sq,
            d_lap_sq: lap.norm_sq(NormKind::L2),
            lap_minus_f_sq: lap_minus_f.norm_sq(NormKind::L2),
            d_power: terms.power_integral,
            f_dot_d: terms.f_dot_d,
            psi_director,
            psi: psi_director + u_l2_sq,
            galerkin_defect: defect,
            drift_power: drift.inner(u, NormKind::L2),
        };
        Ok(Evaluation {
            velocity_rate,
            director_rate,
            ledger,
        })
    }

    /// One exponential-Euler sub-step of length `h` from `state` with rates `eval`.
    pub fn advance(&self, state: &State, eval: &Evaluation, h: f64) -> State {
        let etd = |a: num_complex::Complex64, n: num_complex::Complex64, l: f64| {
            if l == 0.0 {
                a + n * h
            } else {
                let e = (-l * h).exp();
                let phi = -(-l * h).exp_m1() / l;
                a * e + n * phi
            }
        };
        let mut out = state.clone();
        for ((a, n), l) in out
            .velocity
            .coeffs_mut()
            .iter_mut()
            .zip(eval.velocity_rate.coeffs())
            .zip(&self.velocity_eig)
        {
            *a = etd(*a, *n, *l);
        }
        for ((a, n), l) in out
            .director
            .coeffs_mut()
            .iter_mut()
            .zip(eval.director_rate.coeffs())
            .zip(&self.director_eig)
        {
            *a = etd(*a, *n, *l);
        }
        out
    }

    /// Deterministic sub-step of length `h <= dt` (no jump inside).
    pub fn step(&mut self, state: &State, t: f64, h: f64) -> Result<State> {
        if !(h > 0.0) || h > self.config.dt * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "sub-step {h} must lie in (0, dt = {}]",
                self.config.dt
            )));
        }
        let eval = self.evaluate(state, t)?;
        Ok(self.advance(state, &eval, h))
    }

    /// `u <- u + P_n F(t, u(t-); y)`; the director is unchanged.
    pub fn apply_jump(&self, state: &State, t: f64, mark: &[f64]) -> Result<(State, JumpRecord)> {
        let inc = noise_coefficient(&self.config.noise, t, &state.velocity, mark)?;
        let mut out = state.clone();
        out.velocity.add_scaled(&inc, 1.0);
        let before = state.velocity.norm_sq(NormKind::L2);
        let after = out.velocity.norm_sq(NormKind::L2);
        let record = JumpRecord {
            time: t,
            mark: mark.to_vec(),
            applied_increment_norm: inc.l2_norm(),
            energy_jump: after - before,
        };
        Ok((out, record))
    }

    /// Run from `initial` through the given jump events.
    pub fn run(&mut self, initial: State, seed: u64, events: &[JumpEvent]) -> Result<Trajectory> {
        self.basis.check_same(initial.velocity.basis())?;
        self.basis.check_same(initial.director.basis())?;
        let cfg = self.config.clone();
        let store = cfg.store_states;
        let mut traj = Trajectory {
            config: cfg.clone(),
            seed,
            basis: self.basis.clone(),
            samples: Vec::new(),
            jumps: Vec::new(),
        };
        let mut state = initial;
        let mut t = 0.0;
        let mut eval = self.evaluate(&state, t)?;
        let scale = {
            let l = &eval.ledger;
            1f64.max(l.u_l2_sq.sqrt()).max((l.d_l2_sq + l.d_grad_sq).sqrt())
        };
        let limit = cfg.blowup_factor * scale;
        let push = |traj: &mut Trajectory, t: f64, kind, ledger, state: &State| {
            traj.samples.push(Sample {
                time: t,
                kind,
                ledger,
                state: store.then(|| state.clone()),
            });
        };
        push(&mut traj, t, SampleKind::Grid, eval.ledger, &state);
        let mut pending = events.iter().peekable();
        let n = cfg.n_steps();
        for i in 1..=n {
            let t_next = cfg.grid_time(i);
            while let Some(ev) = pending.next_if(|e| e.time <= t_next) {
                if ev.time > t {
                    state = self.advance(&state, &eval, ev.time - t);
                    t = ev.time;
                    eval = self.evaluate(&state, t)?;
                    guard(&eval.ledger, t, limit)?;
                }
                push(&mut traj, t, SampleKind::PreJump, eval.ledger, &state);
                let (next, record) = self.apply_jump(&state, t, &ev.mark)?;
                state = next;
                traj.jumps.push(record);
                eval = self.evaluate(&state, t)?;
                guard(&eval.ledger, t, limit)?;
                push(&mut traj, t, SampleKind::PostJump, eval.ledger, &state);
            }
            if t_next > t {
                state = self.advance(&state, &eval, t_next - t);
                t = t_next;
                eval = self.evaluate(&state, t)?;
                guard(&eval.ledger, t, limit)?;
            }
            if i % cfg.sample_every == 0 || i == n {
                push(&mut traj, t, SampleKind::Grid, eval.ledger, &state);
            }
        }
        Ok(traj)
    }
}

fn guard(l: &EnergyLedger, t: f64, limit: f64) -> Result<()> {
    let u = l.u_l2_sq.sqrt();
    if !(u <= limit) {
        return Err(Error::Blowup {
            time: t,
            quantity: "|u|_H",
            value: u,
            limit,
        });
    }
    let d = (l.d_l2_sq + l.d_grad_sq).sqrt();
    if !(d <= limit) {
        return Err(Error::Blowup {
            time: t,
            quantity: "||d||_H1",
            value: d,
            limit,
        });
    }
    Ok(())
}

/// One deterministic sub-step of length `dt_eff` starting at time `t`.
pub fn step(state: &State, t: f64, dt_eff: f64, config: &SimConfig) -> Result<State> {
    Integrator::new(config)?.step(state, t, dt_eff)
}

/// Apply the jump with mark `mark` at time `t` to `state`.
pub fn apply_jump(state: &State, t: f64, mark: &[f64], config: &SimConfig) -> Result<State> {
    Ok(Integrator::new(config)?.apply_jump(state, t, mark)?.0)
}

/// Ensemble member `index` of `config` (initial condition and noise from its path seed).
pub fn simulate_path(config: &SimConfig, index: u64) -> Result<Trajectory> {
    let seed = config.path_seed(index);
    let mut integ = Integrator::new(config)?;
    let initial = initial_state(config, integ.basis(), seed)?;
    let events = sample_path(&config.noise, config.horizon, seed)?;
    integ.run(initial, seed, &events)
}

/// Member 0 of the ensemble defined by `config`.
pub fn simulate(config: &SimConfig) -> Result<Trajectory> {
    simulate_path(config, 0)
}

/// Run from an explicit initial state with the noise of path seed `seed`.
pub fn simulate_from(config: &SimConfig, initial: State, seed: u64) -> Result<Trajectory> {
    let mut integ = Integrator::new(config)?;
    let events = sample_path(&config.noise, config.horizon, seed)?;
    integ.run(initial, seed, &events)
}
