use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::smooth_size;
use crate::jump_noise::{path_seed, NoiseSpec};
use crate::operators::PolynomialNonlinearity;
use crate::spectral_basis::{
    build_basis, random_director, random_velocity, to_physical, to_spectral_director, Basis, DirectorState,
    SpectralVelocity, MAX_CUTOFF_2D, MAX_CUTOFF_3D,
};

/// Largest admissible `dt * max |k|^2` for the explicit nonlinear terms.
pub const STABILITY_LIMIT: f64 = 2.0;

/// Switches for the individual nonlinear couplings (all on by default).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    /// `B_n(u)` in the velocity equation.
    pub convection: bool,
    /// `M_n(d)` in the velocity equation.
    pub ericksen_stress: bool,
    /// `B~_n(u, d)` in the director equation.
    pub director_transport: bool,
    /// `f_n(d)` in the director equation and `F~` in the energy.
    pub potential: bool,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            convection: true,
            ericksen_stress: true,
            director_transport: true,
            potential: true,
        }
    }
}

impl Physics {
    /// Heat equations only.
    pub fn linear() -> Self {
        Self {
            convection: false,
            ericksen_stress: false,
            director_transport: false,
            potential: false,
        }
    }
}

/// One real cosine mode with unit `L^2` norm before scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub wavevector: Vec<i32>,
    /// Polarization index for velocity, Cartesian component for the director.
    #[serde(default)]
    pub component: usize,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

fn default_slope() -> f64 {
    2.0
}

fn default_band() -> usize {
    2
}

fn default_perturbation() -> f64 {
    0.1
}

/// Named initial-condition generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    /// Optional single modes for each field, plus an optional constant director.
    SingleMode {
        #[serde(default)]
        velocity: Option<ModeSpec>,
        #[serde(default)]
        director: Option<ModeSpec>,
        #[serde(default)]
        director_background: Option<Vec<f64>>,
    },
    /// Random real fields on `|k|_inf <= band` with spectrum `(1+|k|^2)^-slope`,
    /// the same physical field for every cutoff (truncated when `K < band`).
    RandomBandLimited {
        #[serde(default = "unit")]
        velocity_amplitude: f64,
        #[serde(default = "unit")]
        director_amplitude: f64,
        #[serde(default = "default_slope")]
        slope: f64,
        #[serde(default = "default_band")]
        band: usize,
        #[serde(default)]
        director_mean: Option<Vec<f64>>,
    },
    /// `d = (e_1 + p) / |e_1 + p|` pointwise for a random perturbation `p` with
    /// RMS `perturbation`, projected onto the basis.
    NearUnitDirector {
        #[serde(default)]
        velocity_amplitude: f64,
        #[serde(default = "default_perturbation")]
        perturbation: f64,
        #[serde(default = "default_slope")]
        slope: f64,
        #[serde(default = "default_band")]
        band: usize,
    },
    /// Zero velocity and a spatially constant director.
    Constant { director: Vec<f64> },
    /// Stored state `sample` of a binary trajectory file; resolved by the CLI layer.
    Snapshot { path: String, sample: usize },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::RandomBandLimited {
            velocity_amplitude: 1.0,
            director_amplitude: 1.0,
            slope: default_slope(),
            band: default_band(),
            director_mean: None,
        }
    }
}

/// Everything needed to reproduce one Galerkin run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dim: usize,
    pub cutoff: usize,
    pub dt: f64,
    pub horizon: f64,
    pub poly: PolynomialNonlinearity,
    pub noise: NoiseSpec,
    pub initial: InitialCondition,
    /// Level `n` of the cutoff `theta_n`; `None` runs the untruncated system.
    pub truncation_level: Option<f64>,
    pub seed: u64,
    pub physics: Physics,
    /// Keep full coefficient states in the trajectory (ledgers are always kept).
    pub store_states: bool,
    /// Record every `sample_every`-th grid step (jumps are always recorded).
    pub sample_every: usize,
    /// Abort once `|u|_H` or `||d||_H1` exceeds this multiple of the initial scale.
    pub blowup_factor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            cutoff: 8,
            dt: 1e-3,
            horizon: 1.0,
            poly: PolynomialNonlinearity::ginzburg_landau(),
            noise: NoiseSpec::default(),
            initial: InitialCondition::default(),
            truncation_level: None,
            seed: 0,
            physics: Physics::default(),
            store_states: true,
            sample_every: 1,
            blowup_factor: 1e6,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let max = match self.dim {
            2 => MAX_CUTOFF_2D,
            3 => MAX_CUTOFF_3D,
            d => return Err(invalid("dim", format!("expected 2 or 3, got {d}"))),
        };
        if self.cutoff == 0 || self.cutoff > max {
            return Err(invalid("cutoff", format!("expected 1..={max} for dim {}, got {}", self.dim, self.cutoff)));
        }
        self.poly
            .check_dim(self.dim)
            .map_err(|e| invalid("poly.coeffs", e.to_string()))?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !self.horizon.is_finite() || self.horizon < self.dt {
            return Err(invalid("horizon", format!("must be finite and >= dt, got {}", self.horizon)));
        }
        let kmax = (self.dim * self.cutoff * self.cutoff) as f64;
        if self.dt * kmax > STABILITY_LIMIT {
            return Err(invalid(
                "dt",
                format!(
                    "dt * max|k|^2 = {} exceeds the stability limit {STABILITY_LIMIT}",
                    self.dt * kmax
                ),
            ));
        }
        if let Some(n) = self.truncation_level {
            if !(n >= 1.0) || !n.is_finite() {
                return Err(invalid("truncation_level", format!("must be >= 1, got {n}")));
            }
        }
        if self.sample_every == 0 {
            return Err(invalid("sample_every", "must be >= 1"));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(invalid("blowup_factor", "must exceed 1"));
        }
        self.noise
            .validate(None)
            .map_err(|e| invalid("noise", e.to_string()))?;
        let basis = build_basis(self.dim, self.cutoff)?;
        self.noise
            .validate(Some(&basis))
            .map_err(|e| invalid("noise.shape", e.to_string()))?;
        self.validate_initial()
    }

    fn validate_initial(&self) -> Result<()> {
        let vec_len = |key: &str, v: &Option<Vec<f64>>| match v {
            Some(v) if v.len() != self.dim => Err(invalid(key, format!("expected {} components", self.dim))),
            _ => Ok(()),
        };
        let band_ok = |band: usize| {
            if band == 0 || band > self.cutoff {
                Err(invalid("initial.band", format!("expected 1..={}, got {band}", self.cutoff)))
            } else {
                Ok(())
            }
        };
        match &self.initial {
            InitialCondition::SingleMode {
                director_background, ..
            } => vec_len("initial.director_background", director_background),
            InitialCondition::RandomBandLimited {
                band, director_mean, ..
            } => {
                // bands above the cutoff are truncated, which convergence studies rely on
                let limit = self.cutoff.max(64);
                if *band == 0 || *band > limit {
                    return Err(invalid("initial.band", format!("expected 1..={limit}, got {band}")));
                }
                vec_len("initial.director_mean", director_mean)
            }
            InitialCondition::NearUnitDirector { band, .. } => band_ok(*band),
            InitialCondition::Constant { director } => vec_len("initial.director", &Some(director.clone())),
            _ => Ok(()),
        }
    }

    pub fn basis(&self) -> Result<Arc<Basis>> {
        build_basis(self.dim, self.cutoff)
    }

    /// Seed of ensemble member `index`; member 0 is what `simulate` runs.
    pub fn path_seed(&self, index: u64) -> u64 {
        path_seed(self.seed, index)
    }

    /// Number of grid steps; the last one may be shorter so that it ends at `horizon`.
    pub fn n_steps(&self) -> usize {
        ((self.horizon / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }

    pub fn grid_time(&self, i: usize) -> f64 {
        if i >= self.n_steps() {
            self.horizon
        } else {
            i as f64 * self.dt
        }
    }
}

/// `(u, d)` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub velocity: SpectralVelocity,
    pub director: DirectorState,
}

impl State {
    pub fn zeros(basis: &Arc<Basis>) -> Self {
        Self {
            velocity: SpectralVelocity::zeros(basis),
            director: DirectorState::zeros(basis),
        }
    }
}

/// Build the initial state of the path with seed `seed` (IC draws use a
/// stream separate from the noise).
pub fn initial_state(config: &SimConfig, basis: &Arc<Basis>, seed: u64) -> Result<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let dim = basis.dim();
    let mut state = State::zeros(basis);
    match &config.initial {
        InitialCondition::Zero => {}
        InitialCondition::SingleMode {
            velocity,
            director,
            director_background,
        } => {
            if let Some(m) = velocity {
                state.velocity = SpectralVelocity::cos_mode(basis, &m.wavevector, m.component, m.amplitude)?;
            }
            if let Some(m) = director {
                state.director = DirectorState::cos_mode(basis, &m.wavevector, m.component, m.amplitude)?;
            }
            if let Some(bg) = director_background {
                state.director.add_scaled(&DirectorState::constant(basis, bg)?, 1.0);
            }
        }
        InitialCondition::RandomBandLimited {
            velocity_amplitude,
            director_amplitude,
            slope,
            band,
            director_mean,
        } => {
            state.velocity = random_velocity(basis, &mut rng, *velocity_amplitude, *slope, *band);
            state.director = random_director(basis, &mut rng, *director_amplitude, *slope, *band);
            if let Some(mean) = director_mean {
                state.director.add_scaled(&DirectorState::constant(basis, mean)?, 1.0);
            }
        }
        InitialCondition::NearUnitDirector {
            velocity_amplitude,
            perturbation,
            slope,
            band,
        } => {
            state.velocity = random_velocity(basis, &mut rng, *velocity_amplitude, *slope, *band);
            // RMS of the perturbation equals `perturbation`
            let p = random_director(basis, &mut rng, perturbation * basis.volume().sqrt(), *slope, *band);
            let m = smooth_size(4 * basis.cutoff() + 1);
            let mut field = to_physical(&p, m)?;
            let npts = field.components[0].len();
            for j in 0..npts {
                field.components[0][j] += 1.0;
                let norm = (0..dim).map(|c| field.components[c][j].powi(2)).sum::<f64>().sqrt();
                for c in 0..dim {
                    field.components[c][j] /= norm;
                }
            }
            state.director = to_spectral_director(&field, basis)?;
        }
        InitialCondition::Constant { director } => {
            state.director = DirectorState::constant(basis, director)?;
        }
        InitialCondition::Snapshot { .. } => {
            return Err(Error::InvalidArgument(
                "snapshot initial conditions must be loaded by the caller (see cli_io)".into(),
            ))
        }
    }
    Ok(state)
}
