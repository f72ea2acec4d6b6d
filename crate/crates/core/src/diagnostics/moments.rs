use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Fewest paths accepted by [`moment_estimates`].
pub const MIN_PATHS: usize = 100;

/// Default half-width of confidence bands, in standard errors.
pub const BAND_SIGMAS: f64 = 4.0;

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub name: String,
    pub exponent: u32,
    pub mean: f64,
    pub standard_error: f64,
    pub lower: f64,
    pub upper: f64,
}

impl MomentRow {
    fn from_samples(name: &str, exponent: u32, xs: &[f64], sigmas: f64) -> Self {
        let n = xs.len() as f64;
        // fixed left-to-right order keeps the sums reproducible
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let standard_error = (var / n).sqrt();
        MomentRow {
            name: name.to_string(),
            exponent,
            mean,
            standard_error,
            lower: mean - sigmas * standard_error,
            upper: mean + sigmas * standard_error,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.mean.is_finite() && self.standard_error.is_finite()
    }

    pub fn overlaps(&self, other: &MomentRow) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub cutoff: usize,
    pub paths: usize,
    pub sigmas: f64,
    pub rows: Vec<MomentRow>,
}

impl MomentTable {
    pub fn row(&self, name: &str, exponent: u32) -> Option<&MomentRow> {
        self.rows.iter().find(|r| r.name == name && r.exponent == exponent)
    }

    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(MomentRow::is_finite)
    }
}

/// Per-path functionals entering the moment table.
///
/// `sup_psi` uses `psi_+ = Psi(d) + |u|^2 - |O| inf F~ / 2`, shifted so that it
/// is non-negative for any potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathFunctionals {
    pub sup_psi: f64,
    pub sup_velocity_sq: f64,
    /// `int (||grad u||^2 + |Laplacian d - f_n(d)|^2) ds`.
    pub dissipation: f64,
    /// `int |Laplacian d|^2 ds`.
    pub laplacian: f64,
}

pub fn path_functionals(traj: &Trajectory) -> PathFunctionals {
    let cfg = &traj.config;
    let shift = if cfg.physics.potential {
        -0.5 * traj.basis.volume() * cfg.poly.potential_floor()
    } else {
        0.0
    };
    let mut out = PathFunctionals {
        sup_psi: f64::NEG_INFINITY,
        sup_velocity_sq: 0.0,
        dissipation: 0.0,
        laplacian: 0.0,
    };
    for s in &traj.samples {
        out.sup_psi = out.sup_psi.max(s.ledger.psi + shift);
        out.sup_velocity_sq = out.sup_velocity_sq.max(s.ledger.u_l2_sq);
    }
    for w in traj.samples.windows(2) {
        let h = w[1].time - w[0].time;
        let (a, b) = (&w[0].ledger, &w[1].ledger);
        out.dissipation += 0.5 * h * (a.u_grad_sq + a.lap_minus_f_sq + b.u_grad_sq + b.lap_minus_f_sq);
        out.laplacian += 0.5 * h * (a.d_lap_sq + b.d_lap_sq);
    }
    out
}

/// `E[sup psi_+^p]`, `E[(int dissipation)^p]` for `p` in `ps` and `E[(int |Laplacian d|^2)^q]`
/// for `q` in `qs`, over paths in the given order.
pub fn moment_estimates(trajs: &[Trajectory], ps: &[u32], qs: &[u32]) -> Result<MomentTable> {
    let funcs: Vec<PathFunctionals> = trajs.iter().map(path_functionals).collect();
    let cutoff = trajs.first().map_or(0, |t| t.basis.cutoff());
    moment_table(&funcs, cutoff, ps, qs)
}

/// Same as [`moment_estimates`] from precomputed per-path functionals.
pub fn moment_table(funcs: &[PathFunctionals], cutoff: usize, ps: &[u32], qs: &[u32]) -> Result<MomentTable> {
    if funcs.len() < MIN_PATHS {
        return Err(Error::InsufficientPaths {
            got: funcs.len(),
            needed: MIN_PATHS,
        });
    }
    let mut rows = Vec::new();
    let column = |f: fn(&PathFunctionals) -> f64, e: u32| -> Vec<f64> {
        funcs.iter().map(|x| f(x).powi(e as i32)).collect()
    };
    for &p in ps {
        rows.push(MomentRow::from_samples("sup_psi", p, &column(|x| x.sup_psi, p), BAND_SIGMAS));
        rows.push(MomentRow::from_samples("dissipation", p, &column(|x| x.dissipation, p), BAND_SIGMAS));
    }
    for &q in qs {
        rows.push(MomentRow::from_samples("laplacian", q, &column(|x| x.laplacian, q), BAND_SIGMAS));
    }
    Ok(MomentTable {
        cutoff,
        paths: funcs.len(),
        sigmas: BAND_SIGMAS,
        rows,
    })
}

/// Comparison of one moment across successive cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub name: String,
    pub exponent: u32,
    pub cutoffs: Vec<usize>,
    pub means: Vec<f64>,
    /// Successive bands overlap.
    pub overlapping: bool,
}

/// Checks for a growth trend in `K`: each row's bands must overlap between
/// successive tables.
pub fn refinement_comparison(tables: &[MomentTable]) -> Vec<RefinementRow> {
    let Some(first) = tables.first() else {
        return Vec::new();
    };
    first
        .rows
        .iter()
        .map(|r| {
            let series: Vec<&MomentRow> = tables.iter().filter_map(|t| t.row(&r.name, r.exponent)).collect();
            RefinementRow {
                name: r.name.clone(),
                exponent: r.exponent,
                cutoffs: tables.iter().map(|t| t.cutoff).collect(),
                means: series.iter().map(|x| x.mean).collect(),
                overlapping: series.len() == tables.len() && series.windows(2).all(|w| w[0].overlaps(w[1])),
            }
        })
        .collect()
}
