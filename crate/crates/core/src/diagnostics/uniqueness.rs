use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{initial_state, Integrator, SimConfig, State, Trajectory};
use crate::jump_noise::sample_path;
use crate::operators::{OperatorWorkspace, PolynomialNonlinearity};
use crate::spectral_basis::{random_director, random_velocity, DirectorState, NormKind};

/// `beta(d1, d2) = (1 + ||d1||^(2N)_{L^(4N+2)} + ||d2||^(2N)_{L^(4N+2)})^2` with unit prefactor.
pub fn beta_functional(d1: &DirectorState, d2: &DirectorState, degree: usize) -> Result<f64> {
    let mut ws = OperatorWorkspace::new(d1.basis());
    beta_with(&mut ws, d1, d2, degree)
}

fn beta_with(ws: &mut OperatorWorkspace, d1: &DirectorState, d2: &DirectorState, degree: usize) -> Result<f64> {
    d1.basis().check_same(d2.basis())?;
    let q = 2 * degree + 1;
    let n = 2 * degree as i32;
    let a = ws.lebesgue_norm(d1, q)?.powi(n);
    let b = ws.lebesgue_norm(d2, q)?.powi(n);
    Ok((1.0 + a + b).powi(2))
}

/// Pieces of the two `f(d1) - f(d2)` pairing bounds for one pair, with the
/// smallest constants making each hold.
///
/// ```text
/// |<f(d1) - f(d2), w>|           <= k1 ||grad w||^2 + C(k1) |w|^2 beta
/// |<f(d1) - f(d2), Laplacian w>| <= k2 |Laplacian w|^2 + C(k2) (||grad w||^2 + |w|^2) beta
/// ```
///
/// with `w = d1 - d2`; the second bound uses one constant for `C_1(k2)` and `C_2(k2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FDifferenceReport {
    pub kappa1: f64,
    pub kappa2: f64,
    pub beta: f64,
    pub lhs_l2: f64,
    pub lhs_laplacian: f64,
    pub w_l2_sq: f64,
    pub w_grad_sq: f64,
    pub w_lap_sq: f64,
    pub c_kappa1: f64,
    pub c_kappa2: f64,
}

pub fn f_difference_inequalities(
    d1: &DirectorState,
    d2: &DirectorState,
    kappa1: f64,
    kappa2: f64,
    poly: &PolynomialNonlinearity,
) -> Result<FDifferenceReport> {
    let mut ws = OperatorWorkspace::new(d1.basis());
    f_difference_with(&mut ws, d1, d2, kappa1, kappa2, poly)
}

fn f_difference_with(
    ws: &mut OperatorWorkspace,
    d1: &DirectorState,
    d2: &DirectorState,
    kappa1: f64,
    kappa2: f64,
    poly: &PolynomialNonlinearity,
) -> Result<FDifferenceReport> {
    if !(kappa1 > 0.0 && kappa2 > 0.0) {
        return Err(Error::InvalidArgument("kappa values must be positive".into()));
    }
    let beta = beta_with(ws, d1, d2, poly.degree())?;
    let df = ws.polynomial_f(d1, poly)?.sub(&ws.polynomial_f(d2, poly)?);
    let w = d1.sub(d2);
    let lap_w = crate::operators::neumann_laplacian_apply(&w).scaled(-1.0);
    let lhs_l2 = df.inner(&w, NormKind::L2).abs();
    let lhs_laplacian = df.inner(&lap_w, NormKind::L2).abs();
    let w_l2_sq = w.norm_sq(NormKind::L2);
    let w_grad_sq = w.norm_sq(NormKind::H1Seminorm);
    let w_lap_sq = lap_w.norm_sq(NormKind::L2);
    let ratio = |num: f64, den: f64| if num <= 0.0 || den == 0.0 { 0.0 } else { num / den };
    Ok(FDifferenceReport {
        kappa1,
        kappa2,
        beta,
        lhs_l2,
        lhs_laplacian,
        w_l2_sq,
        w_grad_sq,
        w_lap_sq,
        c_kappa1: ratio(lhs_l2 - kappa1 * w_grad_sq, w_l2_sq * beta),
        c_kappa2: ratio(lhs_laplacian - kappa2 * w_lap_sq, (w_grad_sq + w_l2_sq) * beta),
    })
}

/// The `kappa` choices of the uniqueness proof.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappas {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
    pub k7: f64,
    pub k8: f64,
    pub k9: f64,
}

impl Default for Kappas {
    fn default() -> Self {
        Kappas {
            k1: 0.5,
            k2: 0.1,
            k3: 1.0 / 6.0,
            k4: 1.0 / 6.0,
            k5: 0.1,
            k6: 0.1,
            k7: 0.1,
            k8: 1.0 / 6.0,
            k9: 0.1,
        }
    }
}

/// Young constants `1/(4k)` and `1/(16 k k')` for the convective pairings;
/// `f`-pairing constants calibrated along the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConstants {
    pub c_k3: f64,
    pub c_k9: f64,
    pub c_k4_k5: f64,
    pub c_k6_k8: f64,
    pub c_k7: f64,
    pub c_k1: f64,
    pub c1_k2: f64,
    pub c2_k2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub kappas: Kappas,
    pub constants: WeightConstants,
    pub times: Vec<f64>,
    /// `D = |u1 - u2|^2 + |d1 - d2|^2 + ||grad d1 - grad d2||^2`.
    pub distance: Vec<f64>,
    pub upsilon: Vec<f64>,
    /// `Upsilon * D`.
    pub weighted: Vec<f64>,
    /// `int Upsilon (||grad u||^2 + ||grad d||^2 + |Laplacian d|^2) ds` of the difference.
    pub dissipation: Vec<f64>,
    pub beta: Vec<f64>,
    /// Smallest `C >= 0` with `Upsilon D <= e^(C t) D(0)` on this run.
    pub gronwall_constant: f64,
}

impl UniquenessReport {
    pub fn max_distance(&self) -> f64 {
        self.distance.iter().copied().fold(0.0, f64::max)
    }

    /// `Upsilon D <= (1 + slack) e^(C t) D(0)` at every sample.
    pub fn gronwall_holds(&self, c: f64, slack: f64) -> bool {
        let d0 = self.distance[0];
        self.times
            .iter()
            .zip(&self.weighted)
            .all(|(t, w)| *w <= (1.0 + slack) * (c * t).exp() * d0)
    }
}

/// Two runs driven by the same jump path from `ic_pair`, compared sample by sample.
pub fn uniqueness_experiment(config: &SimConfig, ic_pair: (&State, &State), seed: u64) -> Result<UniquenessReport> {
    uniqueness_with(config, ic_pair, seed, Kappas::default())
}

pub fn uniqueness_with(config: &SimConfig, ic_pair: (&State, &State), seed: u64, kappas: Kappas) -> Result<UniquenessReport> {
    if config.dim != 2 {
        return Err(Error::InvalidArgument(format!(
            "uniqueness experiment is defined for dim = 2, got {}",
            config.dim
        )));
    }
    let cfg = SimConfig {
        store_states: true,
        ..config.clone()
    };
    let events = sample_path(&cfg.noise, cfg.horizon, seed)?;
    let mut integ = Integrator::new(&cfg)?;
    let t1 = integ.run(ic_pair.0.clone(), seed, &events)?;
    let t2 = integ.run(ic_pair.1.clone(), seed, &events)?;
    compare(&t1, &t2, kappas)
}

fn compare(t1: &Trajectory, t2: &Trajectory, kappas: Kappas) -> Result<UniquenessReport> {
    if t1.samples.len() != t2.samples.len() {
        return Err(Error::Format("trajectories have different sample counts".into()));
    }
    let poly = &t1.config.poly;
    let mut ws = OperatorWorkspace::new(&t1.basis);
    let n = t1.samples.len();
    let mut times = Vec::with_capacity(n);
    let mut distance = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut diff_diss = Vec::with_capacity(n);
    let (mut c_k1, mut c_k2) = (0.0f64, 0.0f64);
    for (a, b) in t1.samples.iter().zip(&t2.samples) {
        let (sa, sb) = (a.state.as_ref().ok_or(Error::MissingStates)?, b.state.as_ref().ok_or(Error::MissingStates)?);
        let du = sa.velocity.sub(&sb.velocity);
        let dd = sa.director.sub(&sb.director);
        times.push(a.time);
        distance.push(du.norm_sq(NormKind::L2) + dd.norm_sq(NormKind::L2) + dd.norm_sq(NormKind::H1Seminorm));
        let lap_sq = crate::operators::neumann_laplacian_apply(&dd).norm_sq(NormKind::L2);
        diff_diss.push(du.norm_sq(NormKind::H1Seminorm) + dd.norm_sq(NormKind::H1Seminorm) + lap_sq);
        let r = f_difference_with(&mut ws, &sa.director, &sb.director, kappas.k1, kappas.k2, poly)?;
        beta.push(r.beta);
        c_k1 = c_k1.max(r.c_kappa1);
        c_k2 = c_k2.max(r.c_kappa2);
    }
    let young = |k: f64| 0.25 / k;
    let constants = WeightConstants {
        c_k3: young(kappas.k3),
        c_k9: young(kappas.k9),
        c_k4_k5: young(kappas.k4) * young(kappas.k5),
        c_k6_k8: young(kappas.k6) * young(kappas.k8),
        c_k7: young(kappas.k7),
        c_k1,
        c1_k2: c_k2,
        c2_k2: c_k2,
    };
    let c = &constants;
    let xi: Vec<f64> = t1
        .samples
        .iter()
        .zip(&t2.samples)
        .zip(&beta)
        .map(|((a, b), beta)| {
            let (l1, l2) = (&a.ledger, &b.ledger);
            let xi1 = c.c_k3 * l1.u_l2_sq * l1.u_grad_sq + c.c_k9 * l1.d_grad_sq;
            let xi2 = c.c_k4_k5 * l2.d_grad_sq * l2.d_lap_sq
                + c.c_k6_k8 * l1.d_grad_sq * l1.d_lap_sq
                + c.c_k7 * l2.u_l2_sq * l2.u_grad_sq
                + c.c1_k2 * beta;
            let xi3 = (c.c_k1 + c.c2_k2) * beta;
            xi1 + xi2 + xi3
        })
        .collect();
    let mut upsilon = vec![1.0; n];
    let mut acc = 0.0;
    for i in 1..n {
        acc += 0.5 * (times[i] - times[i - 1]) * (xi[i] + xi[i - 1]);
        upsilon[i] = (-2.0 * acc).exp();
    }
    let weighted: Vec<f64> = upsilon.iter().zip(&distance).map(|(y, d)| y * d).collect();
    let mut dissipation = vec![0.0; n];
    for i in 1..n {
        let h = times[i] - times[i - 1];
        dissipation[i] = dissipation[i - 1]
            + 0.5 * h * (upsilon[i] * diff_diss[i] + upsilon[i - 1] * diff_diss[i - 1]);
    }
    let d0 = distance[0];
    let mut gronwall_constant = 0.0f64;
    for (t, w) in times.iter().zip(&weighted) {
        if *w == 0.0 {
            continue;
        }
        if d0 == 0.0 || *t == 0.0 {
            if *w > d0 {
                gronwall_constant = f64::INFINITY;
            }
            continue;
        }
        gronwall_constant = gronwall_constant.max((w / d0).ln() / t);
    }
    Ok(UniquenessReport {
        kappas,
        constants,
        times,
        distance,
        upsilon,
        weighted,
        dissipation,
        beta,
        gronwall_constant,
    })
}

/// Initial condition of path `seed` and a copy displaced by `epsilon` in a
/// random unit direction (`|du|^2 + |dd|^2 = 1` before scaling).
pub fn perturbed_pair(config: &SimConfig, seed: u64, epsilon: f64) -> Result<(State, State)> {
    let basis = config.basis()?;
    let base = initial_state(config, &basis, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let du = random_velocity(&basis, &mut rng, 1.0, 2.0, 2);
    let dd = random_director(&basis, &mut rng, 1.0, 2.0, 2);
    let norm = (du.norm_sq(NormKind::L2) + dd.norm_sq(NormKind::L2)).sqrt();
    let mut other = base.clone();
    other.velocity.add_scaled(&du, epsilon / norm);
    other.director.add_scaled(&dd, epsilon / norm);
    Ok((base, other))
}
