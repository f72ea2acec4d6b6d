//! Compound Poisson noise with finite intensity, the coefficient families
//! `F(t, u; y)`, their compensators and Monte-Carlo verifiers.
//!
//! Every built-in family factors as `F(t, u; y) = c(y) g(u)` with a scalar
//! mark map `c(y) = offset + slope * y[0]`, which gives closed forms for the
//! compensator `lambda E[c] g(u)` and for the constants `L` and `C_p`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::distributions::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use crate::error::{Error, Result};
use crate::spectral_basis::{Basis, NormKind, SpectralVelocity};

/// Normalised mark law `nu / lambda` on `R^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarkDistribution {
    /// Independent uniform coordinates on `[low_i, high_i]`.
    Uniform { low: Vec<f64>, high: Vec<f64> },
    /// Independent normal coordinates.
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
    /// Finitely many atoms with non-negative weights (normalised internally).
    Discrete { points: Vec<Vec<f64>>, weights: Vec<f64> },
}

impl Default for MarkDistribution {
    fn default() -> Self {
        MarkDistribution::Gaussian {
            mean: vec![0.0],
            std: vec![1.0],
        }
    }
}

/// Law of the first mark coordinate, which is all `c(y)` sees.
enum Marginal {
    Uniform(f64, f64),
    Gaussian(f64, f64),
    Discrete(Vec<(f64, f64)>),
}

impl MarkDistribution {
    pub fn mark_dim(&self) -> usize {
        match self {
            MarkDistribution::Uniform { low, .. } => low.len(),
            MarkDistribution::Gaussian { mean, .. } => mean.len(),
            MarkDistribution::Discrete { points, .. } => points.first().map_or(0, Vec::len),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidNoise(m));
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            MarkDistribution::Uniform { low, high } => {
                if low.is_empty() || low.len() != high.len() {
                    return bad("uniform marks need equal, non-empty `low` and `high`".into());
                }
                if !finite(low) || !finite(high) || low.iter().zip(high).any(|(l, h)| l > h) {
                    return bad("uniform marks need finite bounds with low <= high".into());
                }
            }
            MarkDistribution::Gaussian { mean, std } => {
                if mean.is_empty() || mean.len() != std.len() {
                    return bad("gaussian marks need equal, non-empty `mean` and `std`".into());
                }
                if !finite(mean) || !finite(std) || std.iter().any(|s| *s < 0.0) {
                    return bad("gaussian marks need finite mean and std >= 0".into());
                }
            }
            MarkDistribution::Discrete { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return bad("discrete marks need as many weights as points".into());
                }
                let m = points[0].len();
                if m == 0 || points.iter().any(|p| p.len() != m || !finite(p)) {
                    return bad("discrete mark points must share a non-zero dimension".into());
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
                    return bad("discrete weights must be non-negative with positive sum".into());
                }
            }
        }
        Ok(())
    }

    fn marginal(&self) -> Marginal {
        match self {
            MarkDistribution::Uniform { low, high } => Marginal::Uniform(low[0], high[0]),
            MarkDistribution::Gaussian { mean, std } => Marginal::Gaussian(mean[0], std[0]),
            MarkDistribution::Discrete { points, weights } => {
                let total: f64 = weights.iter().sum();
                Marginal::Discrete(points.iter().zip(weights).map(|(p, w)| (p[0], w / total)).collect())
            }
        }
    }
}

/// Pre-built sampler for one mark law.
enum MarkSampler {
    Uniform(Vec<Uniform<f64>>),
    Gaussian(Vec<Normal<f64>>),
    Discrete(WeightedIndex<f64>, Vec<Vec<f64>>),
}

impl MarkSampler {
    fn new(dist: &MarkDistribution) -> Self {
        match dist {
            MarkDistribution::Uniform { low, high } => MarkSampler::Uniform(
                low.iter()
                    .zip(high)
                    .map(|(l, h)| Uniform::new_inclusive(*l, *h))
                    .collect(),
            ),
            MarkDistribution::Gaussian { mean, std } => {
                MarkSampler::Gaussian(mean.iter().zip(std).map(|(m, s)| Normal::new(*m, *s).unwrap()).collect())
            }
            MarkDistribution::Discrete { points, weights } => {
                MarkSampler::Discrete(WeightedIndex::new(weights).unwrap(), points.clone())
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            MarkSampler::Uniform(u) => u.iter().map(|d| d.sample(rng)).collect(),
            MarkSampler::Gaussian(g) => g.iter().map(|d| d.sample(rng)).collect(),
            MarkSampler::Discrete(w, pts) => pts[w.sample(rng)].clone(),
        }
    }
}

/// Scalar mark map `c(y) = offset + slope * y[0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarMap {
    pub offset: f64,
    pub slope: f64,
}

impl Default for ScalarMap {
    fn default() -> Self {
        Self {
            offset: 0.0,
            slope: 0.1,
        }
    }
}

impl ScalarMap {
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.offset + self.slope * y[0]
    }
}

/// Fixed velocity profile of the additive family: a unit cosine mode, scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub wavevector: Vec<i32>,
    #[serde(default)]
    pub polarization: usize,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseFamily {
    /// `F = c(y) phi`.
    Additive { shape: ShapeSpec },
    /// `F = c(y) u`.
    LinearMultiplicative,
    /// `F = c(y) u / (1 + |u|_H)`.
    BoundedMultiplicative,
}

/// Finite-intensity Poisson noise: rate `lambda = nu(Y)`, marks and coefficient family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoiseSpec")]
pub struct NoiseSpec {
    /// Total intensity `lambda`; zero switches the noise off.
    pub rate: f64,
    pub marks: MarkDistribution,
    pub scale: ScalarMap,
    #[serde(flatten)]
    pub family: NoiseFamily,
}

/// Input form of [`NoiseSpec`]: every key optional, `family` defaulting to
/// `linear_multiplicative`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoiseSpec {
    rate: Option<f64>,
    marks: Option<MarkDistribution>,
    scale: Option<ScalarMap>,
    family: Option<String>,
    shape: Option<ShapeSpec>,
}

impl TryFrom<RawNoiseSpec> for NoiseSpec {
    type Error = String;

    fn try_from(raw: RawNoiseSpec) -> std::result::Result<Self, String> {
        let d = NoiseSpec::default();
        let family = match (raw.family.as_deref().unwrap_or("linear_multiplicative"), raw.shape) {
            ("additive", Some(shape)) => NoiseFamily::Additive { shape },
            ("additive", None) => return Err("family `additive` needs a `shape`".into()),
            (_, Some(_)) => return Err("`shape` only applies to family `additive`".into()),
            ("linear_multiplicative", None) => NoiseFamily::LinearMultiplicative,
            ("bounded_multiplicative", None) => NoiseFamily::BoundedMultiplicative,
            (other, None) => {
                return Err(format!(
                    "unknown family `{other}`, expected one of `additive`, `linear_multiplicative`, `bounded_multiplicative`"
                ))
            }
        };
        Ok(NoiseSpec {
            rate: raw.rate.unwrap_or(d.rate),
            marks: raw.marks.unwrap_or(d.marks),
            scale: raw.scale.unwrap_or(d.scale),
            family,
        })
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            rate: 5.0,
            marks: MarkDistribution::default(),
            scale: ScalarMap::default(),
            family: NoiseFamily::LinearMultiplicative,
        }
    }
}

/// One atom of the Poisson random measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub mark: Vec<f64>,
}

/// Closed-form constants of the noise-coefficient bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConstants {
    /// `int |F(u1) - F(u2)|^2 dnu <= L |u1 - u2|^2`.
    pub lipschitz: f64,
    /// `(p, C_p)` with `int |F(u)|^p dnu <= C_p (1 + |u|^p)`.
    pub growth: Vec<(u32, f64)>,
}

impl NoiseSpec {
    pub fn off() -> Self {
        Self {
            rate: 0.0,
            ..Self::default()
        }
    }

    /// Check the specification on its own and, for the additive family, against `basis`.
    pub fn validate(&self, basis: Option<&Arc<Basis>>) -> Result<()> {
        if !self.rate.is_finite() || self.rate < 0.0 {
            return Err(Error::InvalidNoise(format!(
                "rate must be finite and >= 0, got {}",
                self.rate
            )));
        }
        self.marks.validate()?;
        if !self.scale.offset.is_finite() || !self.scale.slope.is_finite() {
            return Err(Error::InvalidNoise("scale offset and slope must be finite".into()));
        }
        if let (NoiseFamily::Additive { shape }, Some(b)) = (&self.family, basis) {
            self.shape(b, shape)?;
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.rate > 0.0
    }

    fn shape(&self, basis: &Arc<Basis>, shape: &ShapeSpec) -> Result<SpectralVelocity> {
        if !shape.amplitude.is_finite() {
            return Err(Error::InvalidNoise("shape amplitude must be finite".into()));
        }
        SpectralVelocity::cos_mode(basis, &shape.wavevector, shape.polarization, shape.amplitude)
            .map_err(|e| Error::InvalidNoise(format!("additive shape: {e}")))
    }

    /// `g(u)` with `F(t, u; y) = c(y) g(u)`.
    pub fn coefficient_profile(&self, u: &SpectralVelocity) -> Result<SpectralVelocity> {
        match &self.family {
            NoiseFamily::Additive { shape } => self.shape(u.basis(), shape),
            NoiseFamily::LinearMultiplicative => Ok(u.clone()),
            NoiseFamily::BoundedMultiplicative => Ok(u.scaled(1.0 / (1.0 + u.l2_norm()))),
        }
    }

    /// `E_{nu/lambda} |c(Y)|^p` in closed form (`p` in {1, 2, 4}, and `p = 0`).
    pub fn mark_moment(&self, p: u32) -> Result<f64> {
        let (a, b) = (self.scale.offset, self.scale.slope);
        let m = match self.marks.marginal() {
            Marginal::Uniform(lo, hi) => {
                let (x0, x1) = (a + b * lo, a + b * hi);
                let (x0, x1) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
                if x1 - x0 == 0.0 {
                    x0.abs().powi(p as i32)
                } else {
                    let prim = |x: f64| x.signum() * x.abs().powi(p as i32 + 1) / (p + 1) as f64;
                    (prim(x1) - prim(x0)) / (x1 - x0)
                }
            }
            Marginal::Gaussian(mean, std) => {
                let mu = a + b * mean;
                let s = b.abs() * std;
                match p {
                    0 => 1.0,
                    1 => {
                        if s == 0.0 {
                            mu.abs()
                        } else {
                            let z = StatNormal::new(0.0, 1.0).unwrap();
                            s * (2.0 / PI).sqrt() * (-mu * mu / (2.0 * s * s)).exp()
                                + mu * (1.0 - 2.0 * z.cdf(-mu / s))
                        }
                    }
                    2 => mu * mu + s * s,
                    4 => mu.powi(4) + 6.0 * mu * mu * s * s + 3.0 * s.powi(4),
                    _ => return Err(Error::InvalidArgument(format!("moment p = {p} not available in closed form"))),
                }
            }
            Marginal::Discrete(atoms) => atoms
                .iter()
                .map(|(y, w)| w * (a + b * y).abs().powi(p as i32))
                .sum(),
        };
        if !matches!(p, 0 | 1 | 2 | 4) {
            return Err(Error::InvalidArgument(format!("moment p = {p} not supported")));
        }
        Ok(m)
    }

    /// `E_{nu/lambda} c(Y)`.
    pub fn mark_mean(&self) -> f64 {
        let (a, b) = (self.scale.offset, self.scale.slope);
        let ey = match self.marks.marginal() {
            Marginal::Uniform(lo, hi) => 0.5 * (lo + hi),
            Marginal::Gaussian(m, _) => m,
            Marginal::Discrete(atoms) => atoms.iter().map(|(y, w)| y * w).sum(),
        };
        a + b * ey
    }

    /// `L` and `C_p` for `p` in {1, 2, 4}; additive constants use `|phi|` on `basis`.
    pub fn analytic_constants(&self, basis: &Arc<Basis>) -> Result<AnalyticConstants> {
        let lam = self.rate;
        let (lipschitz, profile_norm) = match &self.family {
            NoiseFamily::Additive { shape } => (0.0, self.shape(basis, shape)?.l2_norm()),
            _ => (lam * self.mark_moment(2)?, 1.0),
        };
        let growth = [1u32, 2, 4]
            .iter()
            .map(|&p| Ok((p, lam * self.mark_moment(p)? * profile_norm.powi(p as i32))))
            .collect::<Result<_>>()?;
        Ok(AnalyticConstants { lipschitz, growth })
    }

    /// Draw the mark of one jump.
    pub fn sample_mark<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        MarkSampler::new(&self.marks).sample(rng)
    }
}

/// `F(t, u; y)`.
pub fn noise_coefficient(spec: &NoiseSpec, _t: f64, u: &SpectralVelocity, y: &[f64]) -> Result<SpectralVelocity> {
    Ok(spec.coefficient_profile(u)?.scaled(spec.scale.eval(y)))
}

/// `int_Y F(t, u; y) nu(dy) = lambda E[c] g(u)`.
pub fn compensator_drift(spec: &NoiseSpec, _t: f64, u: &SpectralVelocity) -> Result<SpectralVelocity> {
    if !spec.is_active() {
        return Ok(SpectralVelocity::zeros(u.basis()));
    }
    Ok(spec.coefficient_profile(u)?.scaled(spec.rate * spec.mark_mean()))
}

/// Jump times and marks on `(0, T]`: exponential gaps of rate `lambda`, i.i.d. marks.
pub fn sample_path(spec: &NoiseSpec, horizon: f64, seed: u64) -> Result<Vec<JumpEvent>> {
    spec.validate(None)?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if !spec.is_active() {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(spec.rate).map_err(|e| Error::InvalidNoise(e.to_string()))?;
    let marks = MarkSampler::new(&spec.marks);
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        t += gap.sample(&mut rng);
        if t > horizon {
            break;
        }
        events.push(JumpEvent {
            time: t,
            mark: marks.sample(&mut rng),
        });
    }
    Ok(events)
}

/// Seed of path `index` in an ensemble with `master` seed (SplitMix64 finaliser).
pub fn path_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic integrand `xi(s, y) = F(s, u_i; y)` for `s` in `[t_i, t_{i+1})`.
#[derive(Debug, Clone)]
pub struct StepProcess {
    /// `0 = t_0 < t_1 < ... < t_m = T`.
    pub breakpoints: Vec<f64>,
    /// One state per interval.
    pub states: Vec<SpectralVelocity>,
}

impl StepProcess {
    pub fn constant(state: SpectralVelocity, horizon: f64) -> Self {
        Self {
            breakpoints: vec![0.0, horizon],
            states: vec![state],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.breakpoints.len() != self.states.len() + 1 || self.states.is_empty() {
            return Err(Error::InvalidArgument(
                "step process needs one state per interval".into(),
            ));
        }
        if self.breakpoints[0] != 0.0 || self.breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(
                "step process breakpoints must start at 0 and increase strictly".into(),
            ));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    fn interval(&self, t: f64) -> usize {
        // right-open cells; t lies in (0, T]
        let i = self.breakpoints.partition_point(|&b| b <= t);
        (i.max(1) - 1).min(self.states.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub paths: usize,
    pub empirical_second_moment: f64,
    pub analytic_value: f64,
    pub standard_error: f64,
    pub z_score: f64,
}

impl IsometryReport {
    pub fn within(&self, sigmas: f64) -> bool {
        self.z_score.abs() <= sigmas
    }
}

/// Monte-Carlo check of `E|int int xi d(eta~)|^2 = E int int |xi|^2 dnu ds`.
pub fn verify_isometry(spec: &NoiseSpec, xi: &StepProcess, n_paths: usize, seed: u64) -> Result<IsometryReport> {
    xi.validate()?;
    if n_paths < 2 {
        return Err(Error::InsufficientPaths { got: n_paths, needed: 2 });
    }
    let basis = xi.states[0].basis().clone();
    spec.validate(Some(&basis))?;
    let horizon = xi.horizon();
    let profiles: Vec<SpectralVelocity> = xi
        .states
        .iter()
        .map(|u| spec.coefficient_profile(u))
        .collect::<Result<_>>()?;
    let mean_c = spec.mark_mean();
    let mut compensator = SpectralVelocity::zeros(&basis);
    let mut analytic = 0.0;
    for (i, g) in profiles.iter().enumerate() {
        let dt = xi.breakpoints[i + 1] - xi.breakpoints[i];
        compensator.add_scaled(g, spec.rate * mean_c * dt);
        analytic += dt * spec.rate * spec.mark_moment(2)? * g.norm_sq(NormKind::L2);
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for path in 0..n_paths {
        let events = sample_path(spec, horizon, path_seed(seed, path as u64))?;
        let mut integral = compensator.scaled(-1.0);
        for ev in &events {
            let i = xi.interval(ev.time);
            integral.add_scaled(&profiles[i], spec.scale.eval(&ev.mark));
        }
        let x = integral.norm_sq(NormKind::L2);
        sum += x;
        sum_sq += x * x;
    }
    let n = n_paths as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    let se = (var / n).sqrt();
    let diff = mean - analytic;
    let z_score = if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-15 * analytic.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    Ok(IsometryReport {
        paths: n_paths,
        empirical_second_moment: mean,
        analytic_value: analytic,
        standard_error: se,
        z_score,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantCheck {
    pub name: String,
    pub empirical_max: f64,
    pub analytic: f64,
}

impl ConstantCheck {
    /// Empirical value does not exceed the analytic constant by more than `rel`.
    pub fn holds(&self, rel: f64) -> bool {
        self.empirical_max <= self.analytic * (1.0 + rel) + 1e-300
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionBReport {
    pub pairs: usize,
    pub marks: usize,
    pub checks: Vec<ConstantCheck>,
}

/// Monte-Carlo Lipschitz and growth ratios over random states, compared with
/// the closed-form constants. Marks are shared by every state pair.
pub fn verify_assumption_b(
    spec: &NoiseSpec,
    basis: &Arc<Basis>,
    n_pairs: usize,
    n_marks: usize,
    seed: u64,
) -> Result<AssumptionBReport> {
    spec.validate(Some(basis))?;
    if n_pairs == 0 || n_marks == 0 {
        return Err(Error::InvalidArgument("need at least one pair and one mark".into()));
    }
    let constants = spec.analytic_constants(basis)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = MarkSampler::new(&spec.marks);
    let powers = [1u32, 2, 4];
    let mut mc = [0.0f64; 3];
    let mut mc_sq = 0.0;
    for _ in 0..n_marks {
        let c = spec.scale.eval(&sampler.sample(&mut rng));
        mc_sq += c * c;
        for (slot, &p) in mc.iter_mut().zip(&powers) {
            *slot += c.abs().powi(p as i32);
        }
    }
    let lam = spec.rate;
    let mc_sq = lam * mc_sq / n_marks as f64;
    let mc: Vec<f64> = mc.iter().map(|s| lam * s / n_marks as f64).collect();

    let mut lip = 0.0f64;
    let mut growth = [0.0f64; 3];
    let k = basis.cutoff();
    for _ in 0..n_pairs {
        let draw = |rng: &mut ChaCha8Rng| {
            let amp = 10f64.powf(rng.gen_range(-3.0..3.0));
            let slope = rng.gen_range(0.0..2.0);
            let band = rng.gen_range(1..=k);
            crate::spectral_basis::random_velocity(basis, rng, amp, slope, band)
        };
        let u1 = draw(&mut rng);
        let mut u2 = draw(&mut rng);
        // near-coincident pairs probe the local Lipschitz constant
        if rng.gen_bool(0.5) {
            let mut close = u1.clone();
            close.add_scaled(&u2, 1e-3 / u2.l2_norm().max(1e-300) * u1.l2_norm());
            u2 = close;
        }
        let g1 = spec.coefficient_profile(&u1)?;
        let g2 = spec.coefficient_profile(&u2)?;
        let du = u1.sub(&u2).norm_sq(NormKind::L2);
        if du > 0.0 {
            lip = lip.max(mc_sq * g1.sub(&g2).norm_sq(NormKind::L2) / du);
        }
        for (i, &p) in powers.iter().enumerate() {
            let r = u1.l2_norm();
            let ratio = mc[i] * g1.l2_norm().powi(p as i32) / (1.0 + r.powi(p as i32));
            growth[i] = growth[i].max(ratio);
        }
    }
    let mut checks = vec![ConstantCheck {
        name: "lipschitz".into(),
        empirical_max: lip,
        analytic: constants.lipschitz,
    }];
    for (i, (p, c)) in constants.growth.iter().enumerate() {
        checks.push(ConstantCheck {
            name: format!("growth_p{p}"),
            empirical_max: growth[i],
            analytic: *c,
        });
    }
    Ok(AssumptionBReport {
        pairs: n_pairs,
        marks: n_marks,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_basis::{build_basis, random_velocity};

    fn linear(rate: f64) -> NoiseSpec {
        NoiseSpec {
            rate,
            ..NoiseSpec::default()
        }
    }

    #[test]
    fn paths_are_deterministic_and_ordered() {
        let spec = linear(4.0);
        let a = sample_path(&spec, 3.0, 42).unwrap();
        let b = sample_path(&spec, 3.0, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].time < w[1].time));
        assert!(a.iter().all(|e| e.time > 0.0 && e.time <= 3.0));
        assert!(sample_path(&spec, 1e-12, 1).unwrap().is_empty());
        assert!(sample_path(&spec, 0.0, 1).is_err());
        assert!(sample_path(&NoiseSpec::off(), 5.0, 1).unwrap().is_empty());
    }

    #[test]
    fn poisson_mean_count() {
        let spec = linear(2.0);
        let n = 10_000;
        let total: usize = (0..n)
            .map(|i| sample_path(&spec, 3.0, path_seed(5, i)).unwrap().len())
            .sum();
        let mean = total as f64 / n as f64;
        // Poisson(6): standard error sqrt(6 / n)
        assert!((mean - 6.0).abs() < 3.0 * (6.0 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn disjoint_interval_counts_uncorrelated() {
        let spec = linear(3.0);
        let n = 10_000;
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let ev = sample_path(&spec, 2.0, path_seed(17, i)).unwrap();
            let a = ev.iter().filter(|e| e.time <= 1.0).count() as f64;
            let b = ev.len() as f64 - a;
            sa += a;
            sb += b;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
        let nf = n as f64;
        let cov = sab / nf - sa * sb / nf / nf;
        let va = saa / nf - (sa / nf).powi(2);
        let vb = sbb / nf - (sb / nf).powi(2);
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 3.0 / nf.sqrt(), "{corr}");
    }

    #[test]
    fn thinning_keeps_poisson_rate() {
        let spec = NoiseSpec {
            rate: 4.0,
            marks: MarkDistribution::Uniform {
                low: vec![0.0],
                high: vec![1.0],
            },
            ..NoiseSpec::default()
        };
        let n = 10_000;
        let counts: Vec<f64> = (0..n)
            .map(|i| {
                sample_path(&spec, 1.0, path_seed(23, i))
                    .unwrap()
                    .iter()
                    .filter(|e| e.mark[0] < 0.25)
                    .count() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 1.0).abs() < 3.0 * (1.0 / n as f64).sqrt());
        // Poisson: variance equals mean
        assert!((var - 1.0).abs() < 0.1);
    }

    #[test]
    fn compensated_increments_have_zero_mean() {
        let spec = NoiseSpec {
            rate: 3.0,
            marks: MarkDistribution::Uniform {
                low: vec![0.0],
                high: vec![2.0],
            },
            scale: ScalarMap { offset: 0.5, slope: 1.0 },
            family: NoiseFamily::LinearMultiplicative,
        };
        let n = 20_000;
        let ec = spec.mark_mean();
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let ev = sample_path(&spec, 1.0, path_seed(3, i)).unwrap();
                ev.iter()
                    .filter(|e| e.time > 0.5)
                    .map(|e| spec.scale.eval(&e.mark))
                    .sum::<f64>()
                    - spec.rate * ec * 0.5
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!(mean.abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn family_properties() {
        let b = build_basis(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u1 = random_velocity(&b, &mut rng, 2.0, 1.0, 2);
        let u2 = random_velocity(&b, &mut rng, 0.5, 1.0, 2);
        let add = NoiseSpec {
            family: NoiseFamily::Additive {
                shape: ShapeSpec {
                    wavevector: vec![1, 0],
                    polarization: 0,
                    amplitude: 1.0,
                },
            },
            ..NoiseSpec::default()
        };
        let y = [0.7];
        assert_eq!(
            noise_coefficient(&add, 0.0, &u1, &y).unwrap(),
            noise_coefficient(&add, 0.0, &u2, &y).unwrap()
        );
        let lin = linear(1.0);
        let z = SpectralVelocity::zeros(&b);
        assert_eq!(noise_coefficient(&lin, 0.0, &z, &y).unwrap().l2_norm(), 0.0);
        assert_eq!(compensator_drift(&lin, 0.0, &z).unwrap().l2_norm(), 0.0);
        let bounded = NoiseSpec {
            family: NoiseFamily::BoundedMultiplicative,
            ..NoiseSpec::default()
        };
        for amp in [1e-3, 1.0, 1e3, 1e6] {
            let u = random_velocity(&b, &mut rng, amp, 0.5, 2);
            for yy in [-5.0, 0.1, 3.0] {
                let c = bounded.scale.eval(&[yy]).abs();
                assert!(noise_coefficient(&bounded, 0.0, &u, &[yy]).unwrap().l2_norm() <= c);
            }
        }
        // gaussian marks centred at zero with c(y) = 0.1 y: symmetric, no drift
        assert_eq!(compensator_drift(&add, 0.0, &u1).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn closed_form_moments_match_sampling() {
        let specs = [
            NoiseSpec {
                rate: 1.0,
                marks: MarkDistribution::Gaussian {
                    mean: vec![0.4],
                    std: vec![1.3],
                },
                scale: ScalarMap { offset: -0.2, slope: 0.7 },
                family: NoiseFamily::LinearMultiplicative,
            },
            NoiseSpec {
                rate: 1.0,
                marks: MarkDistribution::Uniform {
                    low: vec![-1.0],
                    high: vec![2.0],
                },
                scale: ScalarMap { offset: 0.3, slope: -1.1 },
                family: NoiseFamily::LinearMultiplicative,
            },
            NoiseSpec {
                rate: 1.0,
                marks: MarkDistribution::Discrete {
                    points: vec![vec![-1.0], vec![2.0], vec![0.5]],
                    weights: vec![1.0, 2.0, 1.0],
                },
                scale: ScalarMap { offset: 0.0, slope: 1.0 },
                family: NoiseFamily::LinearMultiplicative,
            },
        ];
        for spec in &specs {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let n = 400_000;
            let draws: Vec<f64> = (0..n).map(|_| spec.scale.eval(&spec.sample_mark(&mut rng))).collect();
            for p in [1u32, 2, 4] {
                let xs: Vec<f64> = draws.iter().map(|c| c.abs().powi(p as i32)).collect();
                let mean = xs.iter().sum::<f64>() / n as f64;
                let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
                let exact = spec.mark_moment(p).unwrap();
                assert!((mean - exact).abs() < 4.0 * sd / (n as f64).sqrt(), "p={p} {mean} {exact}");
            }
            let mean = draws.iter().sum::<f64>() / n as f64;
            assert!((mean - spec.mark_mean()).abs() < 0.02);
        }
    }

    #[test]
    fn isometry_trivial_cases() {
        let b = build_basis(2, 2).unwrap();
        let spec = linear(1.0);
        let zero = StepProcess::constant(SpectralVelocity::zeros(&b), 1.0);
        let r = verify_isometry(&spec, &zero, 100, 1).unwrap();
        assert_eq!(r.empirical_second_moment, 0.0);
        assert_eq!(r.analytic_value, 0.0);
        assert_eq!(r.z_score, 0.0);

        let unit = NoiseSpec {
            rate: 1.0,
            marks: MarkDistribution::Discrete {
                points: vec![vec![0.0]],
                weights: vec![1.0],
            },
            scale: ScalarMap { offset: 1.0, slope: 0.0 },
            family: NoiseFamily::LinearMultiplicative,
        };
        let e = SpectralVelocity::cos_mode(&b, &[1, 1], 0, 1.0).unwrap();
        let r = verify_isometry(&unit, &StepProcess::constant(e, 1.0), 20_000, 2).unwrap();
        assert!((r.analytic_value - 1.0).abs() < 1e-14);
        assert!(r.within(4.0), "{r:?}");
    }

    #[test]
    fn step_process_intervals() {
        let b = build_basis(2, 1).unwrap();
        let s = StepProcess {
            breakpoints: vec![0.0, 0.5, 1.0],
            states: vec![SpectralVelocity::zeros(&b), SpectralVelocity::zeros(&b)],
        };
        assert_eq!(s.interval(0.1), 0);
        assert_eq!(s.interval(0.5), 1);
        assert_eq!(s.interval(1.0), 1);
        let bad = StepProcess {
            breakpoints: vec![0.0, 0.5, 0.5],
            states: s.states.clone(),
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn assumption_b_constants() {
        let b = build_basis(2, 2).unwrap();
        let r = verify_assumption_b(&linear(5.0), &b, 200, 200_000, 4).unwrap();
        for c in &r.checks {
            assert!(c.holds(0.01), "{c:?}");
        }
        // linear family: every Lipschitz ratio is lambda * mean(c^2)
        let lip = &r.checks[0];
        assert!((lip.empirical_max / lip.analytic - 1.0).abs() < 0.01);
        let add = NoiseSpec {
            family: NoiseFamily::Additive {
                shape: ShapeSpec {
                    wavevector: vec![0, 1],
                    polarization: 0,
                    amplitude: 2.0,
                },
            },
            ..NoiseSpec::default()
        };
        let r = verify_assumption_b(&add, &b, 50, 10_000, 4).unwrap();
        assert_eq!(r.checks[0].empirical_max, 0.0);
        assert_eq!(r.checks[0].analytic, 0.0);
    }

    #[test]
    fn spec_validation_and_serde() {
        let b = build_basis(2, 2).unwrap();
        let mut s = linear(-1.0);
        assert!(s.validate(None).is_err());
        s.rate = 1.0;
        s.marks = MarkDistribution::Uniform {
            low: vec![1.0],
            high: vec![0.0],
        };
        assert!(s.validate(None).is_err());
        let far = NoiseSpec {
            family: NoiseFamily::Additive {
                shape: ShapeSpec {
                    wavevector: vec![5, 0],
                    polarization: 0,
                    amplitude: 1.0,
                },
            },
            ..NoiseSpec::default()
        };
        assert!(far.validate(Some(&b)).is_err());
        let text = r#"{"rate":2.0,"family":"bounded_multiplicative","marks":{"kind":"uniform","low":[0],"high":[1]}}"#;
        let parsed: NoiseSpec = serde_json::from_str(text).unwrap();
        assert_eq!(parsed.family, NoiseFamily::BoundedMultiplicative);
        assert_eq!(parsed.scale, ScalarMap::default());
        let back: NoiseSpec = serde_json::from_str(&serde_json::to_string(&parsed).unwrap()).unwrap();
        assert_eq!(back, parsed);
        let bare: NoiseSpec = serde_json::from_str(r#"{"rate":1.5}"#).unwrap();
        assert_eq!(bare.family, NoiseFamily::LinearMultiplicative);
        let additive = r#"{"family":"additive","shape":{"wavevector":[1,0]}}"#;
        assert!(matches!(serde_json::from_str::<NoiseSpec>(additive).unwrap().family, NoiseFamily::Additive { .. }));
        for bad in [r#"{"family":"additive"}"#, r#"{"family":"cubic"}"#, r#"{"shape":{"wavevector":[1,0]}}"#, r#"{"bogus":1}"#] {
            assert!(serde_json::from_str::<NoiseSpec>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn path_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| path_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(path_seed(1, 0), path_seed(2, 0));
    }
}
