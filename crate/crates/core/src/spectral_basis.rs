//! Fourier eigenbases of the Stokes operator and the vector Laplacian on the
//! periodic box `[0, 2pi]^n`, together with transforms, projections and norms.
//!
//! Physical fields are expanded as
//!
//! ```text
//! v(x) = (2 pi)^(-n/2) * sum_k  c(k) exp(i k.x)
//! ```
//!
//! so that the exponentials are orthonormal in `L^2` and every norm is a
//! weighted Parseval sum over the stored coefficients. Coefficients are kept
//! for every wavevector `k` and `-k`; real fields carry Hermitian pairs.
//!
//! Velocity fields are stored in polarization coordinates: for each nonzero
//! `k` there are `n - 1` real unit vectors orthogonal to `k`, shared between
//! `k` and `-k`, so a velocity is divergence-free and Hermitian by
//! construction.

use std::borrow::Cow;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fft::GridFft;

/// Largest cutoff accepted by [`build_basis`] in two dimensions.
pub const MAX_CUTOFF_2D: usize = 64;
/// Largest cutoff accepted by [`build_basis`] in three dimensions.
pub const MAX_CUTOFF_3D: usize = 16;

pub type Wavevector = [i32; 3];

/// The retained wavevectors, their eigenvalues and the polarization frames.
#[derive(Debug, Clone)]
pub struct Basis {
    dim: usize,
    cutoff: usize,
    /// Every `k` with `|k|_inf <= K`, lexicographic; unused trailing entries are 0.
    wavevectors: Vec<Wavevector>,
    eigenvalues: Vec<f64>,
    negation: Vec<usize>,
    zero_index: usize,
    /// Indices into `wavevectors` of the nonzero modes, in order.
    velocity_modes: Vec<usize>,
    /// Polarization vectors per velocity mode (first `dim - 1` used).
    frames: Vec<[[f64; 3]; 2]>,
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.cutoff == other.cutoff
    }
}

/// Build the basis for dimension `dim` and per-axis cutoff `cutoff`.
pub fn build_basis(dim: usize, cutoff: usize) -> Result<Arc<Basis>> {
    let max = match dim {
        2 => MAX_CUTOFF_2D,
        3 => MAX_CUTOFF_3D,
        d => return Err(Error::UnsupportedDim(d)),
    };
    if cutoff == 0 || cutoff > max {
        return Err(Error::InvalidCutoff { dim, cutoff, max });
    }
    let k = cutoff as i32;
    let side = 2 * cutoff + 1;
    let mut wavevectors = Vec::with_capacity(side.pow(dim as u32));
    if dim == 2 {
        for a in -k..=k {
            for b in -k..=k {
                wavevectors.push([a, b, 0]);
            }
        }
    } else {
        for a in -k..=k {
            for b in -k..=k {
                for c in -k..=k {
                    wavevectors.push([a, b, c]);
                }
            }
        }
    }
    let n = wavevectors.len();
    let zero_index = n / 2;
    debug_assert_eq!(wavevectors[zero_index], [0, 0, 0]);
    // lexicographic symmetric enumeration: index of -k is the mirror index
    let negation: Vec<usize> = (0..n).map(|i| n - 1 - i).collect();
    let eigenvalues = wavevectors
        .iter()
        .map(|w| w.iter().map(|&c| (c * c) as f64).sum())
        .collect();
    let velocity_modes: Vec<usize> = (0..n).filter(|&i| i != zero_index).collect();
    let frames = velocity_modes
        .iter()
        .map(|&i| polarization_frame(dim, canonical(wavevectors[i])))
        .collect();
    Ok(Arc::new(Basis {
        dim,
        cutoff,
        wavevectors,
        eigenvalues,
        negation,
        zero_index,
        velocity_modes,
        frames,
    }))
}

/// Representative of `{k, -k}` whose first nonzero component is positive.
fn canonical(k: Wavevector) -> Wavevector {
    let first = k.iter().copied().find(|&c| c != 0).unwrap_or(0);
    if first < 0 {
        [-k[0], -k[1], -k[2]]
    } else {
        k
    }
}

fn polarization_frame(dim: usize, k: Wavevector) -> [[f64; 3]; 2] {
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let norm = dot(&kf, &kf).sqrt();
    if dim == 2 {
        return [[-kf[1] / norm, kf[0] / norm, 0.0], [0.0; 3]];
    }
    // axis least aligned with k, ties broken by lowest index
    let mut axis = 0;
    for a in 1..3 {
        if kf[a].abs() < kf[axis].abs() {
            axis = a;
        }
    }
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let mut p1 = cross(&kf, &e);
    let n1 = dot(&p1, &p1).sqrt();
    p1.iter_mut().for_each(|c| *c /= n1);
    let khat = [kf[0] / norm, kf[1] / norm, kf[2] / norm];
    let p2 = cross(&khat, &p1);
    [p1, p2]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl Basis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// All retained wavevectors, including `k = 0`.
    pub fn wavevectors(&self) -> &[Wavevector] {
        &self.wavevectors
    }

    pub fn num_wavevectors(&self) -> usize {
        self.wavevectors.len()
    }

    /// `|k|^2` per wavevector.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn zero_index(&self) -> usize {
        self.zero_index
    }

    pub fn negation(&self, index: usize) -> usize {
        self.negation[index]
    }

    /// Wavevector indices carrying velocity modes (all but `k = 0`).
    pub fn velocity_wavevectors(&self) -> &[usize] {
        &self.velocity_modes
    }

    pub fn polarizations(&self) -> usize {
        self.dim - 1
    }

    /// Number of complex velocity coefficients, `(n-1)((2K+1)^n - 1)`.
    pub fn velocity_len(&self) -> usize {
        self.velocity_modes.len() * self.polarizations()
    }

    /// Number of complex director coefficients, `n (2K+1)^n`.
    pub fn director_len(&self) -> usize {
        self.wavevectors.len() * self.dim
    }

    /// Unit polarization vector `p` of velocity slot `slot`.
    pub fn polarization(&self, slot: usize, p: usize) -> &[f64; 3] {
        &self.frames[slot][p]
    }

    /// Velocity eigenvalues in coefficient order (one per polarization).
    pub fn velocity_eigenvalues(&self) -> Vec<f64> {
        let np = self.polarizations();
        self.velocity_modes
            .iter()
            .flat_map(|&i| std::iter::repeat(self.eigenvalues[i]).take(np))
            .collect()
    }

    /// Index of wavevector `k` if retained.
    pub fn index_of(&self, k: &[i32]) -> Option<usize> {
        let kk = self.cutoff as i32;
        if k.len() != self.dim || k.iter().any(|c| c.abs() > kk) {
            return None;
        }
        let side = 2 * self.cutoff + 1;
        let mut idx = 0usize;
        for &c in k {
            idx = idx * side + (c + kk) as usize;
        }
        Some(idx)
    }

    /// Velocity slot of wavevector index `index` (`None` for `k = 0`).
    pub fn velocity_slot(&self, index: usize) -> Option<usize> {
        match index.cmp(&self.zero_index) {
            std::cmp::Ordering::Less => Some(index),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(index - 1),
        }
    }

    /// Box volume `(2 pi)^n`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Position of each wavevector in a row-major `m^n` FFT array.
    pub fn grid_map(&self, m: usize) -> Vec<usize> {
        self.wavevectors
            .iter()
            .map(|w| {
                w[..self.dim]
                    .iter()
                    .fold(0usize, |acc, &c| acc * m + c.rem_euclid(m as i32) as usize)
            })
            .collect()
    }

    pub(crate) fn check_same(&self, other: &Basis) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(self.mismatch(other))
        }
    }

    fn mismatch(&self, other: &Basis) -> Error {
        Error::BasisMismatch {
            a_dim: self.dim,
            a_k: self.cutoff,
            b_dim: other.dim,
            b_k: other.cutoff,
        }
    }
}

/// Divergence-free, mean-zero velocity in polarization coordinates.
#[derive(Debug, Clone)]
pub struct SpectralVelocity {
    basis: Arc<Basis>,
    coeffs: Vec<Complex64>,
}

/// Director field, Cartesian components per wavevector (`k = 0` included).
#[derive(Debug, Clone)]
pub struct DirectorState {
    basis: Arc<Basis>,
    coeffs: Vec<Complex64>,
}

impl PartialEq for SpectralVelocity {
    fn eq(&self, other: &Self) -> bool {
        *self.basis == *other.basis && self.coeffs == other.coeffs
    }
}

impl PartialEq for DirectorState {
    fn eq(&self, other: &Self) -> bool {
        *self.basis == *other.basis && self.coeffs == other.coeffs
    }
}

/// Anything with Cartesian Fourier coefficients on a [`Basis`].
pub trait VectorField {
    fn basis(&self) -> &Arc<Basis>;
    /// Cartesian coefficients, layout `[wavevector][component]`.
    fn cartesian(&self) -> Cow<'_, [Complex64]>;
}

impl SpectralVelocity {
    pub fn zeros(basis: &Arc<Basis>) -> Self {
        Self {
            basis: basis.clone(),
            coeffs: vec![Complex64::default(); basis.velocity_len()],
        }
    }

    pub fn from_coeffs(basis: &Arc<Basis>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.velocity_len() {
            return Err(Error::DimensionMismatch {
                expected: basis.velocity_len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            basis: basis.clone(),
            coeffs,
        })
    }

    /// Unit-`L^2` real mode `sqrt(2) (2pi)^(-n/2) cos(k.x) e_p(k)`, scaled by `amplitude`.
    pub fn cos_mode(basis: &Arc<Basis>, k: &[i32], polarization: usize, amplitude: f64) -> Result<Self> {
        let idx = basis
            .index_of(k)
            .ok_or_else(|| Error::InvalidArgument(format!("wavevector {k:?} not retained")))?;
        let slot = basis
            .velocity_slot(idx)
            .ok_or_else(|| Error::InvalidArgument("k = 0 carries no velocity mode".into()))?;
        if polarization >= basis.polarizations() {
            return Err(Error::InvalidArgument(format!("polarization {polarization} out of range")));
        }
        let neg_slot = basis.velocity_slot(basis.negation(idx)).unwrap();
        let np = basis.polarizations();
        let mut u = Self::zeros(basis);
        let a = Complex64::new(amplitude / 2f64.sqrt(), 0.0);
        u.coeffs[slot * np + polarization] = a;
        u.coeffs[neg_slot * np + polarization] = a.conj();
        Ok(u)
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    /// Weighted Parseval sum `sum w(|k|^2) Re(a conj(b))`.
    pub fn inner(&self, other: &Self, kind: NormKind) -> f64 {
        let np = self.basis.polarizations();
        let eig = self.basis.eigenvalues();
        self.basis
            .velocity_wavevectors()
            .iter()
            .enumerate()
            .map(|(slot, &i)| {
                let w = kind.weight(eig[i]);
                let s: f64 = (0..np)
                    .map(|p| {
                        let j = slot * np + p;
                        (self.coeffs[j] * other.coeffs[j].conj()).re
                    })
                    .sum();
                w * s
            })
            .sum()
    }

    pub fn norm_sq(&self, kind: NormKind) -> f64 {
        self.inner(self, kind)
    }

    /// `|u|_H`.
    pub fn l2_norm(&self) -> f64 {
        self.norm_sq(NormKind::L2).sqrt()
    }

    /// Largest `|k . u(k)|` in Cartesian form.
    pub fn max_divergence(&self) -> f64 {
        let dim = self.basis.dim();
        let cart = self.cartesian();
        self.basis
            .wavevectors()
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let s: Complex64 = (0..dim).map(|a| cart[i * dim + a] * k[a] as f64).sum();
                s.norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|c(-k) - conj(c(k))|`.
    pub fn hermitian_residual(&self) -> f64 {
        let np = self.basis.polarizations();
        let mut worst = 0.0f64;
        for (slot, &i) in self.basis.velocity_wavevectors().iter().enumerate() {
            let ns = self.basis.velocity_slot(self.basis.negation(i)).unwrap();
            for p in 0..np {
                let d = self.coeffs[ns * np + p] - self.coeffs[slot * np + p].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Same field on `target`: shared modes copied, modes outside `target` dropped.
    pub fn embed(&self, target: &Arc<Basis>) -> Result<Self> {
        let (src, np) = (&self.basis, self.basis.polarizations());
        if target.dim() != src.dim() {
            return Err(src.mismatch(target));
        }
        let mut out = Self::zeros(target);
        for (slot, &i) in src.velocity_wavevectors().iter().enumerate() {
            let k = &src.wavevectors()[i][..src.dim()];
            if let Some(ts) = target.index_of(k).and_then(|j| target.velocity_slot(j)) {
                out.coeffs[ts * np..(ts + 1) * np].copy_from_slice(&self.coeffs[slot * np..(slot + 1) * np]);
            }
        }
        Ok(out)
    }
}

impl VectorField for SpectralVelocity {
    fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    fn cartesian(&self) -> Cow<'_, [Complex64]> {
        let b = &self.basis;
        let dim = b.dim();
        let np = b.polarizations();
        let mut out = vec![Complex64::default(); b.director_len()];
        for (slot, &i) in b.velocity_wavevectors().iter().enumerate() {
            for p in 0..np {
                let a = self.coeffs[slot * np + p];
                let e = b.polarization(slot, p);
                for c in 0..dim {
                    out[i * dim + c] += a * e[c];
                }
            }
        }
        Cow::Owned(out)
    }
}

impl DirectorState {
    pub fn zeros(basis: &Arc<Basis>) -> Self {
        Self {
            basis: basis.clone(),
            coeffs: vec![Complex64::default(); basis.director_len()],
        }
    }

    pub fn from_coeffs(basis: &Arc<Basis>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.director_len() {
            return Err(Error::DimensionMismatch {
                expected: basis.director_len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            basis: basis.clone(),
            coeffs,
        })
    }

    /// Spatially constant director equal to `value` everywhere.
    pub fn constant(basis: &Arc<Basis>, value: &[f64]) -> Result<Self> {
        if value.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: value.len(),
            });
        }
        let mut d = Self::zeros(basis);
        let scale = basis.volume().sqrt();
        let z = basis.zero_index();
        for (c, v) in value.iter().enumerate() {
            d.coeffs[z * basis.dim() + c] = Complex64::new(v * scale, 0.0);
        }
        Ok(d)
    }

    /// Unit-`L^2` real mode `sqrt(2) (2pi)^(-n/2) cos(k.x)` in `component`, scaled.
    pub fn cos_mode(basis: &Arc<Basis>, k: &[i32], component: usize, amplitude: f64) -> Result<Self> {
        let idx = basis
            .index_of(k)
            .ok_or_else(|| Error::InvalidArgument(format!("wavevector {k:?} not retained")))?;
        if component >= basis.dim() {
            return Err(Error::InvalidArgument(format!("component {component} out of range")));
        }
        let dim = basis.dim();
        let mut d = Self::zeros(basis);
        if idx == basis.zero_index() {
            d.coeffs[idx * dim + component] = Complex64::new(amplitude, 0.0);
        } else {
            let a = Complex64::new(amplitude / 2f64.sqrt(), 0.0);
            d.coeffs[idx * dim + component] = a;
            d.coeffs[basis.negation(idx) * dim + component] = a;
        }
        Ok(d)
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    pub fn inner(&self, other: &Self, kind: NormKind) -> f64 {
        let dim = self.basis.dim();
        self.basis
            .eigenvalues()
            .iter()
            .enumerate()
            .map(|(i, &ev)| {
                let s: f64 = (0..dim)
                    .map(|c| (self.coeffs[i * dim + c] * other.coeffs[i * dim + c].conj()).re)
                    .sum();
                kind.weight(ev) * s
            })
            .sum()
    }

    pub fn norm_sq(&self, kind: NormKind) -> f64 {
        self.inner(self, kind)
    }

    pub fn hermitian_residual(&self) -> f64 {
        let dim = self.basis.dim();
        let mut worst = 0.0f64;
        for i in 0..self.basis.num_wavevectors() {
            let j = self.basis.negation(i);
            for c in 0..dim {
                let d = self.coeffs[j * dim + c] - self.coeffs[i * dim + c].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Same field on `target`: shared modes copied, modes outside `target` dropped.
    pub fn embed(&self, target: &Arc<Basis>) -> Result<Self> {
        let (src, dim) = (&self.basis, self.basis.dim());
        if target.dim() != dim {
            return Err(src.mismatch(target));
        }
        let mut out = Self::zeros(target);
        for (i, w) in src.wavevectors().iter().enumerate() {
            if let Some(j) = target.index_of(&w[..dim]) {
                out.coeffs[j * dim..(j + 1) * dim].copy_from_slice(&self.coeffs[i * dim..(i + 1) * dim]);
            }
        }
        Ok(out)
    }
}

impl VectorField for DirectorState {
    fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    fn cartesian(&self) -> Cow<'_, [Complex64]> {
        Cow::Borrowed(&self.coeffs)
    }
}

/// Norms realised as weighted Parseval sums over `|k|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    L2,
    /// `||grad v||^2`, the gradient seminorm.
    H1Seminorm,
    H1,
    H2,
    /// Riesz dual of `H1`: weights `(1 + |k|^2)^-1`.
    VDual,
    /// Dual of `H2`: weights `(1 + |k|^2 + |k|^4)^-1`.
    H2Dual,
}

impl NormKind {
    pub fn weight(self, k2: f64) -> f64 {
        match self {
            NormKind::L2 => 1.0,
            NormKind::H1Seminorm => k2,
            NormKind::H1 => 1.0 + k2,
            NormKind::H2 => 1.0 + k2 + k2 * k2,
            NormKind::VDual => 1.0 / (1.0 + k2),
            NormKind::H2Dual => 1.0 / (1.0 + k2 + k2 * k2),
        }
    }
}

/// Weighted inner product of two fields on the same basis.
pub fn inner_product<A: VectorField, B: VectorField>(a: &A, b: &B, kind: NormKind) -> Result<f64> {
    a.basis().check_same(b.basis())?;
    let basis = a.basis();
    let dim = basis.dim();
    let ca = a.cartesian();
    let cb = b.cartesian();
    Ok(basis
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, &ev)| {
            let s: f64 = (0..dim)
                .map(|c| (ca[i * dim + c] * cb[i * dim + c].conj()).re)
                .sum();
            kind.weight(ev) * s
        })
        .sum())
}

/// Leray projection of Cartesian coefficients onto divergence-free, mean-zero fields.
pub fn leray_project(basis: &Arc<Basis>, cartesian: &[Complex64]) -> Result<SpectralVelocity> {
    if cartesian.len() != basis.director_len() {
        return Err(Error::DimensionMismatch {
            expected: basis.director_len(),
            got: cartesian.len(),
        });
    }
    let dim = basis.dim();
    let np = basis.polarizations();
    let mut out = SpectralVelocity::zeros(basis);
    for (slot, &i) in basis.velocity_wavevectors().iter().enumerate() {
        for p in 0..np {
            let e = basis.polarization(slot, p);
            out.coeffs[slot * np + p] = (0..dim).map(|c| cartesian[i * dim + c] * e[c]).sum();
        }
    }
    Ok(out)
}

/// Real samples of each component on a uniform `m^n` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub dim: usize,
    pub points_per_axis: usize,
    pub components: Vec<Vec<f64>>,
}

impl PhysicalField {
    /// Grid coordinates of flat index `j`.
    pub fn point(&self, j: usize) -> [f64; 3] {
        let m = self.points_per_axis;
        let h = 2.0 * PI / m as f64;
        let mut x = [0.0; 3];
        let mut r = j;
        for a in (0..self.dim).rev() {
            x[a] = (r % m) as f64 * h;
            r /= m;
        }
        x
    }
}

/// Place coefficients of every wavevector into a grid and synthesise real samples.
pub(crate) fn synthesize(
    fft: &GridFft,
    map: &[usize],
    coeff: impl Fn(usize) -> Complex64,
    buf: &mut Vec<Complex64>,
) -> Vec<f64> {
    buf.clear();
    buf.resize(fft.len(), Complex64::default());
    for (i, &pos) in map.iter().enumerate() {
        buf[pos] = coeff(i);
    }
    fft.inverse(buf);
    let scale = (2.0 * PI).powf(-(fft.dim() as f64) / 2.0);
    buf.iter().map(|c| c.re * scale).collect()
}

/// Band coefficients of real samples: `c(k) = (2pi)^(n/2) / m^n * sum_j v_j exp(-i k.x_j)`.
pub(crate) fn analyze(fft: &GridFft, map: &[usize], samples: &[f64], buf: &mut Vec<Complex64>) -> Vec<Complex64> {
    buf.clear();
    buf.extend(samples.iter().map(|&v| Complex64::new(v, 0.0)));
    fft.forward(buf);
    let scale = (2.0 * PI).powf(fft.dim() as f64 / 2.0) / fft.len() as f64;
    map.iter().map(|&pos| buf[pos] * scale).collect()
}

/// Quadrature weight `(2pi)^n / m^n` of one grid point.
pub(crate) fn cell_volume(fft: &GridFft) -> f64 {
    (2.0 * PI).powi(fft.dim() as i32) / fft.len() as f64
}

fn check_grid(basis: &Basis, m: usize) -> Result<()> {
    let min = 2 * basis.cutoff() + 1;
    if m < min {
        return Err(Error::GridTooCoarse {
            grid: m,
            cutoff: basis.cutoff(),
            min,
        });
    }
    Ok(())
}

/// Sample a field on the uniform `m^n` grid.
pub fn to_physical<F: VectorField>(field: &F, m: usize) -> Result<PhysicalField> {
    let basis = field.basis();
    check_grid(basis, m)?;
    let dim = basis.dim();
    let fft = GridFft::new(dim, m);
    let map = basis.grid_map(m);
    let cart = field.cartesian();
    let mut buf = Vec::new();
    let components = (0..dim)
        .map(|c| synthesize(&fft, &map, |i| cart[i * dim + c], &mut buf))
        .collect();
    Ok(PhysicalField {
        dim,
        points_per_axis: m,
        components,
    })
}

fn cartesian_from_samples(samples: &PhysicalField, basis: &Arc<Basis>) -> Result<Vec<Complex64>> {
    let dim = basis.dim();
    if samples.dim != dim || samples.components.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: samples.components.len(),
        });
    }
    let m = samples.points_per_axis;
    check_grid(basis, m)?;
    let expected = m.pow(dim as u32);
    if let Some(bad) = samples.components.iter().find(|c| c.len() != expected) {
        return Err(Error::DimensionMismatch {
            expected,
            got: bad.len(),
        });
    }
    let fft = GridFft::new(dim, m);
    let map = basis.grid_map(m);
    let mut buf = Vec::new();
    let mut out = vec![Complex64::default(); basis.director_len()];
    for (c, comp) in samples.components.iter().enumerate() {
        for (i, v) in analyze(&fft, &map, comp, &mut buf).into_iter().enumerate() {
            out[i * dim + c] = v;
        }
    }
    Ok(out)
}

/// Band-limited director coefficients of physical samples.
pub fn to_spectral_director(samples: &PhysicalField, basis: &Arc<Basis>) -> Result<DirectorState> {
    let coeffs = cartesian_from_samples(samples, basis)?;
    DirectorState::from_coeffs(basis, coeffs)
}

/// Band-limited, Leray-projected velocity coefficients of physical samples.
pub fn to_spectral_velocity(samples: &PhysicalField, basis: &Arc<Basis>) -> Result<SpectralVelocity> {
    let coeffs = cartesian_from_samples(samples, basis)?;
    leray_project(basis, &coeffs)
}

/// Draw a Hermitian-symmetric complex Gaussian per canonical wavevector with
/// variance proportional to `(1 + |k|^2)^-slope`, restricted to `|k|_inf <= band`.
/// `per_mode` receives the index of the canonical wavevector and the draw count.
fn random_hermitian<R: Rng + ?Sized>(
    basis: &Basis,
    rng: &mut R,
    slope: f64,
    band: usize,
    components: usize,
    include_zero: bool,
) -> (Vec<(usize, Vec<Complex64>)>, f64) {
    let mut out = Vec::new();
    // squared L^2 norm of the whole band, retained or not
    let mut full = 0.0;
    let band = band as i32;
    let dim = basis.dim();
    // iterate over the band in a K-independent order so that the same
    // (band, seed) gives the same physical field on every larger basis
    let mut ks: Vec<Wavevector> = Vec::new();
    if dim == 2 {
        for a in -band..=band {
            for b in -band..=band {
                ks.push([a, b, 0]);
            }
        }
    } else {
        for a in -band..=band {
            for b in -band..=band {
                for c in -band..=band {
                    ks.push([a, b, c]);
                }
            }
        }
    }
    for k in ks {
        if canonical(k) != k {
            continue;
        }
        let is_zero = k == [0, 0, 0];
        if is_zero && !include_zero {
            continue;
        }
        let k2: f64 = k.iter().map(|&c| (c * c) as f64).sum();
        let sd = (1.0 + k2).powf(-slope / 2.0);
        let draws: Vec<Complex64> = (0..components)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                if is_zero {
                    Complex64::new(re * sd, 0.0)
                } else {
                    Complex64::new(re, im) * (sd / 2f64.sqrt())
                }
            })
            .collect();
        let weight = if is_zero { 1.0 } else { 2.0 };
        full += weight * draws.iter().map(|d| d.norm_sqr()).sum::<f64>();
        if let Some(idx) = basis.index_of(&k[..dim]) {
            out.push((idx, draws));
        }
    }
    (out, full)
}

/// Random real velocity on `|k|_inf <= band`, scaled so the untruncated field has
/// `|u|_H = amplitude`; modes beyond the cutoff are dropped.
pub fn random_velocity<R: Rng + ?Sized>(
    basis: &Arc<Basis>,
    rng: &mut R,
    amplitude: f64,
    slope: f64,
    band: usize,
) -> SpectralVelocity {
    let np = basis.polarizations();
    let mut u = SpectralVelocity::zeros(basis);
    let (draws, full) = random_hermitian(basis, rng, slope, band, np, false);
    for (idx, draws) in draws {
        let slot = basis.velocity_slot(idx).unwrap();
        let ns = basis.velocity_slot(basis.negation(idx)).unwrap();
        for (p, d) in draws.into_iter().enumerate() {
            u.coeffs[slot * np + p] = d;
            u.coeffs[ns * np + p] = d.conj();
        }
    }
    if full > 0.0 {
        u = u.scaled(amplitude / full.sqrt());
    }
    u
}

/// Random real director on `|k|_inf <= band`, scaled so the untruncated field has
/// `|d|_{L^2} = amplitude`.
pub fn random_director<R: Rng + ?Sized>(
    basis: &Arc<Basis>,
    rng: &mut R,
    amplitude: f64,
    slope: f64,
    band: usize,
) -> DirectorState {
    let dim = basis.dim();
    let mut d = DirectorState::zeros(basis);
    let (draws, full) = random_hermitian(basis, rng, slope, band, dim, true);
    for (idx, draws) in draws {
        let neg = basis.negation(idx);
        for (c, v) in draws.into_iter().enumerate() {
            d.coeffs[idx * dim + c] = v;
            d.coeffs[neg * dim + c] = v.conj();
        }
    }
    if full > 0.0 {
        d = d.scaled(amplitude / full.sqrt());
    }
    d
}

/// Random Cartesian (not projected) Hermitian coefficients, for projection tests.
pub fn random_cartesian<R: Rng + ?Sized>(basis: &Arc<Basis>, rng: &mut R) -> Vec<Complex64> {
    random_director(basis, rng, 1.0, 1.0, basis.cutoff()).into_coeffs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn band_above_cutoff_truncates_the_same_field() {
        let coarse = build_basis(2, 2).unwrap();
        let fine = build_basis(2, 5).unwrap();
        let u_f = random_velocity(&fine, &mut ChaCha8Rng::seed_from_u64(4), 1.0, 1.0, 5);
        let u_c = random_velocity(&coarse, &mut ChaCha8Rng::seed_from_u64(4), 1.0, 1.0, 5);
        assert!((u_f.l2_norm() - 1.0).abs() < 1e-14);
        assert!(u_c.l2_norm() < 1.0);
        assert_eq!(u_f.embed(&coarse).unwrap(), u_c);
        let d_f = random_director(&fine, &mut ChaCha8Rng::seed_from_u64(5), 1.0, 1.0, 5);
        let d_c = random_director(&coarse, &mut ChaCha8Rng::seed_from_u64(5), 1.0, 1.0, 5);
        assert_eq!(d_f.embed(&coarse).unwrap(), d_c);
    }

    #[test]
    fn embedding_round_trips_through_finer_basis() {
        let coarse = build_basis(2, 3).unwrap();
        let fine = build_basis(2, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_velocity(&coarse, &mut rng, 1.0, 1.0, 3);
        let d = random_director(&coarse, &mut rng, 1.0, 1.0, 3);
        let (uf, df) = (u.embed(&fine).unwrap(), d.embed(&fine).unwrap());
        assert_eq!(uf.norm_sq(NormKind::H1), u.norm_sq(NormKind::H1));
        assert_eq!(df.norm_sq(NormKind::H2), d.norm_sq(NormKind::H2));
        assert_eq!(uf.embed(&coarse).unwrap(), u);
        assert_eq!(df.embed(&coarse).unwrap(), d);
        assert!(uf.max_divergence() < 1e-14);
    }

    #[test]
    fn mode_counts() {
        let b = build_basis(2, 1).unwrap();
        assert_eq!(b.num_wavevectors() - 1, 8);
        assert_eq!(b.velocity_len(), 8);
        let b = build_basis(3, 1).unwrap();
        assert_eq!(b.num_wavevectors() - 1, 26);
        assert_eq!(b.velocity_len(), 52);
        let b = build_basis(2, 4).unwrap();
        assert_eq!(b.velocity_len(), 80);
        let max = b.velocity_eigenvalues().into_iter().fold(0.0, f64::max);
        assert_eq!(max, 32.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(build_basis(2, 0), Err(Error::InvalidCutoff { .. })));
        assert!(matches!(build_basis(4, 2), Err(Error::UnsupportedDim(4))));
        assert!(matches!(build_basis(1, 2), Err(Error::UnsupportedDim(1))));
        assert!(build_basis(2, MAX_CUTOFF_2D).is_ok());
        assert!(build_basis(3, MAX_CUTOFF_3D + 1).is_err());
    }

    #[test]
    fn frames_are_orthonormal_and_transverse() {
        for dim in [2, 3] {
            let b = build_basis(dim, 3).unwrap();
            for (slot, &i) in b.velocity_wavevectors().iter().enumerate() {
                let k = b.wavevectors()[i];
                let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
                for p in 0..dim - 1 {
                    let e = b.polarization(slot, p);
                    assert!(dot(e, &kf).abs() < 1e-14);
                    assert!((dot(e, e) - 1.0).abs() < 1e-14);
                    for q in 0..p {
                        assert!(dot(e, b.polarization(slot, q)).abs() < 1e-14);
                    }
                }
                assert!(b.eigenvalues()[i] > 0.0);
            }
        }
    }

    #[test]
    fn ordering_is_lexicographic() {
        let b = build_basis(3, 2).unwrap();
        let w = b.wavevectors();
        for pair in w.windows(2) {
            assert!(pair[0] < pair[1]);
        }
        for (i, k) in w.iter().enumerate() {
            assert_eq!(b.index_of(&k[..3]), Some(i));
            let n = w[b.negation(i)];
            assert_eq!(n, [-k[0], -k[1], -k[2]]);
        }
    }

    #[test]
    fn zero_field_synthesises_to_zero() {
        let b = build_basis(2, 3).unwrap();
        let p = to_physical(&SpectralVelocity::zeros(&b), 9).unwrap();
        assert!(p.components.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn single_mode_matches_closed_form() {
        let b = build_basis(2, 2).unwrap();
        let u = SpectralVelocity::cos_mode(&b, &[1, 0], 0, 1.0).unwrap();
        let p = to_physical(&u, 8).unwrap();
        // k = (1,0): polarization (0, 1)
        let amp = 2f64.sqrt() / (2.0 * PI);
        for j in 0..64 {
            let x = p.point(j);
            assert!(p.components[0][j].abs() < 1e-12);
            assert!((p.components[1][j] - amp * x[0].cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_too_coarse_rejected() {
        let b = build_basis(2, 3).unwrap();
        let u = SpectralVelocity::zeros(&b);
        assert!(matches!(to_physical(&u, 6), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn constant_field_has_only_zero_mode() {
        let b = build_basis(2, 3).unwrap();
        let m = 8;
        let samples = PhysicalField {
            dim: 2,
            points_per_axis: m,
            components: vec![vec![0.3; m * m], vec![-1.2; m * m]],
        };
        let d = to_spectral_director(&samples, &b).unwrap();
        let z = b.zero_index();
        for (i, c) in d.coeffs().iter().enumerate() {
            if i / 2 != z {
                assert!(c.norm() < 1e-13);
            }
        }
        let expect = DirectorState::constant(&b, &[0.3, -1.2]).unwrap();
        for (a, e) in d.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - e).norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_field_projects_to_zero() {
        let b = build_basis(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // random scalar potential phi, vector field i k phi(k)
        let phi = random_director(&b, &mut rng, 1.0, 0.0, 2);
        let dim = 3;
        let mut cart = vec![Complex64::default(); b.director_len()];
        for (i, k) in b.wavevectors().iter().enumerate() {
            let p = phi.coeffs()[i * dim];
            for a in 0..dim {
                cart[i * dim + a] = Complex64::new(0.0, k[a] as f64) * p;
            }
        }
        let u = leray_project(&b, &cart).unwrap();
        assert!(u.coeffs().iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn projection_is_idempotent_and_transverse() {
        let b = build_basis(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cart = random_cartesian(&b, &mut rng);
        let u = leray_project(&b, &cart).unwrap();
        assert!(u.max_divergence() < 1e-14);
        let again = leray_project(&b, &u.cartesian()).unwrap();
        for (a, c) in u.coeffs().iter().zip(again.coeffs()) {
            assert!((a - c).norm() < 1e-14);
        }
        assert!(u.hermitian_residual() < 1e-15);
    }

    #[test]
    fn unit_mode_norms() {
        let b = build_basis(2, 2).unwrap();
        let u = SpectralVelocity::cos_mode(&b, &[1, 0], 0, 1.0).unwrap();
        assert!((u.norm_sq(NormKind::L2) - 1.0).abs() < 1e-15);
        assert!((u.norm_sq(NormKind::H1Seminorm) - 1.0).abs() < 1e-15);
        assert!((u.norm_sq(NormKind::H1) - 2.0).abs() < 1e-15);
        let z = SpectralVelocity::zeros(&b);
        for kind in [NormKind::L2, NormKind::H1, NormKind::H2, NormKind::VDual] {
            assert_eq!(z.norm_sq(kind), 0.0);
        }
    }

    #[test]
    fn random_fields_are_real_and_normalised() {
        let b = build_basis(2, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_velocity(&b, &mut rng, 0.7, 1.5, 5);
        assert!((u.l2_norm() - 0.7).abs() < 1e-14);
        assert!(u.hermitian_residual() == 0.0);
        let d = random_director(&b, &mut rng, 2.0, 1.5, 3);
        assert!((d.norm_sq(NormKind::L2).sqrt() - 2.0).abs() < 1e-14);
        assert!(d.hermitian_residual() == 0.0);
    }

    #[test]
    fn random_field_is_independent_of_cutoff() {
        let b3 = build_basis(2, 3).unwrap();
        let b6 = build_basis(2, 6).unwrap();
        let d3 = random_director(&b3, &mut ChaCha8Rng::seed_from_u64(5), 1.0, 2.0, 2);
        let d6 = random_director(&b6, &mut ChaCha8Rng::seed_from_u64(5), 1.0, 2.0, 2);
        for (i, k) in b3.wavevectors().iter().enumerate() {
            let j = b6.index_of(&k[..2]).unwrap();
            for c in 0..2 {
                assert_eq!(d3.coeffs()[i * 2 + c], d6.coeffs()[j * 2 + c]);
            }
        }
    }
}
