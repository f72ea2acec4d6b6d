//! Stokes and Laplace operators, the convective and Ericksen bilinear maps,
//! the polynomial nonlinearity and the director energy.
//!
//! Every nonlinear quantity is evaluated on a uniform grid fine enough that
//! the product is resolved exactly: a product of `q` band-`K` factors has
//! band `qK`, so quadrature of it is exact once the grid has more than `qK`
//! points per axis, and its band-`K` coefficients are alias-free once the
//! grid has more than `(q + 1)K`.

mod bounds;
mod polynomial;

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::fft::{smooth_size, GridFft};
use crate::spectral_basis::{
    analyze, cell_volume, leray_project, synthesize, Basis, DirectorState, NormKind, SpectralVelocity,
    VectorField,
};

pub use bounds::{sweep_operator_bounds, BoundSweep, OperatorBoundReport};
pub use polynomial::PolynomialNonlinearity;

/// `A u`: multiply each mode by `|k|^2`.
pub fn stokes_apply(u: &SpectralVelocity) -> SpectralVelocity {
    let eig = u.basis().velocity_eigenvalues();
    let coeffs = u.coeffs().iter().zip(&eig).map(|(c, l)| c * l).collect();
    SpectralVelocity::from_coeffs(u.basis(), coeffs).unwrap()
}

/// `-Laplacian d` per component; `k = 0` maps to zero.
pub fn neumann_laplacian_apply(d: &DirectorState) -> DirectorState {
    let basis = d.basis();
    let dim = basis.dim();
    let eig = basis.eigenvalues();
    let coeffs = d
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, c)| c * eig[j / dim])
        .collect();
    DirectorState::from_coeffs(basis, coeffs).unwrap()
}

struct Grid {
    fft: GridFft,
    map: Vec<usize>,
}

/// Per-thread scratch: cached FFT plans and grid maps for each dealiasing level.
pub struct OperatorWorkspace {
    basis: Arc<Basis>,
    grids: HashMap<usize, Grid>,
    buf: Vec<Complex64>,
}

/// Component samples `[component][point]`.
type Samples = Vec<Vec<f64>>;

impl OperatorWorkspace {
    pub fn new(basis: &Arc<Basis>) -> Self {
        Self {
            basis: basis.clone(),
            grids: HashMap::new(),
            buf: Vec::new(),
        }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// Points per axis of the grid that resolves band `q K` products.
    pub fn grid_points(&self, band_multiple: usize) -> usize {
        smooth_size(band_multiple * self.basis.cutoff() + 1)
    }

    fn grid(&mut self, band_multiple: usize) -> usize {
        let m = self.grid_points(band_multiple);
        let basis = &self.basis;
        self.grids.entry(m).or_insert_with(|| Grid {
            fft: GridFft::new(basis.dim(), m),
            map: basis.grid_map(m),
        });
        m
    }

    fn values(&mut self, m: usize, cart: &[Complex64]) -> Samples {
        let dim = self.basis.dim();
        let g = &self.grids[&m];
        (0..dim)
            .map(|c| synthesize(&g.fft, &g.map, |i| cart[i * dim + c], &mut self.buf))
            .collect()
    }

    /// `[component][axis]` samples of `d v^c / d x_axis`.
    fn gradient(&mut self, m: usize, cart: &[Complex64]) -> Vec<Samples> {
        let dim = self.basis.dim();
        let g = &self.grids[&m];
        let wv = self.basis.wavevectors();
        (0..dim)
            .map(|c| {
                (0..dim)
                    .map(|a| {
                        synthesize(
                            &g.fft,
                            &g.map,
                            |i| cart[i * dim + c] * Complex64::new(0.0, wv[i][a] as f64),
                            &mut self.buf,
                        )
                    })
                    .collect()
            })
            .collect()
    }

    fn band_coeffs(&mut self, m: usize, comps: &Samples) -> Vec<Complex64> {
        let dim = self.basis.dim();
        let g = &self.grids[&m];
        let mut out = vec![Complex64::default(); self.basis.director_len()];
        for (c, comp) in comps.iter().enumerate() {
            for (i, v) in analyze(&g.fft, &g.map, comp, &mut self.buf).into_iter().enumerate() {
                out[i * dim + c] = v;
            }
        }
        out
    }

    fn cell(&self, m: usize) -> f64 {
        cell_volume(&self.grids[&m].fft)
    }

    /// Samples of `(u . grad) v` for Cartesian `u`, `v`.
    fn advect(&mut self, m: usize, u: &[Complex64], v: &[Complex64]) -> Samples {
        let uv = self.values(m, u);
        let gv = self.gradient(m, v);
        gv.iter()
            .map(|gc| {
                (0..uv[0].len())
                    .map(|j| gc.iter().zip(&uv).map(|(g, ui)| ui[j] * g[j]).sum())
                    .collect()
            })
            .collect()
    }

    /// `b(u, v, w) = sum_ij int u^i d_i v^j w^j`.
    pub fn trilinear_b<V: VectorField, W: VectorField>(&mut self, u: &SpectralVelocity, v: &V, w: &W) -> Result<f64> {
        self.basis.check_same(u.basis())?;
        self.basis.check_same(v.basis())?;
        self.basis.check_same(w.basis())?;
        let m = self.grid(3);
        let adv = self.advect(m, &u.cartesian(), &v.cartesian());
        let wv = self.values(m, &w.cartesian());
        let s: f64 = adv
            .iter()
            .zip(&wv)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        Ok(s * self.cell(m))
    }

    /// `B_n(u, v) = P_n (u . grad) v`.
    pub fn convective_b(&mut self, u: &SpectralVelocity, v: &SpectralVelocity) -> Result<SpectralVelocity> {
        self.basis.check_same(u.basis())?;
        self.basis.check_same(v.basis())?;
        let m = self.grid(3);
        let adv = self.advect(m, &u.cartesian(), &v.cartesian());
        let coeffs = self.band_coeffs(m, &adv);
        leray_project(&self.basis, &coeffs)
    }

    /// `B~_n(u, d)`: band-`K` part of `(u . grad) d`.
    pub fn director_transport_btilde(&mut self, u: &SpectralVelocity, d: &DirectorState) -> Result<DirectorState> {
        self.basis.check_same(u.basis())?;
        self.basis.check_same(d.basis())?;
        let m = self.grid(3);
        let adv = self.advect(m, &u.cartesian(), d.coeffs());
        let coeffs = self.band_coeffs(m, &adv);
        DirectorState::from_coeffs(&self.basis, coeffs)
    }

    /// `M_n(d1, d2) = P_n div(grad d1^T grad d2)`, i.e. `<M(d1,d2), v> = m(d1, d2, v)`.
    pub fn ericksen_m(&mut self, d1: &DirectorState, d2: &DirectorState) -> Result<SpectralVelocity> {
        self.basis.check_same(d1.basis())?;
        self.basis.check_same(d2.basis())?;
        let dim = self.basis.dim();
        let m = self.grid(3);
        let g1 = self.gradient(m, d1.coeffs());
        let g2 = if std::ptr::eq(d1, d2) {
            g1.clone()
        } else {
            self.gradient(m, d2.coeffs())
        };
        let npts = g1[0][0].len();
        // T_ij = sum_k d_i d1^k d_j d2^k, stored row i as a "vector" over j
        let mut div = vec![Complex64::default(); self.basis.director_len()];
        let wv = self.basis.wavevectors().to_vec();
        for i in 0..dim {
            let row: Samples = (0..dim)
                .map(|j| {
                    (0..npts)
                        .map(|p| (0..dim).map(|k| g1[k][i][p] * g2[k][j][p]).sum())
                        .collect()
                })
                .collect();
            let t = self.band_coeffs(m, &row);
            for (idx, k) in wv.iter().enumerate() {
                let s: Complex64 = (0..dim)
                    .map(|j| t[idx * dim + j] * Complex64::new(0.0, k[j] as f64))
                    .sum();
                div[idx * dim + i] = s;
            }
        }
        leray_project(&self.basis, &div)
    }

    /// Samples of `f(d) = f~(|d|^2) d` on grid `m`.
    fn f_samples(&mut self, m: usize, d: &DirectorState, poly: &PolynomialNonlinearity) -> Samples {
        let dv = self.values(m, d.coeffs());
        let npts = dv[0].len();
        let scale: Vec<f64> = (0..npts)
            .map(|p| poly.f_tilde(dv.iter().map(|c| c[p] * c[p]).sum()))
            .collect();
        dv.into_iter()
            .map(|c| c.iter().zip(&scale).map(|(x, s)| x * s).collect())
            .collect()
    }

    /// Grid multiple resolving `f(d)` (band `(2N+1)K`) alias-free in the band.
    fn f_band(poly: &PolynomialNonlinearity) -> usize {
        2 * poly.degree() + 2
    }

    /// `f_n(d)`: band-`K` projection of `f~(|d|^2) d`, computed alias-free.
    pub fn polynomial_f(&mut self, d: &DirectorState, poly: &PolynomialNonlinearity) -> Result<DirectorState> {
        self.basis.check_same(d.basis())?;
        let m = self.grid(Self::f_band(poly));
        let fs = self.f_samples(m, d, poly);
        let coeffs = self.band_coeffs(m, &fs);
        DirectorState::from_coeffs(&self.basis, coeffs)
    }

    /// `int F~(|d|^2) dx`, exact.
    pub fn potential_integral(&mut self, d: &DirectorState, poly: &PolynomialNonlinearity) -> Result<f64> {
        self.basis.check_same(d.basis())?;
        let m = self.grid(Self::f_band(poly));
        let dv = self.values(m, d.coeffs());
        let s: f64 = (0..dv[0].len())
            .map(|p| poly.big_f_tilde(dv.iter().map(|c| c[p] * c[p]).sum()))
            .sum();
        Ok(s * self.cell(m))
    }

    /// `Psi(d) = 1/2 ||grad d||^2 + 1/2 int F~(|d|^2) dx`.
    pub fn energy_psi(&mut self, d: &DirectorState, poly: &PolynomialNonlinearity) -> Result<f64> {
        let grad = d.norm_sq(NormKind::H1Seminorm);
        Ok(0.5 * grad + 0.5 * self.potential_integral(d, poly)?)
    }

    /// `int |d|^(2q) dx`, exact for integer `q >= 1`.
    pub fn power_integral(&mut self, d: &DirectorState, q: usize) -> Result<f64> {
        self.basis.check_same(d.basis())?;
        let m = self.grid(2 * q.max(1));
        let dv = self.values(m, d.coeffs());
        let s: f64 = (0..dv[0].len())
            .map(|p| dv.iter().map(|c| c[p] * c[p]).sum::<f64>().powi(q as i32))
            .sum();
        Ok(s * self.cell(m))
    }

    /// `||d||_{L^(2q)}`.
    pub fn lebesgue_norm(&mut self, d: &DirectorState, q: usize) -> Result<f64> {
        Ok(self.power_integral(d, q)?.powf(1.0 / (2 * q) as f64))
    }

    /// `int f(d) . d dx`, exact.
    pub fn f_dot_d(&mut self, d: &DirectorState, poly: &PolynomialNonlinearity) -> Result<f64> {
        self.basis.check_same(d.basis())?;
        let m = self.grid(2 * poly.degree() + 2);
        let dv = self.values(m, d.coeffs());
        let s: f64 = (0..dv[0].len())
            .map(|p| {
                let r: f64 = dv.iter().map(|c| c[p] * c[p]).sum();
                poly.f_tilde(r) * r
            })
            .sum();
        Ok(s * self.cell(m))
    }

    /// `int ((u . grad) d) . f(d) dx` without Galerkin projection of either factor.
    /// The integrand is `u . grad(F~(|d|^2)/2)`, so this vanishes for divergence-free `u`.
    pub fn transport_potential_cancellation(
        &mut self,
        u: &SpectralVelocity,
        d: &DirectorState,
        poly: &PolynomialNonlinearity,
    ) -> Result<f64> {
        self.basis.check_same(u.basis())?;
        self.basis.check_same(d.basis())?;
        let m = self.grid(2 * poly.degree() + 3);
        let adv = self.advect(m, &u.cartesian(), d.coeffs());
        let fs = self.f_samples(m, d, poly);
        let s: f64 = adv
            .iter()
            .zip(&fs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        Ok(s * self.cell(m))
    }

    /// Every nonlinear term of the Galerkin system at `(u, d)` from one set of
    /// grid syntheses; agrees with the individual operators.
    pub fn galerkin_terms(
        &mut self,
        u: &SpectralVelocity,
        d: &DirectorState,
        poly: &PolynomialNonlinearity,
    ) -> Result<GalerkinTerms> {
        self.basis.check_same(u.basis())?;
        self.basis.check_same(d.basis())?;
        let dim = self.basis.dim();
        let m = self.grid(3);
        let uc = u.cartesian();
        let uv = self.values(m, &uc);
        let gu = self.gradient(m, &uc);
        let gd = self.gradient(m, d.coeffs());
        let npts = uv[0].len();
        let advect = |g: &Vec<Samples>| -> Samples {
            g.iter()
                .map(|gc| {
                    (0..npts)
                        .map(|p| gc.iter().zip(&uv).map(|(g, ui)| ui[p] * g[p]).sum())
                        .collect()
                })
                .collect()
        };
        let conv = advect(&gu);
        let trans = advect(&gd);
        let conv = self.band_coeffs(m, &conv);
        let convective = leray_project(&self.basis, &conv)?;
        let trans = self.band_coeffs(m, &trans);
        let transport = DirectorState::from_coeffs(&self.basis, trans)?;
        let wv = self.basis.wavevectors().to_vec();
        let mut div = vec![Complex64::default(); self.basis.director_len()];
        for i in 0..dim {
            let row: Samples = (0..dim)
                .map(|j| {
                    (0..npts)
                        .map(|p| (0..dim).map(|k| gd[k][i][p] * gd[k][j][p]).sum())
                        .collect()
                })
                .collect();
            let t = self.band_coeffs(m, &row);
            for (idx, k) in wv.iter().enumerate() {
                div[idx * dim + i] = (0..dim)
                    .map(|j| t[idx * dim + j] * Complex64::new(0.0, k[j] as f64))
                    .sum();
            }
        }
        let ericksen = leray_project(&self.basis, &div)?;

        let mf = self.grid(Self::f_band(poly));
        let dv = self.values(mf, d.coeffs());
        let q = poly.degree() as i32 + 1;
        let (mut pot, mut pow, mut fdd) = (0.0, 0.0, 0.0);
        let mut scale = Vec::with_capacity(dv[0].len());
        for p in 0..dv[0].len() {
            let r: f64 = dv.iter().map(|c| c[p] * c[p]).sum();
            let ft = poly.f_tilde(r);
            pot += poly.big_f_tilde(r);
            pow += r.powi(q);
            fdd += ft * r;
            scale.push(ft);
        }
        let fs: Samples = dv
            .iter()
            .map(|c| c.iter().zip(&scale).map(|(x, s)| x * s).collect())
            .collect();
        let fc = self.band_coeffs(mf, &fs);
        let f = DirectorState::from_coeffs(&self.basis, fc)?;
        let cell = self.cell(mf);
        Ok(GalerkinTerms {
            convective,
            ericksen,
            transport,
            f,
            potential_integral: pot * cell,
            power_integral: pow * cell,
            f_dot_d: fdd * cell,
        })
    }
}

/// Output of [`OperatorWorkspace::galerkin_terms`].
#[derive(Debug, Clone)]
pub struct GalerkinTerms {
    /// `B_n(u, u)`.
    pub convective: SpectralVelocity,
    /// `M_n(d) = M_n(d, d)`.
    pub ericksen: SpectralVelocity,
    /// `B~_n(u, d)`.
    pub transport: DirectorState,
    /// `f_n(d)`.
    pub f: DirectorState,
    /// `int F~(|d|^2) dx`.
    pub potential_integral: f64,
    /// `int |d|^(2N+2) dx`.
    pub power_integral: f64,
    /// `int f(d) . d dx`.
    pub f_dot_d: f64,
}
