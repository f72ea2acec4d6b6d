//! Direct-convolution oracle. Products are formed coefficient by coefficient
//! in Fourier space over the full (unaliased) support, so nothing here shares
//! code with the FFT path of the library.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use njsm::operators::PolynomialNonlinearity;
use njsm::spectral_basis::{Basis, DirectorState, SpectralVelocity, VectorField};
use num_complex::Complex64;

/// Scalar field with coefficients on the cube `|k|_inf <= band`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub dim: usize,
    pub band: i32,
    pub data: Vec<Complex64>,
}

impl Dense {
    pub fn zeros(dim: usize, band: i32) -> Self {
        let side = (2 * band + 1) as usize;
        Dense {
            dim,
            band,
            data: vec![Complex64::default(); side.pow(dim as u32)],
        }
    }

    fn side(&self) -> i32 {
        2 * self.band + 1
    }

    fn offset(&self, k: &[i32]) -> Option<usize> {
        let mut o = 0usize;
        for &c in k {
            if c.abs() > self.band {
                return None;
            }
            o = o * self.side() as usize + (c + self.band) as usize;
        }
        Some(o)
    }

    pub fn wavevector(&self, o: usize) -> Vec<i32> {
        let s = self.side() as usize;
        let mut k = vec![0; self.dim];
        let mut r = o;
        for a in (0..self.dim).rev() {
            k[a] = (r % s) as i32 - self.band;
            r /= s;
        }
        k
    }

    pub fn get(&self, k: &[i32]) -> Complex64 {
        self.offset(k).map_or(Complex64::default(), |o| self.data[o])
    }

    pub fn set(&mut self, k: &[i32], v: Complex64) {
        let o = self.offset(k).expect("wavevector outside band");
        self.data[o] = v;
    }

    /// Coefficients of the pointwise product, with the `(2 pi)^{-n/2}` factor
    /// of the orthonormal expansion.
    pub fn mul(&self, other: &Dense) -> Dense {
        let mut out = Dense::zeros(self.dim, self.band + other.band);
        let norm = (2.0 * PI).powf(-(self.dim as f64) / 2.0);
        let nz: Vec<(Vec<i32>, Complex64)> = other
            .data
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm_sqr() > 0.0)
            .map(|(o, v)| (other.wavevector(o), *v))
            .collect();
        for (o, a) in self.data.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let p = self.wavevector(o);
            for (q, b) in &nz {
                let k: Vec<i32> = p.iter().zip(q).map(|(x, y)| x + y).collect();
                let t = out.offset(&k).unwrap();
                out.data[t] += a * b * norm;
            }
        }
        out
    }

    /// `d/dx_axis`.
    pub fn deriv(&self, axis: usize) -> Dense {
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().enumerate() {
            let k = self.wavevector(o);
            *v *= Complex64::new(0.0, k[axis] as f64);
        }
        out
    }

    pub fn add(&self, other: &Dense) -> Dense {
        let band = self.band.max(other.band);
        let mut out = Dense::zeros(self.dim, band);
        for (o, v) in out.data.iter_mut().enumerate() {
            let k = out_wavevector(self.dim, band, o);
            *v = self.get(&k) + other.get(&k);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Dense {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `int a b dx` for real fields (Parseval).
    pub fn inner(&self, other: &Dense) -> f64 {
        let mut s = 0.0;
        for (o, v) in self.data.iter().enumerate() {
            let k = self.wavevector(o);
            s += (v * other.get(&k).conj()).re;
        }
        s
    }

    /// `int a dx`.
    pub fn integral(&self) -> f64 {
        let zero = vec![0; self.dim];
        (2.0 * PI).powf(self.dim as f64 / 2.0) * self.get(&zero).re
    }
}

fn out_wavevector(dim: usize, band: i32, o: usize) -> Vec<i32> {
    let s = (2 * band + 1) as usize;
    let mut k = vec![0; dim];
    let mut r = o;
    for a in (0..dim).rev() {
        k[a] = (r % s) as i32 - band;
        r /= s;
    }
    k
}

pub type Vector = Vec<Dense>;

fn from_cartesian(basis: &Basis, cart: &[Complex64]) -> Vector {
    let dim = basis.dim();
    let band = basis.cutoff() as i32;
    let mut out = vec![Dense::zeros(dim, band); dim];
    for (idx, k) in basis.wavevectors().iter().enumerate() {
        for c in 0..dim {
            out[c].set(&k[..dim], cart[idx * dim + c]);
        }
    }
    out
}

pub fn velocity(u: &SpectralVelocity) -> Vector {
    from_cartesian(u.basis(), &u.cartesian())
}

pub fn director(d: &DirectorState) -> Vector {
    from_cartesian(d.basis(), d.coeffs())
}

/// Restriction to the basis band, as Cartesian coefficients `[wavevector][component]`.
pub fn truncate(basis: &Arc<Basis>, v: &Vector) -> Vec<Complex64> {
    let dim = basis.dim();
    let mut out = Vec::with_capacity(basis.num_wavevectors() * dim);
    for k in basis.wavevectors() {
        for c in v.iter().take(dim) {
            out.push(c.get(&k[..dim]));
        }
    }
    out
}

/// Leray projection written out per wavevector: `w - k (k.w) / |k|^2`, zero mean removed.
pub fn leray(v: &Vector) -> Vector {
    let dim = v.len();
    let mut out = v.clone();
    for o in 0..v[0].data.len() {
        let k = v[0].wavevector(o);
        let k2: i32 = k.iter().map(|c| c * c).sum();
        if k2 == 0 {
            for c in out.iter_mut() {
                c.data[o] = Complex64::default();
            }
            continue;
        }
        let kw: Complex64 = (0..dim).map(|c| v[c].data[o] * k[c] as f64).sum();
        for c in 0..dim {
            out[c].data[o] = v[c].data[o] - kw * (k[c] as f64 / k2 as f64);
        }
    }
    out
}

/// `(u . grad) v` unprojected, full support.
pub fn advect(u: &Vector, v: &Vector) -> Vector {
    let dim = u.len();
    (0..v.len())
        .map(|c| {
            let mut acc = u[0].mul(&v[c].deriv(0));
            for j in 1..dim {
                acc = acc.add(&u[j].mul(&v[c].deriv(j)));
            }
            acc
        })
        .collect()
}

pub fn convective_b(u: &SpectralVelocity, v: &SpectralVelocity) -> Vec<Complex64> {
    truncate(u.basis(), &leray(&advect(&velocity(u), &velocity(v))))
}

pub fn transport_btilde(u: &SpectralVelocity, d: &DirectorState) -> Vec<Complex64> {
    truncate(u.basis(), &advect(&velocity(u), &director(d)))
}

/// `P div(grad d1^T grad d2)`, with `T_ij = sum_k d_i d1^k d_j d2^k`.
pub fn ericksen_m(d1: &DirectorState, d2: &DirectorState) -> Vec<Complex64> {
    let (a, b) = (director(d1), director(d2));
    let dim = a.len();
    let div: Vector = (0..dim)
        .map(|i| {
            let mut acc = Dense::zeros(dim, 0);
            for j in 0..dim {
                let mut t = Dense::zeros(dim, 0);
                for k in 0..dim {
                    t = t.add(&a[k].deriv(i).mul(&b[k].deriv(j)));
                }
                acc = acc.add(&t.deriv(j));
            }
            acc
        })
        .collect();
    truncate(d1.basis(), &leray(&div))
}

fn modulus_sq(d: &Vector) -> Dense {
    let mut r = d[0].mul(&d[0]);
    for c in &d[1..] {
        r = r.add(&c.mul(c));
    }
    r
}

/// `f~(|d|^2) d` on the full support.
pub fn polynomial_f_full(d: &DirectorState, poly: &PolynomialNonlinearity) -> Vector {
    let v = director(d);
    let dim = v.len();
    let r = modulus_sq(&v);
    let mut power = {
        let mut one = Dense::zeros(dim, 0);
        one.set(&vec![0; dim], Complex64::new((2.0 * PI).powf(dim as f64 / 2.0), 0.0));
        one
    };
    let mut ftilde = Dense::zeros(dim, 0);
    for &a in poly.coeffs() {
        ftilde = ftilde.add(&power.scale(a));
        power = power.mul(&r);
    }
    v.iter().map(|c| ftilde.mul(c)).collect()
}

pub fn polynomial_f(d: &DirectorState, poly: &PolynomialNonlinearity) -> Vec<Complex64> {
    truncate(d.basis(), &polynomial_f_full(d, poly))
}

/// `1/2 |grad d|^2 + 1/2 int F~(|d|^2)`, with `F~(r) = sum a_k r^{k+1} / (k+1)`.
pub fn energy_psi(d: &DirectorState, poly: &PolynomialNonlinearity) -> f64 {
    let v = director(d);
    let dim = v.len();
    let mut grad = 0.0;
    for c in &v {
        for a in 0..dim {
            let g = c.deriv(a);
            grad += g.inner(&g);
        }
    }
    let r = modulus_sq(&v);
    let mut power = r.clone();
    let mut pot = 0.0;
    for (k, &a) in poly.coeffs().iter().enumerate() {
        pot += a / (k + 1) as f64 * power.integral();
        power = power.mul(&r);
    }
    0.5 * grad + 0.5 * pot
}

/// `b(u, v, w) = sum_ij int u_i d_i v_j w_j`.
pub fn trilinear_b(u: &Vector, v: &Vector, w: &Vector) -> f64 {
    advect(u, v).iter().zip(w).map(|(a, b)| a.inner(b)).sum()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}
