use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `f(d) = f~(|d|^2) d` with `f~(r) = b_0 + b_1 r + ... + b_N r^N`, `b_N > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct PolynomialNonlinearity {
    coeffs: Vec<f64>,
    antiderivative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    coeffs: Vec<f64>,
}

impl TryFrom<PolynomialRepr> for PolynomialNonlinearity {
    type Error = Error;

    fn try_from(r: PolynomialRepr) -> Result<Self> {
        Self::new(r.coeffs)
    }
}

impl From<PolynomialNonlinearity> for PolynomialRepr {
    fn from(p: PolynomialNonlinearity) -> Self {
        PolynomialRepr { coeffs: p.coeffs }
    }
}

impl Default for PolynomialNonlinearity {
    fn default() -> Self {
        Self::ginzburg_landau()
    }
}

impl PolynomialNonlinearity {
    /// `coeffs = [b_0, ..., b_N]` with `N >= 1` and `b_N > 0`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidPolynomial(format!(
                "need at least b_0 and b_1 (degree N >= 1), got {} coefficient(s)",
                coeffs.len()
            )));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidPolynomial(format!("non-finite coefficient {bad}")));
        }
        let lead = *coeffs.last().unwrap();
        if lead <= 0.0 {
            return Err(Error::InvalidPolynomial(format!(
                "leading coefficient b_N must be positive, got {lead}"
            )));
        }
        let antiderivative = std::iter::once(0.0)
            .chain(coeffs.iter().enumerate().map(|(j, b)| b / (j + 1) as f64))
            .collect();
        Ok(Self { coeffs, antiderivative })
    }

    /// `f~(r) = r - 1`, so `f(d) = (|d|^2 - 1) d`.
    pub fn ginzburg_landau() -> Self {
        Self::new(vec![-1.0, 1.0]).unwrap()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficients of `F~` (antiderivative of `f~` with `F~(0) = 0`), index = power.
    pub fn antiderivative_coeffs(&self) -> &[f64] {
        &self.antiderivative
    }

    /// Three-dimensional runs only admit `N = 1`.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if dim == 3 && self.degree() != 1 {
            return Err(Error::InvalidPolynomial(format!(
                "dimension 3 requires N = 1, got N = {}",
                self.degree()
            )));
        }
        Ok(())
    }

    pub fn f_tilde(&self, r: f64) -> f64 {
        horner(&self.coeffs, r)
    }

    pub fn big_f_tilde(&self, r: f64) -> f64 {
        horner(&self.antiderivative, r)
    }

    pub fn f_tilde_derivative(&self, r: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (j, b)| acc * r + j as f64 * b)
    }

    /// `C = sup_{r >= 0} (b_N/2 r^N - f~(r))^+`, so that
    /// `f(d).d >= b_N/2 |d|^(2N+2) - C |d|^2` pointwise.
    pub fn coercivity_gap(&self) -> f64 {
        let c0 = 0.5 * self.coeffs[self.degree()];
        let n = self.degree() as i32;
        maximize(|r| c0 * r.powi(n) - self.f_tilde(r), self.root_scale()).max(0.0)
    }

    /// `inf_{r >= 0} F~(r)`; non-positive since `F~(0) = 0`.
    pub fn potential_floor(&self) -> f64 {
        -maximize(|r| -self.big_f_tilde(r), self.root_scale()).max(0.0)
    }

    // bound on where the leading term dominates
    fn root_scale(&self) -> f64 {
        let c0 = 0.5 * self.coeffs[self.degree()];
        let n = self.degree() as f64;
        1.0 + self.coeffs[..self.degree()]
            .iter()
            .map(|b| (b.abs() / c0).powf(1.0 / n))
            .sum::<f64>()
            * 2.0
    }
}

/// Max of `g` on `[0, scale]`: dense scan, then golden-section polish.
fn maximize(g: impl Fn(f64) -> f64, scale: f64) -> f64 {
    let samples = 20_000;
    let mut best = g(0.0);
    let mut arg = 0.0;
    for i in 1..=samples {
        let r = scale * i as f64 / samples as f64;
        let v = g(r);
        if v > best {
            best = v;
            arg = r;
        }
    }
    let h = scale / samples as f64;
    let (mut a, mut b) = ((arg - h).max(0.0), arg + h);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if g(x1) > g(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    best.max(g(0.5 * (a + b)))
}

fn horner(coeffs: &[f64], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, b| acc * r + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ginzburg_landau_values() {
        let p = PolynomialNonlinearity::ginzburg_landau();
        assert_eq!(p.degree(), 1);
        assert_eq!(p.f_tilde(1.0), 0.0);
        assert_eq!(p.big_f_tilde(0.0), 0.0);
        // F~(r) = r^2/2 - r
        assert!((p.big_f_tilde(3.0) - 1.5).abs() < 1e-15);
        // sup (r/2 - r + 1) = 1 at r = 0
        assert!((p.coercivity_gap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_matches_derivative() {
        let p = PolynomialNonlinearity::new(vec![0.5, -2.0, 0.3, 1.5]).unwrap();
        for r in [0.0, 0.3, 1.1, 2.7] {
            let h = 1e-5;
            let fd = (p.big_f_tilde(r + h) - p.big_f_tilde(r - h)) / (2.0 * h);
            assert!((fd - p.f_tilde(r)).abs() < 1e-8);
            let fd2 = (p.f_tilde(r + h) - p.f_tilde(r - h)) / (2.0 * h);
            assert!((fd2 - p.f_tilde_derivative(r)).abs() < 1e-7);
        }
    }

    #[test]
    fn coercivity_gap_bounds_pointwise() {
        let p = PolynomialNonlinearity::new(vec![-3.0, 2.0, -4.0, 1.0]).unwrap();
        let c = p.coercivity_gap();
        let c0 = 0.5;
        for i in 0..4000 {
            let r = i as f64 * 0.005;
            assert!(p.f_tilde(r) * r >= c0 * r.powi(4) - c * r - 1e-9);
        }
    }

    #[test]
    fn potential_floor_of_ginzburg_landau() {
        // F~(r) = -r + r^2/2, minimum -1/2 at r = 1
        let p = PolynomialNonlinearity::ginzburg_landau();
        assert!((p.potential_floor() + 0.5).abs() < 1e-12);
        let q = PolynomialNonlinearity::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(q.potential_floor(), 0.0);
    }

    #[test]
    fn validation() {
        assert!(PolynomialNonlinearity::new(vec![1.0]).is_err());
        assert!(PolynomialNonlinearity::new(vec![1.0, -1.0]).is_err());
        assert!(PolynomialNonlinearity::new(vec![1.0, 0.0]).is_err());
        assert!(PolynomialNonlinearity::new(vec![f64::NAN, 1.0]).is_err());
        let p = PolynomialNonlinearity::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert!(p.check_dim(2).is_ok());
        assert!(p.check_dim(3).is_err());
    }

    #[test]
    fn serde_validates() {
        let ok: PolynomialNonlinearity = serde_json::from_str(r#"{"coeffs":[-1,1]}"#).unwrap();
        assert_eq!(ok, PolynomialNonlinearity::ginzburg_landau());
        assert!(serde_json::from_str::<PolynomialNonlinearity>(r#"{"coeffs":[1,-1]}"#).is_err());
    }
}
