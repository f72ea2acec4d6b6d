//! Empirical constants for the continuity bounds of `B`, `B~`, `M` and `f`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{neumann_laplacian_apply, OperatorWorkspace, PolynomialNonlinearity};
use crate::error::{Error, Result};
use crate::spectral_basis::{random_director, random_velocity, Basis, NormKind};

/// Largest observed ratio `lhs / rhs` for one inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundSweep {
    pub name: String,
    pub description: String,
    /// Max ratio over the first half of the samples.
    pub max_ratio_half: f64,
    /// Max ratio over all samples.
    pub max_ratio: f64,
}

impl BoundSweep {
    pub fn doubling_factor(&self) -> f64 {
        self.max_ratio / self.max_ratio_half
    }

    pub fn is_finite(&self) -> bool {
        self.max_ratio.is_finite() && self.max_ratio_half.is_finite()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorBoundReport {
    pub dim: usize,
    pub cutoff: usize,
    pub samples: usize,
    pub seed: u64,
    pub bounds: Vec<BoundSweep>,
}

struct Tracker {
    name: &'static str,
    description: &'static str,
    half: f64,
    all: f64,
}

/// Sample `samples` random in-span inputs and record the worst ratio of each bound.
pub fn sweep_operator_bounds(
    basis: &Arc<Basis>,
    poly: &PolynomialNonlinearity,
    samples: usize,
    seed: u64,
) -> Result<OperatorBoundReport> {
    if samples < 2 {
        return Err(Error::InvalidArgument("bound sweep needs at least 2 samples".into()));
    }
    poly.check_dim(basis.dim())?;
    let mut ws = OperatorWorkspace::new(basis);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = basis.dim() as f64;
    let a = 1.0 - n / 4.0;
    let b = n / 4.0;
    let big_n = poly.degree();
    let mut trackers = [
        Tracker {
            name: "convective_interpolation",
            description: "|B(u,v)|_V' / (|u|^(1-n/4) |grad u|^(n/4) |v|^(1-n/4) |grad v|^(n/4))",
            half: 0.0,
            all: 0.0,
        },
        Tracker {
            name: "convective_pivot",
            description: "|B(u,v)|_V' / (|u|_H |v|_H)",
            half: 0.0,
            all: 0.0,
        },
        Tracker {
            name: "transport_gagliardo_nirenberg",
            description: "|B~(u,d)| / (|u|^(1-n/4) |grad u|^(n/4) |grad d|^(1-n/4) |lap d|^(n/4))",
            half: 0.0,
            all: 0.0,
        },
        Tracker {
            name: "ericksen_stress",
            description: "|M(d1,d2)|_V' / prod_i (|grad di|^(1-n/4) |lap di|^(n/4))",
            half: 0.0,
            all: 0.0,
        },
        Tracker {
            name: "polynomial_growth",
            description: "|f(d)|_L2 / (1 + |d|_{L^(4N+2)}^(2N+1))",
            half: 0.0,
            all: 0.0,
        },
    ];
    let k = basis.cutoff();
    for s in 0..samples {
        let draw_u = |rng: &mut ChaCha8Rng| {
            let slope = rng.gen_range(0.0..3.0);
            let band = rng.gen_range(1..=k);
            random_velocity(basis, rng, 1.0, slope, band)
        };
        let u = draw_u(&mut rng);
        let v = draw_u(&mut rng);
        let draw_d = |rng: &mut ChaCha8Rng, amp: f64| {
            let slope = rng.gen_range(0.0..3.0);
            let band = rng.gen_range(1..=k);
            random_director(basis, rng, amp, slope, band)
        };
        let d1 = draw_d(&mut rng, 1.0);
        let d2 = draw_d(&mut rng, 1.0);
        let amp = 10f64.powf(rng.gen_range(-1.0..1.0));
        let df = draw_d(&mut rng, amp);

        let hu = u.norm_sq(NormKind::L2).sqrt();
        let gu = u.norm_sq(NormKind::H1Seminorm).sqrt();
        let hv = v.norm_sq(NormKind::L2).sqrt();
        let gv = v.norm_sq(NormKind::H1Seminorm).sqrt();
        let buv = ws.convective_b(&u, &v)?.norm_sq(NormKind::VDual).sqrt();
        let bt = ws.director_transport_btilde(&u, &d1)?.norm_sq(NormKind::L2).sqrt();
        let m12 = ws.ericksen_m(&d1, &d2)?.norm_sq(NormKind::VDual).sqrt();
        let gd = |d: &crate::spectral_basis::DirectorState| {
            let g = d.norm_sq(NormKind::H1Seminorm).sqrt();
            let l = neumann_laplacian_apply(d).norm_sq(NormKind::L2).sqrt();
            g.powf(a) * l.powf(b)
        };
        let fnorm = ws.polynomial_f(&df, poly)?.norm_sq(NormKind::L2).sqrt();
        let lp = ws.lebesgue_norm(&df, 2 * big_n + 1)?;

        let ratios = [
            buv / (hu.powf(a) * gu.powf(b) * hv.powf(a) * gv.powf(b)),
            buv / (hu * hv),
            bt / (hu.powf(a) * gu.powf(b) * gd(&d1)),
            m12 / (gd(&d1) * gd(&d2)),
            fnorm / (1.0 + lp.powi(2 * big_n as i32 + 1)),
        ];
        for (t, r) in trackers.iter_mut().zip(ratios) {
            // zero/zero draws carry no information
            if r.is_nan() {
                continue;
            }
            t.all = t.all.max(r);
            if s < samples / 2 {
                t.half = t.half.max(r);
            }
        }
    }
    Ok(OperatorBoundReport {
        dim: basis.dim(),
        cutoff: k,
        samples,
        seed,
        bounds: trackers
            .iter()
            .map(|t| BoundSweep {
                name: t.name.to_string(),
                description: t.description.to_string(),
                max_ratio_half: t.half,
                max_ratio: t.all,
            })
            .collect(),
    })
}
