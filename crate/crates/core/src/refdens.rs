//! Reference distributions with closed-form derivatives and seeded samplers.
//!
//! These are the "true" densities plugged into the bandwidth formulas and
//! drawn from in simulations: the Maxwell distribution and the χ² family.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Sample, SampleMeta};
use crate::specfun::ln_gamma;

/// Density value with its first two derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivs {
    pub f: f64,
    pub d1: f64,
    pub d2: f64,
}

/// A density on `[0, ∞)` known in closed form together with `f'` and `f''`.
pub trait ReferenceDensity: Sync {
    fn label(&self) -> String;

    fn derivs(&self, x: f64) -> Derivs;

    fn pdf(&self, x: f64) -> f64 {
        self.derivs(x).f
    }

    fn d1(&self, x: f64) -> f64 {
        self.derivs(x).d1
    }

    fn d2(&self, x: f64) -> f64 {
        self.derivs(x).d2
    }
}

/// Maxwell distribution with scale `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxwellParams {
    sigma: f64,
}

impl MaxwellParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma > 0.0 {
            Ok(Self { sigma })
        } else {
            Err(Error::Parameter(format!(
                "Maxwell sigma must be positive, got {sigma}"
            )))
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// `f`, `f'` and `f''` of the Maxwell density at `x ≥ 0`.
pub fn maxwell_pdf_derivs(p: &MaxwellParams, x: f64) -> Derivs {
    let s = p.sigma;
    let s2 = s * s;
    let c = (2.0 / PI).sqrt() * (-x * x / (2.0 * s2)).exp();
    Derivs {
        f: c * x * x / (s2 * s),
        d1: -c * x * (x * x - 2.0 * s2) / (s2 * s2 * s),
        d2: c * (2.0 * s2 * s2 - 5.0 * s2 * x * x + x.powi(4)) / (s2 * s2 * s2 * s),
    }
}

/// χ² distribution with `m` degrees of freedom, restricted to `m ≥ 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChiSquareParams {
    m: u32,
}

impl ChiSquareParams {
    pub fn new(m: u32) -> Result<Self> {
        if m >= 3 {
            Ok(Self { m })
        } else {
            Err(Error::Parameter(format!(
                "chi-square needs at least 3 degrees of freedom, got {m}"
            )))
        }
    }

    pub fn m(&self) -> u32 {
        self.m
    }
}

/// χ²_m density and its first two derivatives at `x > 0`, via logarithmic
/// differentiation: with `ℓ = ln f`, `f' = f ℓ'` and `f'' = f (ℓ'² + ℓ'')`.
pub fn chi2_pdf_derivs(p: &ChiSquareParams, x: f64) -> Derivs {
    let k = 0.5 * p.m as f64;
    let a = k - 1.0;
    let log_f = a * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k);
    let f = if x == 0.0 { 0.0 } else { log_f.exp() };
    let l1 = a / x - 0.5;
    let l2 = -a / (x * x);
    Derivs {
        f,
        d1: f * l1,
        d2: f * (l1 * l1 + l2),
    }
}

/// One of the supported reference families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Maxwell { sigma: f64 },
    ChiSquare { m: u32 },
}

impl Distribution {
    pub fn maxwell(sigma: f64) -> Result<Self> {
        MaxwellParams::new(sigma).map(|p| Distribution::Maxwell { sigma: p.sigma })
    }

    pub fn chi_square(m: u32) -> Result<Self> {
        ChiSquareParams::new(m).map(|p| Distribution::ChiSquare { m: p.m })
    }

    /// Re-check parameters; needed after deserialization.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Distribution::Maxwell { sigma } => MaxwellParams::new(sigma).map(drop),
            Distribution::ChiSquare { m } => ChiSquareParams::new(m).map(drop),
        }
    }

    /// Draw `n` values; deterministic in `(seed, stream)`.
    ///
    /// Maxwell draws are `σ·√(g₁² + g₂² + g₃²)` and χ²_m draws are sums of `m`
    /// squared standard normals.
    pub fn sample_stream(&self, n: usize, seed: u64, stream: u64) -> Result<Sample> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Parameter("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let squares = match *self {
            Distribution::Maxwell { .. } => 3,
            Distribution::ChiSquare { m } => m,
        };
        let values = (0..n)
            .map(|_| {
                let ss: f64 = (0..squares)
                    .map(|_| {
                        let g: f64 = rng.sample(StandardNormal);
                        g * g
                    })
                    .sum();
                match *self {
                    Distribution::Maxwell { sigma } => sigma * ss.sqrt(),
                    Distribution::ChiSquare { .. } => ss,
                }
            })
            .collect();
        Sample::with_meta(
            values,
            SampleMeta {
                seed,
                stream,
                source: self.label(),
            },
        )
    }
}

/// `n` draws from `dist` under `seed` (stream 0).
pub fn sample(dist: &Distribution, n: usize, seed: u64) -> Result<Sample> {
    dist.sample_stream(n, seed, 0)
}

impl ReferenceDensity for Distribution {
    fn label(&self) -> String {
        self.to_string()
    }

    fn derivs(&self, x: f64) -> Derivs {
        match *self {
            Distribution::Maxwell { sigma } => maxwell_pdf_derivs(&MaxwellParams { sigma }, x),
            Distribution::ChiSquare { m } => chi2_pdf_derivs(&ChiSquareParams { m }, x),
        }
    }
}

impl ReferenceDensity for MaxwellParams {
    fn label(&self) -> String {
        Distribution::Maxwell { sigma: self.sigma }.to_string()
    }

    fn derivs(&self, x: f64) -> Derivs {
        maxwell_pdf_derivs(self, x)
    }
}

impl ReferenceDensity for ChiSquareParams {
    fn label(&self) -> String {
        Distribution::ChiSquare { m: self.m }.to_string()
    }

    fn derivs(&self, x: f64) -> Derivs {
        chi2_pdf_derivs(self, x)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Maxwell { sigma } => write!(f, "maxwell(sigma={sigma})"),
            Distribution::ChiSquare { m } => write!(f, "chi2(m={m})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{central_difference, integrate_semi_infinite};

    const F_M1: f64 = 0.483_941_449_038_286_7;

    #[test]
    fn maxwell_examples() {
        let p = MaxwellParams::new(1.0).unwrap();
        let d = maxwell_pdf_derivs(&p, 1.0);
        assert!((d.f - F_M1).abs() < 1e-15);
        assert!((d.d1 - F_M1).abs() < 1e-15);
        assert!((d.d2 + 2.0 * F_M1).abs() < 1e-15);
        assert!(maxwell_pdf_derivs(&p, 2f64.sqrt()).d1.abs() < 1e-15);
        let d0 = maxwell_pdf_derivs(&p, 0.0);
        assert!((d0.d2 - 2.0 * 2f64.sqrt() / PI.sqrt()).abs() < 1e-15);
        assert!((d0.d2 - 1.595_769_1).abs() < 1e-7);
        assert!(MaxwellParams::new(0.0).is_err());
    }

    #[test]
    fn chi2_examples() {
        let p = ChiSquareParams::new(4).unwrap();
        let d = chi2_pdf_derivs(&p, 2.0);
        assert!((d.f - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(d.d1.abs() < 1e-15);
        for x in [0.3_f64, 1.0, 5.0] {
            let want = (1.0 - x / 2.0) * (-x / 2.0).exp() / 4.0;
            assert!((chi2_pdf_derivs(&p, x).d1 - want).abs() < 1e-14);
        }
        assert!(ChiSquareParams::new(2).is_err());
        assert!(Distribution::chi_square(1).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        let dists = [
            Distribution::maxwell(1.0).unwrap(),
            Distribution::maxwell(0.7).unwrap(),
            Distribution::chi_square(6).unwrap(),
            Distribution::chi_square(3).unwrap(),
        ];
        for dist in dists {
            for i in 0..60 {
                let x = 0.05 + i as f64 * (5.0 - 0.05) / 59.0;
                let d = dist.derivs(x);
                let fd1 = central_difference(|t| dist.pdf(t), x, h);
                let fd2 = central_difference(|t| dist.d1(t), x, h);
                let scale1 = d.d1.abs().max(1e-3 * dist.pdf(x).abs()).max(1e-12);
                let scale2 = d.d2.abs().max(1e-3 * dist.pdf(x).abs()).max(1e-12);
                assert!((fd1 - d.d1).abs() <= 1e-6 * scale1, "{dist} d1 at {x}");
                assert!((fd2 - d.d2).abs() <= 1e-6 * scale2, "{dist} d2 at {x}");
            }
        }
    }

    #[test]
    fn chi2_m6_second_derivative_at_one() {
        let p = ChiSquareParams::new(6).unwrap();
        let fd = central_difference(|t| chi2_pdf_derivs(&p, t).d1, 1.0, 1e-6);
        let d2 = chi2_pdf_derivs(&p, 1.0).d2;
        assert!(((fd - d2) / d2).abs() < 1e-6);
    }

    #[test]
    fn densities_integrate_to_one() {
        for dist in [
            Distribution::maxwell(1.0).unwrap(),
            Distribution::maxwell(2.5).unwrap(),
            Distribution::chi_square(3).unwrap(),
            Distribution::chi_square(4).unwrap(),
            Distribution::chi_square(9).unwrap(),
        ] {
            let r = integrate_semi_infinite(|x| dist.pdf(x), 1e-12).unwrap();
            assert!((r.value - 1.0).abs() < 1e-8, "{dist}: {}", r.value);
        }
    }

    #[test]
    fn chi2_3_is_squared_maxwell() {
        let chi = ChiSquareParams::new(3).unwrap();
        let mw = MaxwellParams::new(1.0).unwrap();
        for x in [0.01, 0.3, 1.0, 2.7, 9.0] {
            let lhs = chi2_pdf_derivs(&chi, x).f;
            let rhs = maxwell_pdf_derivs(&mw, x.sqrt()).f / (2.0 * x.sqrt());
            assert!((lhs - rhs).abs() <= 1e-14 * lhs, "x = {x}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = Distribution::maxwell(1.0).unwrap();
        let a = sample(&d, 100, 42).unwrap();
        let b = sample(&d, 100, 42).unwrap();
        assert_eq!(a.values(), b.values());
        let c = d.sample_stream(100, 42, 1).unwrap();
        assert_ne!(a.values(), c.values());
        assert!(sample(&d, 0, 1).is_err());
    }

    #[test]
    fn sample_means() {
        let d = Distribution::maxwell(1.0).unwrap();
        let s = sample(&d, 1_000_000, 7).unwrap();
        let mean = s.values().iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 2.0 * (2.0 / PI).sqrt()).abs() < 0.005, "{mean}");
        assert!(s.values().iter().all(|&v| v > 0.0));

        let d = Distribution::chi_square(4).unwrap();
        let s = sample(&d, 1_000_000, 7).unwrap();
        let mean = s.values().iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 4.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn distribution_json_shape() {
        let d: Distribution = serde_json::from_str(r#"{"kind":"maxwell","sigma":1.0}"#).unwrap();
        assert_eq!(d, Distribution::Maxwell { sigma: 1.0 });
        let d: Distribution = serde_json::from_str(r#"{"kind":"chi_square","m":2}"#).unwrap();
        assert!(d.validate().is_err());
    }
}
