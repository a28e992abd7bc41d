//! Special functions used by the kernels and the asymptotic theory.
//!
//! Everything here works on `f64`. Log-gamma uses a Lanczos approximation
//! (g = 7, nine terms) with the upward recurrence for small arguments; the
//! digamma function uses its asymptotic series once the argument has been
//! shifted past [`DIGAMMA_SERIES_THRESHOLD`].

use crate::error::{Error, Result};

/// A strictly positive, finite real number.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PositiveReal(f64);

impl PositiveReal {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::Domain(format!(
                "expected a finite positive value, got {value}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PositiveReal {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<PositiveReal> for f64 {
    fn from(p: PositiveReal) -> f64 {
        p.0
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `0.5 * ln(2π)`
pub(crate) const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Arguments at or above this value go straight to the asymptotic digamma series.
pub const DIGAMMA_SERIES_THRESHOLD: f64 = 16.0;

/// `ln Γ(z)` for `z > 0`.
pub fn log_gamma(z: PositiveReal) -> f64 {
    ln_gamma(z.get())
}

/// Unchecked log-gamma; the caller guarantees `z > 0`.
pub(crate) fn ln_gamma(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z < 0.5 {
        // Γ(z) = Γ(z + 1) / z
        return ln_gamma(z + 1.0) - z.ln();
    }
    let z = z - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Digamma function Ψ(z) = d/dz ln Γ(z) for `z > 0`.
pub fn digamma(z: PositiveReal) -> f64 {
    psi(z.get())
}

pub(crate) fn psi(mut z: f64) -> f64 {
    debug_assert!(z > 0.0);
    let mut shift = 0.0;
    while z < DIGAMMA_SERIES_THRESHOLD {
        shift -= 1.0 / z;
        z += 1.0;
    }
    let r = 1.0 / z;
    let r2 = r * r;
    // Bernoulli-number tail through z^-10.
    let tail = r2
        * (1.0 / 12.0
            - r2 * (1.0 / 120.0 - r2 * (1.0 / 252.0 - r2 * (1.0 / 240.0 - r2 * (1.0 / 132.0)))));
    shift + z.ln() - 0.5 * r - tail
}

/// The five-term asymptotic expansion
/// `ln z - 1/(2z) - 1/(12z²) + 1/(120z⁴) - 1/(252z⁶)`, accurate to `O(z⁻⁸)`.
///
/// Only meaningful for large `z`; kept as an independent cross-check on
/// [`digamma`].
pub fn digamma_asymptotic(z: PositiveReal) -> f64 {
    let z = z.get();
    let r2 = 1.0 / (z * z);
    z.ln() - 0.5 / z - r2 / 12.0 + r2 * r2 / 120.0 - r2 * r2 * r2 / 252.0
}

/// Stirling ratio `R(z) = √(2π) e^{-z} z^{z+1/2} / Γ(z+1)` for `z ≥ 0`.
///
/// `R` increases from `R(0) = 0` towards 1 and stays strictly below 1.
pub fn stirling_ratio(z: f64) -> Result<f64> {
    if !(z >= 0.0) || z.is_infinite() {
        return Err(Error::Domain(format!(
            "stirling_ratio needs finite z >= 0, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    Ok(ln_stirling_ratio(z).exp())
}

/// `ln R(z)` for `z > 0`.
pub(crate) fn ln_stirling_ratio(z: f64) -> f64 {
    if z >= 10.0 {
        // ln Γ(z+1) = (z + ½) ln z - z + ½ ln 2π + Σ B_{2k} / (2k(2k-1) z^{2k-1})
        let r = 1.0 / z;
        let r2 = r * r;
        let series = r
            * (1.0 / 12.0
                - r2 * (1.0 / 360.0
                    - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 * (1.0 / 1188.0)))));
        -series
    } else {
        HALF_LN_2PI - z + (z + 0.5) * z.ln() - ln_gamma(z + 1.0)
    }
}

/// `√π`
pub(crate) const SQRT_PI: f64 = 1.772_453_850_905_516;
