//! The gamma kernel `K_{ρ_b(x), b}(t)`, i.e. the Gamma(ρ, b) density in `t`
//! whose shape `ρ` is chosen from the evaluation point `x`.
//!
//! Away from the origin (`x ≥ 2b`) the shape is `x/b`, so the kernel is
//! centred on `x`. Near the origin the shape is `(x/2b)² + 1`, which keeps
//! it in `[1, 2)` and the kernel bounded. The two rules meet with equal value
//! and equal slope at `x = 2b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{ln_gamma, psi};

/// Which piece of the shape rule is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `x ≥ 2b`, `ρ = x / b`
    Interior,
    /// `0 ≤ x < 2b`, `ρ = (x / 2b)² + 1`
    Boundary,
}

/// Resolved kernel parameters at an evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelShape {
    pub x: f64,
    pub b: f64,
    pub rho: f64,
    pub branch: Branch,
}

impl KernelShape {
    /// `dρ/dx` on the active branch.
    pub fn rho_slope(&self) -> f64 {
        match self.branch {
            Branch::Interior => 1.0 / self.b,
            Branch::Boundary => self.x / (2.0 * self.b * self.b),
        }
    }
}

fn check_point(x: f64, b: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::Domain(format!(
            "evaluation point must be finite and >= 0, got {x}"
        )));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Domain(format!(
            "bandwidth must be finite and > 0, got {b}"
        )));
    }
    Ok(())
}

/// Kernel shape at `x` for bandwidth `b`. At `x = 2b` the interior rule wins.
pub fn shape_params(x: f64, b: f64) -> Result<KernelShape> {
    check_point(x, b)?;
    let (rho, branch) = if x >= 2.0 * b {
        (x / b, Branch::Interior)
    } else {
        let r = x / (2.0 * b);
        (r * r + 1.0, Branch::Boundary)
    };
    if !rho.is_finite() {
        return Err(Error::Domain(format!(
            "kernel shape overflows for x = {x}, b = {b}"
        )));
    }
    Ok(KernelShape { x, b, rho, branch })
}

/// Gamma(ρ, b) density at `t ≥ 0`, evaluated in log space.
///
/// At `t = 0` this is the density's limit: `1/b` when `ρ = 1`, zero otherwise.
pub fn kernel_value(shape: &KernelShape, t: f64) -> Result<f64> {
    check_t(t, true)?;
    Ok(KernelPoint::new(shape).value(t, t.ln()))
}

/// `ln t - ln b - Ψ(ρ)`. Its expectation under the kernel itself is zero.
pub fn log_factor(shape: &KernelShape, t: f64) -> Result<f64> {
    check_t(t, false)?;
    Ok(t.ln() - shape.b.ln() - psi(shape.rho))
}

/// `∂K_{ρ_b(x), b}(t) / ∂x`: `(dρ/dx) · K · (ln t - ln b - Ψ(ρ))`.
pub fn kernel_x_derivative(x: f64, b: f64, t: f64) -> Result<f64> {
    let shape = shape_params(x, b)?;
    check_t(t, true)?;
    Ok(KernelPoint::new(&shape).x_derivative(t, t.ln()))
}

fn check_t(t: f64, allow_zero: bool) -> Result<()> {
    let ok = t.is_finite() && (t > 0.0 || (allow_zero && t == 0.0));
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "kernel argument must be finite and positive, got {t}"
        )))
    }
}

/// A kernel with every `t`-independent quantity precomputed; this is what the
/// estimators use in their inner loops.
#[derive(Debug, Clone, Copy)]
pub struct KernelPoint {
    rho: f64,
    inv_b: f64,
    ln_b: f64,
    /// `-ρ ln b - ln Γ(ρ)`
    log_norm: f64,
    digamma_rho: f64,
    slope: f64,
}

impl KernelPoint {
    pub fn new(shape: &KernelShape) -> Self {
        let ln_b = shape.b.ln();
        Self {
            rho: shape.rho,
            inv_b: 1.0 / shape.b,
            ln_b,
            log_norm: -shape.rho * ln_b - ln_gamma(shape.rho),
            digamma_rho: psi(shape.rho),
            slope: shape.rho_slope(),
        }
    }

    /// Kernel value given `t` and its logarithm.
    #[inline]
    pub fn value(&self, t: f64, ln_t: f64) -> f64 {
        if t == 0.0 {
            return if self.rho == 1.0 { self.inv_b } else { 0.0 };
        }
        // exp underflows to exactly 0 in the far tails
        ((self.rho - 1.0) * ln_t - t * self.inv_b + self.log_norm).exp()
    }

    /// x-derivative of the kernel given `t` and its logarithm.
    #[inline]
    pub fn x_derivative(&self, t: f64, ln_t: f64) -> f64 {
        if t == 0.0 || self.slope == 0.0 {
            return 0.0;
        }
        let k = self.value(t, ln_t);
        if k == 0.0 {
            return 0.0;
        }
        self.slope * k * (ln_t - self.ln_b - self.digamma_rho)
    }

    /// Both the value and the x-derivative, sharing the exponential.
    #[inline]
    pub fn value_and_derivative(&self, t: f64, ln_t: f64) -> (f64, f64) {
        let k = self.value(t, ln_t);
        if t == 0.0 || k == 0.0 {
            return (k, 0.0);
        }
        (k, self.slope * k * (ln_t - self.ln_b - self.digamma_rho))
    }
}
