//! Leading-order theory for the derivative estimator: bias, variance, MSE and
//! MISE, plus the three bandwidth selectors built from them.
//!
//! Every quantity here is a plug-in: it needs the true density `f` and its
//! first two derivatives, supplied through [`ReferenceDensity`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::round_sig;
use crate::numerics::{find_root, integrate_semi_infinite};
use crate::refdens::ReferenceDensity;
use crate::specfun::{ln_gamma, ln_stirling_ratio, SQRT_PI};

/// Relative tolerance for the theory integrals.
pub const THEORY_REL_TOL: f64 = 1e-10;

/// Lower and upper end of the bracket scan for the refined bandwidth.
pub const ROOT_SCAN_RANGE: (f64, f64) = (1e-4, 1.0);
/// Number of log-spaced brackets in the scan.
pub const ROOT_SCAN_BRACKETS: usize = 200;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

fn check_interior(x: f64, b: f64) -> Result<()> {
    check_positive("x", x)?;
    check_positive("b", b)?;
    if x < 2.0 * b {
        return Err(Error::Regime(format!(
            "x = {x} lies in the boundary region [0, 2b) for b = {b}"
        )));
    }
    Ok(())
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::Domain("sample size must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `P(x) = (f(x)/(3x²) + f''(x))²`
#[allow(non_snake_case)]
pub fn curvature_P(f: &dyn ReferenceDensity, x: f64) -> Result<f64> {
    check_positive("x", x)?;
    let d = f.derivs(x);
    let s = d.f / (3.0 * x * x) + d.d2;
    Ok(s * s)
}

/// Leading interior bias of `f̂'(x)`: `b (f(x)/(12x²) + f''(x)/4)`.
pub fn bias_interior(f: &dyn ReferenceDensity, x: f64, b: f64) -> Result<f64> {
    check_interior(x, b)?;
    let d = f.derivs(x);
    Ok(b * (d.f / (12.0 * x * x) + 0.25 * d.d2))
}

/// The factor `(3κ² - 6κ - 1)/(6κ)` multiplying `f'(x)` in the boundary bias.
pub fn boundary_bias_coefficient(kappa: f64) -> f64 {
    (3.0 * kappa * kappa - 6.0 * kappa - 1.0) / (6.0 * kappa)
}

/// Leading bias at `x = κb` inside the boundary region:
/// `f'(κb)(3κ² - 6κ - 1)/(6κ) + b f''(κb)(7κ/48 + κ²/2)`.
pub fn bias_boundary(f: &dyn ReferenceDensity, b: f64, kappa: f64) -> Result<f64> {
    check_positive("b", b)?;
    check_positive("kappa", kappa)?;
    if kappa > 2.0 {
        return Err(Error::Regime(format!(
            "kappa = {kappa} is outside the boundary region (0, 2]"
        )));
    }
    let d = f.derivs(kappa * b);
    Ok(d.d1 * boundary_bias_coefficient(kappa)
        + b * d.d2 * (7.0 * kappa / 48.0 + 0.5 * kappa * kappa))
}

/// Leading interior variance of `f̂'(x)`:
/// `n⁻¹ b^{-3/2} x^{-1/2} / (2√π) · (f/(2x) + b (f/(4x²) - f'/(4x)))`.
pub fn variance_leading(f: &dyn ReferenceDensity, x: f64, b: f64, n: u64) -> Result<f64> {
    check_interior(x, b)?;
    check_n(n)?;
    let d = f.derivs(x);
    let scale = 1.0 / (n as f64 * b.powf(1.5) * x.sqrt() * 2.0 * SQRT_PI);
    Ok(scale * (d.f / (2.0 * x) + b * (d.f / (4.0 * x * x) - d.d1 / (4.0 * x))))
}

/// The constant `B_b(x) = b⁻⁵ x² Γ(2x/b - 1) / (2^{2x/b-2} Γ²(x/b + 1))` from
/// the second moment of the derivative kernel, in three forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConstant {
    /// `B_b(x)` exactly as defined above.
    pub exact: f64,
    /// `B_b(x) / 2`: the factor in `∫ K'² f = normalized · E[L² f(η)]` with
    /// `η ~ Gamma(2x/b - 1, b/2)` a properly normalized density. This is the
    /// quantity that tends to `b^{-5/2} x^{-1/2} / (2√π)`.
    pub normalized: f64,
    /// `normalized` rebuilt from Stirling ratios:
    /// `b^{-5/2} x^{-1/2} R²(x/b) / (2√π R(2x/b) (1 - b/(2x)))`.
    pub stirling_form: f64,
}

/// See [`BoundaryConstant`]. Requires `2x/b > 1`.
pub fn boundary_constant(x: f64, b: f64) -> Result<BoundaryConstant> {
    check_positive("x", x)?;
    check_positive("b", b)?;
    let k = x / b;
    if 2.0 * k <= 1.0 {
        return Err(Error::Domain(format!(
            "need 2x/b > 1, got 2x/b = {}",
            2.0 * k
        )));
    }
    let ln_exact = -5.0 * b.ln() + 2.0 * x.ln() + ln_gamma(2.0 * k - 1.0)
        - (2.0 * k - 2.0) * std::f64::consts::LN_2
        - 2.0 * ln_gamma(k + 1.0);
    let exact = ln_exact.exp();
    let ln_stirling = -2.5 * b.ln() - 0.5 * x.ln() + 2.0 * ln_stirling_ratio(k)
        - ln_stirling_ratio(2.0 * k)
        - (1.0 - b / (2.0 * x)).ln();
    Ok(BoundaryConstant {
        exact,
        normalized: 0.5 * exact,
        stirling_form: ln_stirling.exp() / (2.0 * SQRT_PI),
    })
}

/// Large-`x/b` limit of [`BoundaryConstant::normalized`].
pub fn boundary_constant_asymptote(x: f64, b: f64) -> f64 {
    b.powf(-2.5) / (x.sqrt() * 2.0 * SQRT_PI)
}

/// `lim b³ B_b(κb)` at fixed `κ = x/b`: `κ² Γ(2κ - 1) / (2^{2κ-2} Γ²(κ + 1))`.
pub fn boundary_constant_fixed_ratio_limit(kappa: f64) -> Result<f64> {
    check_positive("kappa", kappa)?;
    if 2.0 * kappa <= 1.0 {
        return Err(Error::Domain(format!("need 2κ > 1, got κ = {kappa}")));
    }
    let ln = 2.0 * kappa.ln() + ln_gamma(2.0 * kappa - 1.0)
        - (2.0 * kappa - 2.0) * std::f64::consts::LN_2
        - 2.0 * ln_gamma(kappa + 1.0);
    Ok(ln.exp())
}

/// `(b²/16) P(x) + variance_leading(f, x, b, n)`
pub fn mse_leading(f: &dyn ReferenceDensity, x: f64, b: f64, n: u64) -> Result<f64> {
    let v = variance_leading(f, x, b, n)?;
    Ok(b * b / 16.0 * curvature_P(f, x)? + v)
}

/// Optimal bandwidth at one point and the MSE it attains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseOptimum {
    /// `A(x) = (3 f(x) x^{-3/2} / (√π P(x)))^{2/7}`
    pub a_coef: f64,
    /// `A(x) n^{-2/7}`
    pub b_opt: f64,
    /// `(A² P/16 + f x^{-3/2} A^{-3/2}/(4√π)) n^{-4/7}`
    pub mse_opt: f64,
}

/// Minimizer of the two-term MSE `(b²/16)P(x) + f(x) x^{-3/2} b^{-3/2}/(4√π n)`.
pub fn pointwise_optimal(f: &dyn ReferenceDensity, x: f64, n: u64) -> Result<PointwiseOptimum> {
    check_positive("x", x)?;
    check_n(n)?;
    let p = curvature_P(f, x)?;
    if p == 0.0 {
        return Err(Error::Degenerate(format!("P(x) vanishes at x = {x}")));
    }
    let fx = f.pdf(x);
    let x32 = x.powf(-1.5);
    let a = (3.0 * fx * x32 / (SQRT_PI * p)).powf(2.0 / 7.0);
    let n = n as f64;
    let rate = n.powf(-4.0 / 7.0);
    Ok(PointwiseOptimum {
        a_coef: a,
        b_opt: a * n.powf(-2.0 / 7.0),
        mse_opt: (a * a * p / 16.0 + fx * x32 * a.powf(-1.5) / (4.0 * SQRT_PI)) * rate,
    })
}

/// The integrals entering the MISE of the derivative estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryIntegrals {
    /// `∫₀^∞ (f/(3x²) + f'')² dx`
    pub curvature: f64,
    /// `∫₀^∞ x^{-3/2} f dx`
    pub inv_x32: f64,
    /// `∫₀^∞ x^{-3/2} (f/x - f') dx`
    pub correction: f64,
}

impl TheoryIntegrals {
    /// Evaluate all three integrals by quadrature. Divergent integrals
    /// (densities that are too heavy at the origin) come back as
    /// [`Error::Integration`].
    pub fn compute(f: &dyn ReferenceDensity) -> Result<Self> {
        let curvature = integrate_semi_infinite(
            |x| {
                let d = f.derivs(x);
                let s = d.f / (3.0 * x * x) + d.d2;
                s * s
            },
            THEORY_REL_TOL,
        )?
        .value;
        let inv_x32 = integrate_semi_infinite(|x| x.powf(-1.5) * f.pdf(x), THEORY_REL_TOL)?.value;
        let correction = integrate_semi_infinite(
            |x| {
                let d = f.derivs(x);
                x.powf(-1.5) * (d.f / x - d.d1)
            },
            THEORY_REL_TOL,
        )?
        .value;
        Ok(Self {
            curvature,
            inv_x32,
            correction,
        })
    }

    /// Leading MISE at bandwidth `b` and sample size `n`.
    pub fn mise(&self, b: f64, n: u64) -> f64 {
        let n = n as f64;
        b * b / 16.0 * self.curvature
            + b.powf(-1.5) / (4.0 * SQRT_PI * n) * (self.inv_x32 + 0.5 * b * self.correction)
    }

    /// The MISE without the `b^{-1/2}` correction term, minimized by
    /// [`TheoryIntegrals::plugin_bandwidth`].
    pub fn mise_two_term(&self, b: f64, n: u64) -> f64 {
        b * b / 16.0 * self.curvature + b.powf(-1.5) / (4.0 * SQRT_PI * n as f64) * self.inv_x32
    }

    pub fn residual(&self, n: u64) -> BandwidthEquation {
        let n = n as f64;
        BandwidthEquation {
            coef_b: self.curvature / 8.0,
            coef_bm52: -3.0 * self.inv_x32 / (8.0 * SQRT_PI * n),
            coef_bm32: self.correction / (16.0 * SQRT_PI * n),
        }
    }

    /// `(3 ∫x^{-3/2}f / √π)^{2/7}`
    pub fn numerator_27(&self) -> f64 {
        (3.0 * self.inv_x32 / SQRT_PI).powf(2.0 / 7.0)
    }

    /// `(∫P)^{2/7}`
    pub fn denominator_27(&self) -> f64 {
        self.curvature.powf(2.0 / 7.0)
    }

    pub fn plugin_bandwidth(&self, n: u64) -> Result<f64> {
        check_n(n)?;
        if !(self.curvature > 0.0) {
            return Err(Error::Degenerate("integrated curvature is zero".into()));
        }
        Ok(self.numerator_27() / self.denominator_27() * (n as f64).powf(-2.0 / 7.0))
    }
}

/// `coef_b·b + coef_bm52·b^{-5/2} + coef_bm32·b^{-3/2}`: the stationarity
/// condition whose root is the refined bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthEquation {
    pub coef_b: f64,
    pub coef_bm52: f64,
    pub coef_bm32: f64,
}

impl BandwidthEquation {
    pub fn eval(&self, b: f64) -> f64 {
        self.coef_b * b + self.coef_bm52 * b.powf(-2.5) + self.coef_bm32 * b.powf(-1.5)
    }
}

/// `(b²/16)∫P + (n⁻¹b^{-3/2}/(4√π)) ∫x^{-3/2}(f + (b/2)(f/x - f'))`
pub fn mise_leading(f: &dyn ReferenceDensity, b: f64, n: u64) -> Result<f64> {
    check_positive("b", b)?;
    check_n(n)?;
    Ok(TheoryIntegrals::compute(f)?.mise(b, n))
}

/// Global plug-in bandwidth minimizing the two leading MISE terms.
pub fn global_bandwidth_plugin(f: &dyn ReferenceDensity, n: u64) -> Result<f64> {
    TheoryIntegrals::compute(f)?.plugin_bandwidth(n)
}

/// Roots of the full bandwidth equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedBandwidth {
    /// The root with the smallest leading MISE.
    pub b_refined: f64,
    pub all_roots: Vec<f64>,
    pub residual: BandwidthEquation,
}

/// Scan [`ROOT_SCAN_RANGE`] on a log grid for sign changes of the bandwidth
/// equation, polish each with Brent's method and keep the lowest-MISE root.
pub fn refined_bandwidth(f: &dyn ReferenceDensity, n: u64) -> Result<RefinedBandwidth> {
    check_n(n)?;
    refined_from_integrals(&TheoryIntegrals::compute(f)?, n)
}

pub(crate) fn refined_from_integrals(ti: &TheoryIntegrals, n: u64) -> Result<RefinedBandwidth> {
    let eq = ti.residual(n);
    let (lo, hi) = ROOT_SCAN_RANGE;
    let step = (hi / lo).ln() / ROOT_SCAN_BRACKETS as f64;
    let nodes: Vec<f64> = (0..=ROOT_SCAN_BRACKETS)
        .map(|i| {
            if i == ROOT_SCAN_BRACKETS {
                hi
            } else {
                lo * (step * i as f64).exp()
            }
        })
        .collect();
    let values: Vec<f64> = nodes.iter().map(|&b| eq.eval(b)).collect();
    let mut roots = Vec::new();
    for i in 0..ROOT_SCAN_BRACKETS {
        let (ga, gb) = (values[i], values[i + 1]);
        if ga == 0.0 {
            roots.push(nodes[i]);
        } else if ga * gb < 0.0 {
            roots.push(find_root(|b| eq.eval(b), nodes[i], nodes[i + 1], 1e-15)?);
        }
    }
    if values[ROOT_SCAN_BRACKETS] == 0.0 {
        roots.push(hi);
    }
    let best = roots
        .iter()
        .copied()
        .min_by(|a, b| ti.mise(*a, n).total_cmp(&ti.mise(*b, n)))
        .ok_or(Error::Bracket {
            lo,
            hi,
            g_lo: values[0],
            g_hi: values[ROOT_SCAN_BRACKETS],
        })?;
    Ok(RefinedBandwidth {
        b_refined: best,
        all_roots: roots,
        residual: eq,
    })
}

/// The integrals behind the density-optimal bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChenIntegrals {
    /// `(1/(2√π)) ∫ x^{-1/2} f dx`
    pub v: f64,
    /// `∫ (x f'')² dx`
    pub beta: f64,
}

impl ChenIntegrals {
    pub fn compute(f: &dyn ReferenceDensity) -> Result<Self> {
        let v = integrate_semi_infinite(|x| x.powf(-0.5) * f.pdf(x), THEORY_REL_TOL)?.value
            / (2.0 * SQRT_PI);
        let beta = integrate_semi_infinite(
            |x| {
                let s = x * f.d2(x);
                s * s
            },
            THEORY_REL_TOL,
        )?
        .value;
        Ok(Self { v, beta })
    }

    pub fn bandwidth(&self, n: u64) -> Result<f64> {
        check_n(n)?;
        if !(self.beta > 0.0) {
            return Err(Error::Degenerate("beta integral is zero".into()));
        }
        Ok((self.v / self.beta).powf(0.4) * (n as f64).powf(-0.4))
    }
}

/// Density-optimal bandwidth `(V/β)^{2/5} n^{-2/5}`.
pub fn chen_bandwidth(f: &dyn ReferenceDensity, n: u64) -> Result<f64> {
    ChenIntegrals::compute(f)?.bandwidth(n)
}

/// Intermediate factors behind a [`BandwidthReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthConstants {
    pub numerator_27: f64,
    pub denominator_27: f64,
    pub n_pow: f64,
    pub coef_b: f64,
    pub coef_bm52: f64,
    pub coef_bm32: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub beta: f64,
}

/// The three bandwidths for one reference density and sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthReport {
    pub n: u64,
    pub b_plugin: f64,
    pub b_refined: f64,
    pub b_chen: f64,
    pub constants: BandwidthConstants,
}

impl BandwidthReport {
    pub fn compute(f: &dyn ReferenceDensity, n: u64) -> Result<Self> {
        check_n(n)?;
        let ti = TheoryIntegrals::compute(f)?;
        let chen = ChenIntegrals::compute(f)?;
        let refined = refined_from_integrals(&ti, n)?;
        let constants = BandwidthConstants {
            numerator_27: ti.numerator_27(),
            denominator_27: ti.denominator_27(),
            n_pow: (n as f64).powf(-2.0 / 7.0),
            coef_b: refined.residual.coef_b,
            coef_bm52: refined.residual.coef_bm52,
            coef_bm32: refined.residual.coef_bm32,
            v: chen.v,
            beta: chen.beta,
        };
        Ok(Self {
            n,
            b_plugin: ti.plugin_bandwidth(n)?,
            b_refined: refined.b_refined,
            b_chen: chen.bandwidth(n)?,
            constants,
        })
    }

    /// Copy with every float rounded to 12 significant digits.
    pub fn rounded(&self) -> Self {
        let c = &self.constants;
        Self {
            n: self.n,
            b_plugin: round_sig(self.b_plugin),
            b_refined: round_sig(self.b_refined),
            b_chen: round_sig(self.b_chen),
            constants: BandwidthConstants {
                numerator_27: round_sig(c.numerator_27),
                denominator_27: round_sig(c.denominator_27),
                n_pow: round_sig(c.n_pow),
                coef_b: round_sig(c.coef_b),
                coef_bm52: round_sig(c.coef_bm52),
                coef_bm32: round_sig(c.coef_bm32),
                v: round_sig(c.v),
                beta: round_sig(c.beta),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rounded()).expect("plain data serializes")
    }
}
