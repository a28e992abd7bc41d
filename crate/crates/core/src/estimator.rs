//! Sample-average gamma-kernel estimators of a density and of its derivative.
//!
//! The derivative estimate is the exact x-derivative of the density estimate,
//! so both are computed from the same kernel exponential. The kernel is not
//! translation invariant (its shape depends on `x`), so binning or FFT
//! convolution does not apply: a grid evaluation costs `O(n · |grid|)` kernel
//! evaluations and one digamma per grid point.

use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig;
use crate::kernel::{shape_params, KernelPoint};

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub seed: u64,
    pub stream: u64,
    pub source: String,
}

/// A nonempty collection of finite, nonnegative observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    meta: Option<SampleMeta>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!(
                "observations must be finite and >= 0, got {bad}"
            )));
        }
        Ok(Self { values, meta: None })
    }

    pub fn with_meta(values: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        let mut s = Self::new(values)?;
        s.meta = Some(meta);
        Ok(s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> Option<&SampleMeta> {
        self.meta.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One value per line behind a `# dist=<label> n=<n> seed=<seed>` header.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        let (label, seed) = match &self.meta {
            Some(m) => (m.source.as_str(), m.seed.to_string()),
            None => ("unknown", "none".to_string()),
        };
        writeln!(w, "# dist={label} n={} seed={seed}", self.values.len())?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    /// Inverse of [`Sample::write_text`]; `#` lines are skipped.
    pub fn read_text(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| Error::Parameter(format!("line {}: not a number: {line:?}", i + 1)))?;
            values.push(v);
        }
        Self::new(values)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::read_text(&std::fs::read_to_string(path)?)
    }
}

/// Density and derivative estimates tabulated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEvaluation {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub derivative: Vec<f64>,
    pub bandwidth: f64,
}

impl GridEvaluation {
    /// CSV with header `x,density,derivative`, 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,density,derivative")?;
        for ((x, f), d) in self.grid.iter().zip(&self.density).zip(&self.derivative) {
            writeln!(w, "{},{},{}", sig(*x), sig(*f), sig(*d))?;
        }
        Ok(())
    }
}

/// Kernel evaluation point plus the sum over observations, in sample order.
fn sums_at(ln_values: &[(f64, f64)], b: f64, x: f64) -> Result<(f64, f64)> {
    let kp = KernelPoint::new(&shape_params(x, b)?);
    let mut dens = 0.0;
    let mut deriv = 0.0;
    for &(t, ln_t) in ln_values {
        let (k, dk) = kp.value_and_derivative(t, ln_t);
        dens += k;
        deriv += dk;
    }
    let n = ln_values.len() as f64;
    Ok((dens / n, deriv / n))
}

fn with_logs(sample: &Sample) -> Vec<(f64, f64)> {
    sample.values.iter().map(|&t| (t, t.ln())).collect()
}

/// `f̂(x) = n⁻¹ Σ K_{ρ_b(x), b}(X_i)`
pub fn density_at(sample: &Sample, b: f64, x: f64) -> Result<f64> {
    let kp = KernelPoint::new(&shape_params(x, b)?);
    let sum: f64 = sample.values.iter().map(|&t| kp.value(t, t.ln())).sum();
    Ok(sum / sample.len() as f64)
}

/// `f̂'(x) = n⁻¹ Σ ∂K_{ρ_b(x), b}(X_i)/∂x`
pub fn derivative_at(sample: &Sample, b: f64, x: f64) -> Result<f64> {
    let kp = KernelPoint::new(&shape_params(x, b)?);
    let sum: f64 = sample
        .values
        .iter()
        .map(|&t| kp.x_derivative(t, t.ln()))
        .sum();
    Ok(sum / sample.len() as f64)
}

/// Check that `grid` is nonempty, finite, nonnegative and strictly increasing.
pub fn validate_grid(grid: &[f64]) -> Result<()> {
    let ok = !grid.is_empty()
        && grid.iter().all(|x| x.is_finite() && *x >= 0.0)
        && grid.windows(2).all(|w| w[1] > w[0]);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidGrid)
    }
}

/// Both estimates at every grid point. Points are evaluated in parallel; each
/// point's sum runs over the sample in order, so the output does not depend
/// on scheduling.
pub fn evaluate_on_grid(sample: &Sample, b: f64, grid: &[f64]) -> Result<GridEvaluation> {
    validate_grid(grid)?;
    let logs = with_logs(sample);
    let pairs = grid
        .par_iter()
        .map(|&x| sums_at(&logs, b, x))
        .collect::<Result<Vec<_>>>()?;
    let (density, derivative) = pairs.into_iter().unzip();
    Ok(GridEvaluation {
        grid: grid.to_vec(),
        density,
        derivative,
        bandwidth: b,
    })
}

/// Sequential version of [`evaluate_on_grid`] that only returns the
/// derivative; the harness calls this from already-parallel replications.
pub fn derivative_on_grid(sample: &Sample, b: f64, grid: &[f64]) -> Result<Vec<f64>> {
    validate_grid(grid)?;
    let logs = with_logs(sample);
    grid.iter()
        .map(|&x| sums_at(&logs, b, x).map(|p| p.1))
        .collect()
}
