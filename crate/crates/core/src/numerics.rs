//! Quadrature, bracketed root finding, scalar minimization and finite differences.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Hard cap on integrand evaluations for a single integral.
pub const EVALUATION_BUDGET: usize = 1_000_000;

/// Outcome of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

// 21-point Gauss-Kronrod rule; odd-indexed nodes are the embedded 10-point Gauss rule.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    // Largest error first; ties broken on position so the heap order is total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> std::result::Result<Segment, f64> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = g(center);
    if !fc.is_finite() {
        return Err(center);
    }
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = fc.abs() * WGK[10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (g(x1), g(x2));
        if !f1.is_finite() {
            return Err(x1);
        }
        if !f2.is_finite() {
            return Err(x2);
        }
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
        abs_value: abs_sum * half.abs(),
    })
}

/// Globally adaptive 21-point Gauss-Kronrod quadrature over the consecutive
/// panels `breaks[0]..breaks[1]..`.
///
/// Converges when the summed error estimate drops below `rel_tol` times the
/// integral of `|g|`, which also handles integrals that cancel to zero.
fn adaptive<F: Fn(f64) -> f64>(g: F, breaks: &[f64], rel_tol: f64) -> Result<QuadratureResult> {
    const EVALS_PER_SEGMENT: usize = 21;
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let fail = |reason: String, heap: &BinaryHeap<Segment>, evaluations: usize| {
        let partial = heap.iter().map(|s| s.value).sum();
        let abs_error = heap.iter().map(|s| s.error).sum();
        Error::Integration {
            reason,
            partial,
            abs_error,
            evaluations,
        }
    };

    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        evaluations += EVALS_PER_SEGMENT;
        match gauss_kronrod(&g, w[0], w[1]) {
            Ok(s) => heap.push(s),
            Err(x) => {
                return Err(fail(
                    format!("integrand not finite at x = {x}"),
                    &heap,
                    evaluations,
                ))
            }
        }
    }
    if heap.is_empty() {
        return Err(Error::Domain("empty integration range".into()));
    }

    let mut error: f64 = heap.iter().map(|s| s.error).sum();
    let mut abs_value: f64 = heap.iter().map(|s| s.abs_value).sum();
    loop {
        let roundoff_floor = 100.0 * f64::EPSILON * abs_value;
        if error <= rel_tol * abs_value || error <= roundoff_floor {
            // re-add from scratch so the running totals' drift never leaks out
            let value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum::<f64>();
            abs_value = heap.iter().map(|s| s.abs_value).sum::<f64>();
            if error <= rel_tol * abs_value || error <= 100.0 * f64::EPSILON * abs_value {
                return Ok(QuadratureResult {
                    value,
                    abs_error_estimate: error,
                    evaluations,
                });
            }
        }
        if evaluations + 2 * EVALS_PER_SEGMENT > EVALUATION_BUDGET {
            return Err(fail(
                "evaluation budget exhausted".into(),
                &heap,
                evaluations,
            ));
        }
        let worst = heap.pop().expect("heap is nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            return Err(fail(
                format!("interval around {} cannot be subdivided further", worst.a),
                &heap,
                evaluations,
            ));
        }
        evaluations += 2 * EVALS_PER_SEGMENT;
        error -= worst.error;
        abs_value -= worst.abs_value;
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            match gauss_kronrod(&g, a, b) {
                Ok(s) => {
                    error += s.error;
                    abs_value += s.abs_value;
                    heap.push(s);
                }
                Err(x) => {
                    return Err(fail(
                        format!("integrand not finite at x = {x}"),
                        &heap,
                        evaluations,
                    ))
                }
            }
        }
        error = error.max(0.0);
    }
}

fn check_rel_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 1e-13 && rel_tol < 1e-2 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "rel_tol must lie in (1e-13, 1e-2), got {rel_tol}"
        )))
    }
}

/// Integrate `g` over a finite interval `[a, b]`.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<QuadratureResult> {
    check_rel_tol(rel_tol)?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Domain(format!("need finite a < b, got [{a}, {b}]")));
    }
    adaptive(g, &[a, b], rel_tol)
}

/// Integrate `g` over `(0, ∞)`.
///
/// `(0, 1]` is integrated directly, `[1, ∞)` through `x = 1/u`, both in one
/// adaptive pass. Endpoint singularities of the form `x^α` with `α > -1`
/// are tolerated since no node sits on `x = 0`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(g: F, rel_tol: f64) -> Result<QuadratureResult> {
    integrate_semi_infinite_with_points(g, &[], rel_tol)
}

/// Like [`integrate_semi_infinite`], with extra panel boundaries at `points`.
///
/// Supply the location of narrow features (for instance a sharply peaked
/// kernel) so the initial panels cannot step over them.
pub fn integrate_semi_infinite_with_points<F: Fn(f64) -> f64>(
    g: F,
    points: &[f64],
    rel_tol: f64,
) -> Result<QuadratureResult> {
    check_rel_tol(rel_tol)?;
    // s in (0, 1] -> x = s;  s in [1, 2) -> x = 1 / (2 - s)
    let to_s = |x: f64| if x <= 1.0 { x } else { 2.0 - 1.0 / x };
    let mut breaks = vec![0.0, 1.0, 2.0];
    breaks.extend(
        points
            .iter()
            .filter(|p| p.is_finite() && **p > 0.0)
            .map(|&p| to_s(p)),
    );
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mapped = |s: f64| {
        if s <= 1.0 {
            g(s)
        } else {
            let u = 2.0 - s;
            let v = g(1.0 / u);
            if v == 0.0 {
                0.0
            } else {
                v / (u * u)
            }
        }
    };
    adaptive(mapped, &breaks, rel_tol)
}

/// Result of a bracketed root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: f64,
    /// Final bracket; `g` changes sign (or vanishes) across it.
    pub bracket: (f64, f64),
}

/// Find a root of `g` inside `[lo, hi]` with Brent's method.
///
/// Bisection steps are taken whenever interpolation misbehaves, so the
/// bracket always shrinks; the search stops once it is no wider than `tol`.
pub fn find_root<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    find_root_bracket(g, lo, hi, tol).map(|r| r.value)
}

pub fn find_root_bracket<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, tol: f64) -> Result<Root> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (g(a), g(b));
    if fa == 0.0 {
        return Ok(Root {
            value: a,
            bracket: (a, a),
        });
    }
    if fb == 0.0 {
        return Ok(Root {
            value: b,
            bracket: (b, b),
        });
    }
    if !(fa * fb < 0.0) {
        return Err(Error::Bracket {
            lo,
            hi,
            g_lo: fa,
            g_hi: fb,
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..500 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 0.5 * tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            let bracket = if fb == 0.0 {
                (b, b)
            } else {
                (b.min(c), b.max(c))
            };
            return Ok(Root { value: b, bracket });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = g(b);
    }
    Err(Error::Domain("root search did not terminate".into()))
}

/// Minimize `g` on `[lo, hi]` with Brent's golden-section/parabolic method.
///
/// Returns a local minimizer when `g` is not unimodal. `tol` is an absolute
/// tolerance on the abscissa.
pub fn minimize_scalar<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::Domain(format!("need lo < hi, got [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (lo, hi);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = g(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..1000 {
        let xm = 0.5 * (a + b);
        let tol1 = 1e-12 * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Ok(x);
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = g(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok(x)
}

/// Central difference `(g(x + h) - g(x - h)) / 2h`.
#[inline]
pub fn central_difference<F: Fn(f64) -> f64>(g: F, x: f64, h: f64) -> f64 {
    (g(x + h) - g(x - h)) / (2.0 * h)
}

/// Trapezoid rule over tabulated `(x, y)` pairs; zero for fewer than two points.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}
