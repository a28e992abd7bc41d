//! Acceptance suite. Each test checks one criterion at its stated tolerance
//! and writes a single `criterion N: PASS|FAIL` line to stderr, bypassing the
//! test harness's output capture so the lines always show up.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;

use gammakde::asymptotics::{bias_boundary, boundary_bias_coefficient, mse_leading};
use gammakde::harness::{
    convergence_study, lemma_verification, run_experiment, BandwidthMode, ExperimentConfig,
    GridSpec,
};
use gammakde::kernel::KernelPoint;
use gammakde::numerics::{
    central_difference, integrate_semi_infinite_with_points, minimize_scalar,
};
use gammakde::specfun::digamma_asymptotic;
use gammakde::{
    digamma, kernel_value, kernel_x_derivative, log_gamma, pointwise_optimal, shape_params,
    stirling_ratio, BandwidthReport, Distribution, PositiveReal, ReferenceDensity, TheoryIntegrals,
};

/// Fixed once; the Monte Carlo criteria are not tuned to it.
const SEED: u64 = 20_240_601;

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "criterion {id:>2}: {} {name}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {id} failed: {detail}");
}

fn maxwell() -> Distribution {
    Distribution::maxwell(1.0).unwrap()
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

#[test]
fn criterion_01_bandwidth_constants() {
    let r = BandwidthReport::compute(&maxwell(), 2000).unwrap();
    let c = &r.constants;
    let checks = [
        ("numerator", c.numerator_27, 1.099, 0.005),
        ("denominator", c.denominator_27, 1.247, 0.005),
        ("n^-2/7", c.n_pow, 0.114, 0.001),
        ("b_plugin", r.b_plugin, 0.1004, 0.002),
        ("b coefficient", c.coef_b, 0.270, 0.003),
        ("b_refined", r.b_refined, 0.1013, 0.005),
        ("b_chen", r.b_chen, 0.0175, 0.0005),
    ];
    let pass = checks.iter().all(|&(_, g, w, t)| within(g, w, t));
    let detail = checks
        .iter()
        .map(|(k, g, w, t)| format!("{k}={g:.6} ({w}±{t})"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(1, "bandwidth constants", pass, &detail);
}

#[test]
fn criterion_02_boundary_bias_constant() {
    let coef = boundary_bias_coefficient(2.0);
    // with f'' = 0 only the first-derivative term survives
    struct Linear;
    impl ReferenceDensity for Linear {
        fn label(&self) -> String {
            "linear".into()
        }
        fn derivs(&self, x: f64) -> gammakde::Derivs {
            gammakde::Derivs {
                f: 3.0 * x,
                d1: 3.0,
                d2: 0.0,
            }
        }
    }
    let bias = bias_boundary(&Linear, 0.1, 2.0).unwrap();
    let pass = coef == -1.0 / 12.0 && bias == 3.0 * (-1.0 / 12.0);
    verdict(
        2,
        "boundary bias constant",
        pass,
        &format!("coefficient at kappa=2 is {coef:e}, bias for f'=3 is {bias:e}"),
    );
}

#[test]
fn criterion_03_lemma1_bias() {
    let rep = lemma_verification(&maxwell(), &[1.0], 0.05, 100_000, 200, SEED).unwrap();
    let r = &rep.rows[0];
    let z = r.z_bias.unwrap();
    verdict(
        3,
        "interior bias (Monte Carlo)",
        z.abs() <= 3.0,
        &format!(
            "MC bias {:.5} ± {:.5}, formula {:.5}, z = {:.1}; exact finite-b bias by quadrature {:.5}",
            r.mc_bias,
            r.mc_bias_se.unwrap(),
            r.theory_bias,
            z,
            r.quadrature_bias
        ),
    );
}

#[test]
fn criterion_04_lemma2_variance() {
    let rep = lemma_verification(&maxwell(), &[1.0], 0.04, 1000, 500, SEED).unwrap();
    let r = &rep.rows[0];
    let ratio = r.variance_ratio.unwrap();
    verdict(
        4,
        "interior variance (Monte Carlo)",
        (ratio - 1.0).abs() <= 0.15,
        &format!(
            "MC variance {:.4e}, formula {:.4e}, ratio {:.3}",
            r.mc_variance.unwrap(),
            r.theory_variance,
            ratio
        ),
    );
}

#[test]
fn criterion_05_convergence_rate() {
    let rep = convergence_study(
        &maxwell(),
        &[500, 1000, 2000, 4000, 8000],
        200,
        SEED,
        &GridSpec::default(),
    )
    .unwrap();
    let target = -4.0 / 7.0;
    let mise = rep
        .points
        .iter()
        .map(|p| format!("{}:{:.4e}", p.n, p.mise))
        .collect::<Vec<_>>()
        .join(" ");
    verdict(
        5,
        "MISE convergence rate",
        within(rep.slope, target, 0.12),
        &format!(
            "slope {:.4}, band [{:.4}, {:.4}]; MISE {mise}",
            rep.slope,
            target - 0.12,
            target + 0.12
        ),
    );
}

#[test]
fn criterion_06_kernel_invariants() {
    let xs = [0.05, 0.3, 1.0, 2.5, 6.0];
    let bs = [0.01, 0.03, 0.1, 0.3, 1.0];
    let mut worst = [0.0f64; 4];
    for &x in &xs {
        for &b in &bs {
            let shape = shape_params(x, b).unwrap();
            let kp = KernelPoint::new(&shape);
            let mean = shape.rho * b;
            let sd = shape.rho.sqrt() * b;
            let pts: Vec<f64> = [-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 8.0]
                .iter()
                .map(|k| mean + k * sd)
                .collect();
            let mass =
                integrate_semi_infinite_with_points(|t| kp.value(t, t.ln()), &pts, 1e-12).unwrap();
            worst[0] = worst[0].max((mass.value - 1.0).abs());
            let dmass =
                integrate_semi_infinite_with_points(|t| kp.x_derivative(t, t.ln()), &pts, 1e-12)
                    .unwrap();
            worst[1] = worst[1].max(dmass.value.abs());

            let h = 1e-6 * x.max(b);
            if (x - 2.0 * b).abs() > 10.0 * h {
                for t in [0.5 * mean, 2.0 * mean] {
                    let fd = central_difference(
                        |xx| kernel_value(&shape_params(xx, b).unwrap(), t).unwrap(),
                        x,
                        h,
                    );
                    let exact = kernel_x_derivative(x, b, t).unwrap();
                    worst[2] = worst[2].max((fd - exact).abs() / exact.abs());
                }
            }

            let lo = 2.0 * b * (1.0 - 1e-8);
            let hi = 2.0 * b * (1.0 + 1e-8);
            let t = x;
            let (kl, kh) = (
                kernel_value(&shape_params(lo, b).unwrap(), t).unwrap(),
                kernel_value(&shape_params(hi, b).unwrap(), t).unwrap(),
            );
            let (dl, dh) = (
                kernel_x_derivative(lo, b, t).unwrap(),
                kernel_x_derivative(hi, b, t).unwrap(),
            );
            let rel = |a: f64, c: f64| {
                let s = a.abs().max(c.abs());
                if s == 0.0 {
                    0.0
                } else {
                    (a - c).abs() / s
                }
            };
            worst[3] = worst[3].max(rel(kl, kh)).max(rel(dl, dh));
        }
    }
    let pass = worst[0] <= 1e-8 && worst[1] <= 1e-6 && worst[2] <= 1e-5 && worst[3] <= 1e-6;
    verdict(
        6,
        "kernel invariants on 5x5 grid",
        pass,
        &format!(
            "max |∫K-1| {:.1e}, max |∫K'| {:.1e}, max FD rel err {:.1e}, max branch jump {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    );
}

#[test]
fn criterion_07_oracle_equivalence() {
    let d = maxwell();
    let n = 2000;
    let ti = TheoryIntegrals::compute(&d).unwrap();
    let b_plugin = ti.plugin_bandwidth(n).unwrap();
    let b_num = minimize_scalar(|b| ti.mise_two_term(b, n), 1e-3, 1.0, 1e-10).unwrap();
    let global_rel = (b_plugin - b_num).abs() / b_num;

    let opt = pointwise_optimal(&d, 1.0, n).unwrap();
    let p = d.pdf(1.0);
    let curv = gammakde::curvature_P(&d, 1.0).unwrap();
    let two_term = |b: f64| {
        b * b / 16.0 * curv + p * b.powf(-1.5) / (4.0 * std::f64::consts::PI.sqrt() * n as f64)
    };
    let b_pt = minimize_scalar(two_term, 1e-3, 1.0, 1e-12).unwrap();
    let pt_rel = (opt.b_opt - b_pt).abs() / b_pt;
    let mse_rel = (opt.mse_opt - two_term(b_pt)).abs() / two_term(b_pt);
    // the four-term MSE is a different objective; only report it
    let full = mse_leading(&d, 1.0, opt.b_opt, n).unwrap();
    verdict(
        7,
        "oracle equivalence",
        global_rel <= 0.02 && pt_rel <= 1e-6 && mse_rel <= 1e-6,
        &format!(
            "b_plugin {b_plugin:.6} vs numeric {b_num:.6} (rel {global_rel:.1e}); \
             b_opt {:.8} vs numeric {b_pt:.8} (rel {pt_rel:.1e}); mse_opt rel {mse_rel:.1e}; \
             full MSE at b_opt {full:.4e}",
            opt.b_opt
        ),
    );
}

#[test]
fn criterion_08_special_functions() {
    let grid: Vec<f64> = (0..400)
        .map(|i| (1e-3f64.ln() + (1e6f64.ln() - 1e-3f64.ln()) * i as f64 / 399.0).exp())
        .collect();
    let pr = |z: f64| PositiveReal::new(z).unwrap();
    let mut worst_lg = 0.0f64;
    let mut worst_psi = 0.0f64;
    for &z in &grid {
        let lhs = log_gamma(pr(z + 1.0));
        let err = (lhs - log_gamma(pr(z)) - z.ln()).abs() / lhs.abs().max(1.0);
        worst_lg = worst_lg.max(err);
        worst_psi = worst_psi.max((digamma(pr(z + 1.0)) - digamma(pr(z)) - 1.0 / z).abs());
    }
    let euler = 0.577_215_664_901_532_9;
    let closed = [
        (log_gamma(pr(1.0)), 0.0),
        (log_gamma(pr(0.5)), 0.5 * std::f64::consts::PI.ln()),
        (log_gamma(pr(5.0)), 24f64.ln()),
        (digamma(pr(1.0)), -euler),
        (digamma(pr(0.5)), -euler - 2.0 * std::f64::consts::LN_2),
        (digamma(pr(4.0)), 1.0 + 0.5 + 1.0 / 3.0 - euler),
        (digamma(pr(1e3)), digamma_asymptotic(pr(1e3))),
    ];
    let worst_closed = closed
        .iter()
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let rs: Vec<f64> = grid.iter().map(|&z| stirling_ratio(z).unwrap()).collect();
    let monotone = rs.windows(2).all(|w| w[1] >= w[0]);
    let bounded = rs.iter().all(|&r| r < 1.0);
    let limit = 1.0 - stirling_ratio(1e6).unwrap();
    let pass = worst_lg <= 1e-10
        && worst_psi <= 1e-10
        && worst_closed <= 1e-10
        && monotone
        && bounded
        && limit < 1e-6
        && stirling_ratio(0.0).unwrap() == 0.0;
    verdict(
        8,
        "special functions",
        pass,
        &format!(
            "lnΓ recurrence {worst_lg:.1e}, Ψ recurrence {worst_psi:.1e}, closed forms {worst_closed:.1e}, \
             R monotone={monotone} <1={bounded}, 1-R(1e6)={limit:.1e}"
        ),
    );
}

#[test]
fn criterion_09_table_directional() {
    let cfg = ExperimentConfig::maxwell(2000, SEED, 200);
    let rep = run_experiment(&cfg).unwrap();
    let get = |m| rep.summary_for(m).unwrap();
    let (p, r, c) = (
        get(BandwidthMode::Plugin),
        get(BandwidthMode::Refined),
        get(BandwidthMode::Chen),
    );
    let band = |v: f64| (0.01..=0.10).contains(&v);
    let pass = r.median < c.median && band(p.mean) && band(r.mean);
    verdict(
        9,
        "ISE ordering and band",
        pass,
        &format!(
            "median ISE refined {:.4} vs chen {:.4}; mean ISE plugin {:.4}, refined {:.4} (band [0.01, 0.10]); \
             exact single-run published values are not reproducible (unreported seed)",
            r.median, c.median, p.mean, r.mean
        ),
    );
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn criterion_10_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("config.json");
    fs::write(
        &cfg,
        r#"{"distribution": {"kind": "maxwell", "sigma": 1.0}, "n": 2000, "seed": 11,
            "replications": 16, "grid": {"min": 0.02, "max": 4.0, "points": 400},
            "bandwidth_modes": ["plugin", "refined", "chen", {"fixed": 0.08}]}"#,
    )
    .unwrap();
    let run = |jobs: &str, out: &Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_gammakde"))
            .args(["--config", cfg.to_str().unwrap(), "--jobs", jobs, "--out"])
            .arg(out)
            .arg("reproduce")
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        read_tree(out)
    };
    let a = run("1", &tmp.path().join("a"));
    let b = run("8", &tmp.path().join("b"));
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    verdict(
        10,
        "determinism across thread counts",
        a == b && names.contains(&"report.json"),
        &format!(
            "{} files compared byte for byte: {}",
            a.len(),
            names.join(", ")
        ),
    );
}
