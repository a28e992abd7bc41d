use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gammakde::harness::{
    convergence_study, lemma_verification, run_experiment, with_jobs, ExperimentConfig,
    ExperimentReport, GridSpec, LemmaConfig,
};
use gammakde::{BandwidthReport, Distribution, Error};

const DEFAULT_OUT: &str = "gammakde-out";
const DEFAULT_SEED: u64 = 20_240_601;

/// Gamma-kernel density-derivative experiments.
#[derive(Debug, Parser)]
#[command(name = "gammakde", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true, env = "GAMMAKDE_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the Maxwell experiment and write curves plus an ISE summary.
    Reproduce {
        /// Sample sizes to run when no config is given.
        #[arg(long = "n", default_values_t = [200usize, 2000])]
        n: Vec<usize>,
        /// Replications per sample size when no config is given.
        #[arg(long, default_value_t = 200)]
        replications: usize,
    },
    /// Print the plug-in, refined and density-optimal bandwidths.
    Bandwidths {
        #[arg(long = "n")]
        n: Option<usize>,
    },
    /// Fit the MISE convergence rate of the plug-in estimate.
    Converge,
    /// Monte Carlo check of the leading bias and variance formulas.
    VerifyLemmas,
}

struct Context {
    config: Option<ExperimentConfig>,
    seed: Option<u64>,
    out: PathBuf,
    jobs: Option<usize>,
}

impl Context {
    fn new(common: Common) -> Result<Self, Error> {
        let config = match &common.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                Some(ExperimentConfig::from_json(&text)?)
            }
            None => None,
        };
        let out = common
            .out
            .or_else(|| config.as_ref().and_then(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok(Self {
            config,
            seed: common.seed,
            out,
            jobs: common.jobs,
        })
    }

    fn seed(&self) -> u64 {
        self.seed
            .or(self.config.as_ref().map(|c| c.seed))
            .unwrap_or(DEFAULT_SEED)
    }

    fn distribution(&self) -> Distribution {
        self.config
            .as_ref()
            .map(|c| c.distribution)
            .unwrap_or(Distribution::Maxwell { sigma: 1.0 })
    }

    fn grid(&self) -> GridSpec {
        self.config.as_ref().map(|c| c.grid).unwrap_or_default()
    }
}

enum Outcome {
    Done,
    Partial,
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn print_experiment(r: &ExperimentReport, dir: &Path) {
    println!(
        "{} n={} replications={} -> {}",
        r.distribution,
        r.n,
        r.replications,
        dir.display()
    );
    println!(
        "  {:<14} {:>12} {:>12} {:>12} {:>12}",
        "mode", "bandwidth", "mean ISE", "median ISE", "sd ISE"
    );
    for s in &r.summary {
        let sd = s
            .std
            .map(|v| format!("{v:.6}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "  {:<14} {:>12.6} {:>12.6} {:>12.6} {:>12}",
            s.mode.label(),
            s.bandwidth,
            s.mean,
            s.median,
            sd
        );
    }
    for f in &r.failures {
        println!("  {:<14} FAILED: {}", f.mode.label(), f.error);
    }
    for p in &r.published {
        println!(
            "  published ({}): plugin {} refined {} chen {}",
            p.source, p.b_plugin, p.b_refined, p.b_chen
        );
    }
}

fn reproduce(ctx: &Context, n_list: &[usize], replications: usize) -> Result<Outcome, Error> {
    let configs: Vec<(ExperimentConfig, PathBuf)> = match &ctx.config {
        Some(c) => {
            let mut c = c.clone();
            c.seed = ctx.seed();
            vec![(c, ctx.out.clone())]
        }
        None => n_list
            .iter()
            .map(|&n| {
                let c = ExperimentConfig::maxwell(n, ctx.seed(), replications);
                (c, ctx.out.join(format!("n{n}")))
            })
            .collect(),
    };
    let mut outcome = Outcome::Done;
    for (cfg, dir) in configs {
        let report = with_jobs(ctx.jobs, || run_experiment(&cfg))?;
        report.write_to(&dir)?;
        print_experiment(&report, &dir);
        if report.selected.is_empty() {
            let first = &report.failures[0];
            return Err(Error::Degenerate(format!(
                "every bandwidth mode failed; {}: {}",
                first.mode.label(),
                first.error
            )));
        }
        if !report.failures.is_empty() {
            outcome = Outcome::Partial;
        }
    }
    Ok(outcome)
}

fn bandwidths(ctx: &Context, n: Option<usize>) -> Result<Outcome, Error> {
    let n = n.or(ctx.config.as_ref().map(|c| c.n)).unwrap_or(2000);
    let dist = ctx.distribution();
    let report = with_jobs(ctx.jobs, || BandwidthReport::compute(&dist, n as u64))?;
    let json = report.to_json();
    write(&ctx.out.join("bandwidths.json"), &(json.clone() + "\n"))?;
    println!("{json}");
    Ok(Outcome::Done)
}

fn converge(ctx: &Context) -> Result<Outcome, Error> {
    let cc = ctx
        .config
        .as_ref()
        .and_then(|c| c.convergence.clone())
        .unwrap_or_default();
    let dist = ctx.distribution();
    let grid = ctx.grid();
    let seed = ctx.seed();
    let report = with_jobs(ctx.jobs, || {
        convergence_study(&dist, &cc.n_list, cc.replications, seed, &grid)
    })?;
    write(
        &ctx.out.join("convergence.json"),
        &(report.to_json() + "\n"),
    )?;
    println!(
        "{} replications={}",
        report.distribution, report.replications
    );
    for p in &report.points {
        println!("  n={:<6} b={:.6} MISE={:.6e}", p.n, p.bandwidth, p.mise);
    }
    println!(
        "  slope of ln MISE on ln n: {:.4} (reference -4/7 = {:.4})",
        report.slope,
        -4.0 / 7.0
    );
    Ok(Outcome::Done)
}

fn verify_lemmas(ctx: &Context) -> Result<Outcome, Error> {
    let runs = match ctx.config.as_ref().and_then(|c| c.lemmas.clone()) {
        Some(l) => vec![l],
        None => vec![
            LemmaConfig::default(),
            LemmaConfig {
                x_list: vec![1.0],
                b: 0.04,
                n: 1000,
                replications: 500,
            },
        ],
    };
    let dist = ctx.distribution();
    let seed = ctx.seed();
    for (k, l) in runs.iter().enumerate() {
        let report = with_jobs(ctx.jobs, || {
            lemma_verification(&dist, &l.x_list, l.b, l.n, l.replications, seed)
        })?;
        write(
            &ctx.out.join(format!("lemmas_{k}.json")),
            &(report.to_json() + "\n"),
        )?;
        let table = report.table();
        write(&ctx.out.join(format!("lemmas_{k}.csv")), &table)?;
        println!(
            "{} b={} n={} replications={}{}",
            report.distribution,
            report.b,
            report.n,
            report.replications,
            if report.variance_defined {
                ""
            } else {
                " (variance undefined)"
            }
        );
        print!("{table}");
    }
    Ok(Outcome::Done)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Integration { .. } | Error::Bracket { .. } | Error::Degenerate(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Context::new(cli.common).and_then(|ctx| match cli.command {
        Command::Reproduce { n, replications } => reproduce(&ctx, &n, replications),
        Command::Bandwidths { n } => bandwidths(&ctx, n),
        Command::Converge => converge(&ctx),
        Command::VerifyLemmas => verify_lemmas(&ctx),
    });
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => {
            eprintln!("gammakde: some bandwidth modes failed; partial results written");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("gammakde: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
