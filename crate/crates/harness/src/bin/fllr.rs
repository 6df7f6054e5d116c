use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use fllr_core::simgen::generate;
use fllr_harness::config::{BasisChoice, ExperimentConfig, KernelChoice, Method, ResponseTransform};
use fllr_harness::dataset::write_dataset;
use fllr_harness::experiment::{run_dataset, run_simulation, simulation_config, RunResult};
use fllr_harness::export::{export, Format};
use fllr_harness::{selftest, HarnessError};

#[derive(Parser)]
#[command(name = "fllr", version, about = "Ridge-penalized functional local linear regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo study on simulated curves.
    Simulate(SimulateArgs),
    /// Repeated train/test evaluation on a dataset file.
    Fit(FitArgs),
    /// Write one simulated sample as a dataset file.
    Generate(GenerateArgs),
    /// Compare the estimators against dense linear algebra on random problems.
    Selftest {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Default)]
struct Common {
    /// TOML file with any `ExperimentConfig` fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Basis-size candidates, as `LO..HI` or a comma list.
    #[arg(long)]
    grid: Option<String>,
    /// Neighbor-count candidates (comma list); default is a log-spaced grid.
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<usize>>,
    #[arg(long)]
    max_neighbor_frac: Option<f64>,
    /// Bootstrap replicates for the derivative bandwidth.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, value_enum)]
    kernel: Option<KernelChoice>,
    #[arg(long, value_enum)]
    basis: Option<BasisChoice>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output formats, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "csv,json")]
    format: Vec<String>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Mixing levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    /// CI profile: 20 replicates, basis sizes up to 8.
    #[arg(long)]
    fast: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    grid_header: PathBuf,
    /// Training fraction of each random split.
    #[arg(long)]
    split: Option<f64>,
    #[arg(long, value_enum)]
    response_transform: Option<ResponseTransform>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    a: f64,
    #[arg(long, default_value_t = 20240601)]
    seed: u64,
    /// Replicate index whose sample is written.
    #[arg(long, default_value_t = 0)]
    replicate: usize,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    grid_header: PathBuf,
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<usize>> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().context("grid lower end")?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().context("grid upper end")?;
        if lo == 0 || hi < lo {
            bail!("grid range {s} is empty or starts at 0");
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|p| p.trim().parse().context("grid entry")).collect()
}

fn formats(names: &[String]) -> anyhow::Result<Vec<Format>> {
    names
        .iter()
        .map(|n| match n.as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => bail!("unknown format {other}"),
        })
        .collect()
}

/// Defaults, then the config file, then flags.
fn build_config(base: ExperimentConfig, common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let mut merged = match toml::Value::try_from(&base)? {
                toml::Value::Table(t) => t,
                _ => unreachable!("config serializes to a table"),
            };
            merged.extend(file);
            toml::Value::Table(merged)
                .try_into::<ExperimentConfig>()
                .with_context(|| format!("in {}", path.display()))?
        }
        None => base,
    };
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.replicates {
        cfg.replicates = v;
    }
    if let Some(v) = &common.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = &common.methods {
        cfg.methods = v.clone();
    }
    if let Some(v) = &common.grid {
        cfg.j_candidates = parse_grid(v)?;
    }
    if let Some(v) = &common.k_grid {
        cfg.k_candidates = Some(v.clone());
    }
    if let Some(v) = common.max_neighbor_frac {
        cfg.max_neighbor_frac = v;
    }
    if let Some(v) = common.bootstrap {
        cfg.bootstrap = v;
    }
    if let Some(v) = common.kernel {
        cfg.kernel = v;
    }
    if let Some(v) = common.basis {
        cfg.basis = v;
    }
    if let Some(v) = common.threads {
        cfg.threads = Some(v);
    }
    Ok(cfg)
}

fn finish(result: Result<RunResult, HarnessError>, cfg: &ExperimentConfig, formats: &[Format]) -> anyhow::Result<ExitCode> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("fllr-out"));
    let (result, failed) = match result {
        Ok(r) => (r, None),
        Err(HarnessError::TooManyFailures { failed, total, result }) => (*result, Some((failed, total))),
        Err(e) => return Err(e.into()),
    };
    for path in export(&result, &out, formats)? {
        log::info!("wrote {}", path.display());
    }
    for s in &result.summary {
        println!(
            "{:>8} {:>6}  ok {:>3}  failed {:>2}  mean ER {}  median ER {}  median k {}",
            s.level,
            s.method.name(),
            s.n_ok,
            s.n_failed,
            s.mean_er.map_or("-".into(), |v| format!("{v:.4}")),
            s.median_er.map_or("-".into(), |v| format!("{v:.4}")),
            s.median_k.map_or("-".into(), |v| format!("{v:.1}")),
        );
    }
    match failed {
        Some((failed, total)) => {
            eprintln!("error: {failed} of {total} replicates failed (more than 10%)");
            Ok(ExitCode::from(2))
        }
        None => Ok(ExitCode::SUCCESS),
    }
}

fn init_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate(args) => {
            let base = if args.fast { ExperimentConfig::fast() } else { ExperimentConfig::default() };
            let mut cfg = build_config(base, &args.common)?;
            if let Some(a) = args.a {
                cfg.a_levels = a;
            }
            cfg.validate()?;
            init_threads(cfg.threads)?;
            let formats = formats(&args.common.format)?;
            finish(run_simulation(&cfg), &cfg, &formats)
        }
        Command::Fit(args) => {
            let mut cfg = build_config(ExperimentConfig::default(), &args.common)?;
            if let Some(s) = args.split {
                cfg.split_ratio = s;
            }
            if let Some(t) = args.response_transform {
                cfg.response_transform = t;
            }
            cfg.validate()?;
            init_threads(cfg.threads)?;
            let formats = formats(&args.common.format)?;
            finish(run_dataset(&cfg, &args.data, &args.grid_header), &cfg, &formats)
        }
        Command::Generate(args) => {
            let cfg = ExperimentConfig {
                seed: args.seed,
                ..Default::default()
            };
            let sample = generate::<f64>(&simulation_config(&cfg, args.a, args.replicate))?;
            let split: Vec<bool> = (0..sample.config.n()).map(|i| i < sample.config.n_train).collect();
            write_dataset(&args.data, &args.grid_header, &sample.curves_observed, Some(&split))?;
            println!("wrote {} and {}", display(&args.data), display(&args.grid_header));
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest { instances, seed } => {
            let mut ok = true;
            for c in selftest::run(instances, seed) {
                println!(
                    "{} {} ({} instances, worst {:.3e}, tolerance {:.0e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.instances,
                    c.worst,
                    c.tolerance
                );
                ok &= c.passed;
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
