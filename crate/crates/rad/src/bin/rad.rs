//! Command-line front end: run one experiment, sweep noise levels, or
//! generate a synthetic dataset.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 on runtime
//! failures.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rad::datastream::make_synthetic;
use rad::harness::config::{ExperimentConfig, RunKind};
use rad::harness::output::{emit_outputs, summarize};
use rad::harness::plot::{render_metric_svg, Series};
use rad::harness::runner::run_experiment;
use rad::{RadError, Result};

#[derive(Parser)]
#[command(
    name = "rad",
    version,
    about = "Online learning from noisy label streams: selection schemes, baselines, and metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scheme and baselines over one noise level.
    Run(RunArgs),
    /// Run the config across a grid of noise levels and tabulate finals.
    Sweep(SweepArgs),
    /// Generate a synthetic Gaussian-cluster dataset as CSV.
    GenData(GenDataArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Replace the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's selection scheme.
    #[arg(long)]
    scheme: Option<RunKind>,
    /// Override the config's label-noise level.
    #[arg(long)]
    noise: Option<f64>,
    /// Output directory (defaults to the config's `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG curves per metric.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Path to the experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated noise levels to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = default_levels())]
    levels: Vec<f64>,
    /// Output directory (defaults to the config's `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-level metric curves and final-vs-noise curves.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct GenDataArgs {
    /// Number of classes.
    #[arg(long, default_value_t = 4)]
    k_classes: usize,
    /// Number of feature dimensions.
    #[arg(long, default_value_t = 27)]
    features: usize,
    /// Number of instances.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Cluster standard deviation; smaller is more separable.
    #[arg(long, default_value_t = 0.5)]
    spread: f64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn default_levels() -> Vec<f64> {
    (0..=9).map(|i| i as f64 / 10.0).collect()
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::GenData(args) => cmd_gen_data(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (RadError::InvalidConfig(_) | RadError::UnsupportedVersion { .. })) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(
    path: &PathBuf,
    seed: Option<u64>,
    scheme: Option<RunKind>,
    noise: Option<f64>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_json_file(path)?;
    if let Some(seed) = seed {
        config.seeds = vec![seed];
    }
    if let Some(scheme) = scheme {
        config.scheme = scheme;
    }
    if let Some(noise) = noise {
        config.noise_level = noise;
    }
    if let Some(out) = out {
        config.output_dir = out;
    }
    config.validate()?;
    Ok(config)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let config = load_config(&args.config, args.seed, args.scheme, args.noise, args.out)?;
    let results = run_experiment(&config)?;
    let written = emit_outputs(&results, &config.output_dir, args.plot)?;
    println!("wrote {} files to {}", written.len(), config.output_dir.display());
    print!("{}", final_table(&results));
    Ok(())
}

/// Plain-text per-kind final metrics, seeds aggregated.
fn final_table(results: &rad::harness::runner::ExperimentResults) -> String {
    let mut out = String::new();
    for (kind, s) in summarize(results) {
        let _ = write!(out, "{kind:>18}");
        if let Some(acc) = &s.accuracy {
            let _ = write!(out, "  accuracy {:.4} ± {:.4}", acc.mean, acc.std);
        }
        if let Some(a) = &s.hot_a {
            let _ = write!(out, "  A {:.3}", a.mean);
        }
        if let Some(at) = &s.hot_truth_at {
            let _ = write!(out, "  A^T {:.3}", at.mean);
        }
        if let Some(q) = &s.total_queries {
            if q.mean > 0.0 {
                let _ = write!(out, "  queries {:.0}", q.mean);
            }
        }
        out.push('\n');
    }
    out
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let base = load_config(&args.config, None, None, None, args.out)?;
    if args.levels.is_empty() {
        return Err(RadError::InvalidConfig("sweep needs at least one noise level".into()));
    }
    for &level in &args.levels {
        if !(0.0..=1.0).contains(&level) {
            return Err(RadError::InvalidConfig(format!(
                "noise level {level} is outside [0, 1]"
            )));
        }
    }

    let root = base.output_dir.clone();
    let mut table = String::from(
        "noise_level,kind,accuracy_mean,accuracy_std,f1_macro_mean,hot_a_mean,hot_truth_at_mean,total_queries_mean\n",
    );
    // kind name -> (noise, accuracy mean/lo/hi across seeds)
    let mut curves: Vec<(String, Vec<(f64, Option<(f64, f64, f64)>)>)> = Vec::new();
    for &level in &args.levels {
        let mut config = base.clone();
        config.noise_level = level;
        config.output_dir = root.join(format!("noise_{level}"));
        config.validate()?;
        let results = run_experiment(&config)?;
        emit_outputs(&results, &config.output_dir, args.plot)?;
        for (kind, s) in summarize(&results) {
            let fmt_mean = |m: &Option<rad::harness::output::MeanStd>| {
                m.as_ref().map(|m| m.mean.to_string()).unwrap_or_default()
            };
            let _ = writeln!(
                table,
                "{level},{kind},{},{},{},{},{},{}",
                fmt_mean(&s.accuracy),
                s.accuracy.as_ref().map(|m| m.std.to_string()).unwrap_or_default(),
                fmt_mean(&s.f1_macro),
                fmt_mean(&s.hot_a),
                fmt_mean(&s.hot_truth_at),
                fmt_mean(&s.total_queries),
            );
            let finals: Vec<f64> = results
                .runs
                .iter()
                .filter(|r| r.kind.name() == kind)
                .filter_map(|r| r.records.last())
                .map(|r| r.accuracy)
                .collect();
            let point = if finals.is_empty() {
                None
            } else {
                let mean = finals.iter().sum::<f64>() / finals.len() as f64;
                let lo = finals.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Some((mean, lo, hi))
            };
            match curves.iter_mut().find(|(name, _)| *name == kind) {
                Some((_, points)) => points.push((level, point)),
                None => curves.push((kind, vec![(level, point)])),
            }
        }
        println!("noise {level}: done");
    }
    fs::create_dir_all(&root)?;
    fs::write(root.join("sweep.csv"), &table)?;
    if args.plot {
        let series: Vec<Series> = curves
            .into_iter()
            .map(|(name, points)| Series { name, points })
            .collect();
        let svg = render_metric_svg("final accuracy vs noise", "noise level", &series);
        fs::write(root.join("accuracy_vs_noise.svg"), svg)?;
    }
    println!("wrote {}", root.join("sweep.csv").display());
    Ok(())
}

fn cmd_gen_data(args: GenDataArgs) -> Result<()> {
    if args.k_classes < 2 {
        return Err(RadError::InvalidConfig("need at least 2 classes".into()));
    }
    if args.features == 0 {
        return Err(RadError::InvalidConfig("need at least 1 feature".into()));
    }
    if args.spread <= 0.0 {
        return Err(RadError::InvalidConfig("spread must be positive".into()));
    }
    let dataset =
        make_synthetic::<f64>(args.k_classes, args.features, args.n, args.spread, args.seed)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    rad::datastream::csv_io::write_csv(&args.out, &dataset, "label", None)?;
    println!(
        "wrote {} instances ({} classes, {} features) to {}",
        dataset.len(),
        args.k_classes,
        args.features,
        args.out.display()
    );
    Ok(())
}
