use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dnn_approx::problem::{build_ex_biq, generate_bqp, save_instance, write_biq};
use dnn_approx::SolverKind;
use dnn_approx_cli::bench::{self, Metric};
use dnn_approx_cli::config::ConfigFlags;
use dnn_approx_cli::instance::{load_biq_spec, load_spec, parse_generator};
use dnn_approx_cli::run::{describe, exit_code, run_instance};

#[derive(Parser)]
#[command(name = "dnn-approx", version, about = "Best approximation onto DNN-constrained sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance; exits 0 when the tolerance is met, 2 on a cap.
    Solve {
        #[command(flatten)]
        flags: ConfigFlags,
        /// Zero the time fields so reruns are byte-identical.
        #[arg(long)]
        canonical: bool,
    },
    /// Run instances × solvers and emit a results table and profile.
    Bench {
        /// Instance globs or `bqp:<n>:<seed>` specs.
        #[arg(required = true)]
        instances: Vec<String>,
        /// Comma-separated solver names.
        #[arg(long, value_delimiter = ',', default_value = "imabcd,abcgd")]
        solvers: Vec<String>,
        /// Profile by `time` or `iterations`.
        #[arg(long, default_value = "time")]
        metric: String,
        #[command(flatten)]
        flags: ConfigFlags,
        #[arg(long)]
        canonical: bool,
    },
    /// Re-render the profile from a stored results table.
    Profile {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value = "time")]
        metric: String,
        /// Defaults to the directory holding the results.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Build an ex-BIQ instance and store it as JSON; `bqp:` sources can
    /// also be written as `.sparse` data.
    Gen {
        /// Biq Mac `.sparse` file or `bqp:<n>:<seed>[:<density>]`.
        #[arg(long)]
        input: String,
        #[arg(long)]
        output: PathBuf,
    },
}

fn solve(flags: &ConfigFlags, canonical: bool) -> Result<u8> {
    let cfg = flags.resolve()?;
    let Some(spec) = &cfg.instance else {
        bail!("no instance given (use --instance or the config file)");
    };
    let inst = load_spec(spec)?;
    let (r, _) = run_instance(&cfg, &inst, &cfg.output_dir, canonical)?;
    println!("{}", describe(&r, &inst.name));
    Ok(exit_code(r.reason))
}

fn run_bench(
    instances: &[String],
    solvers: &[String],
    metric: &str,
    flags: &ConfigFlags,
    canonical: bool,
) -> Result<u8> {
    let cfg = flags.resolve()?;
    let metric: Metric = metric.parse()?;
    let solvers = solvers
        .iter()
        .map(|s| s.parse::<SolverKind>())
        .collect::<dnn_approx::Result<Vec<_>>>()?;
    let specs = bench::expand_instances(instances)?;
    let rows = bench::run_benchmark(&cfg, &specs, &solvers, metric, canonical)?;
    for r in &rows {
        if r.error.is_empty() {
            println!(
                "{:<16} {:<8} {:<14} {:>7} it  eta {:.2e}  {:.2} s",
                r.instance, r.solver, r.status, r.iterations, r.eta, r.time_s
            );
        } else {
            println!("{:<16} {:<8} error: {}", r.instance, r.solver, r.error);
        }
    }
    println!("wrote {}", cfg.output_dir.join(bench::RESULTS_FILE).display());
    Ok(0)
}

fn profile(results: &Path, metric: &str, output_dir: Option<&PathBuf>) -> Result<u8> {
    let metric: Metric = metric.parse()?;
    let rows = bench::read_results(results)?;
    let out = match output_dir {
        Some(d) => d.clone(),
        None => results.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    std::fs::create_dir_all(&out)?;
    let curves = bench::write_profile(&rows, metric, &out)?;
    for c in &curves {
        println!("{:<8} best on {:.0}%, solved {:.0}%", c.solver, 100.0 * c.value_at(1.0), 100.0 * c.success_fraction());
    }
    Ok(0)
}

fn generate(input: &str, output: &Path) -> Result<u8> {
    let to_sparse = output.extension().is_some_and(|e| e == "sparse");
    if to_sparse {
        let Some((n, seed, density)) = parse_generator(input)? else {
            bail!("only bqp: sources can be written as .sparse");
        };
        let raw = generate_bqp(n, density, seed);
        let note = format!("generated: n = {n}, density = {density}, seed = {seed}");
        std::fs::write(output, write_biq(&raw, &[&note]))
            .with_context(|| format!("writing {}", output.display()))?;
    } else {
        let (name, data) = load_biq_spec(input)?;
        let inst = build_ex_biq(&data, name)?;
        save_instance(&inst, output).with_context(|| format!("writing {}", output.display()))?;
    }
    println!("wrote {}", output.display());
    Ok(0)
}

fn main() -> ExitCode {
    // Usage errors exit 1; clap's own default of 2 would read as a cap.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Solve { flags, canonical } => solve(flags, *canonical),
        Command::Bench {
            instances,
            solvers,
            metric,
            flags,
            canonical,
        } => run_bench(instances, solvers, metric, flags, *canonical),
        Command::Profile {
            results,
            metric,
            output_dir,
        } => profile(results, metric, output_dir.as_ref()),
        Command::Gen { input, output } => generate(input, output),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
