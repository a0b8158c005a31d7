use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use jcm_core::error::JcmError;
use jcm_core::harness::study::{runtime_ordering_holds, write_benchmark_csv};
use jcm_core::harness::{
    benchmark, convergence_trace, emit_results, parse_methods, parse_values, run_plan, ConfigFile, ExperimentPlan, OutputFormat, Sweep,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Monte-Carlo sweep writing one record per (value, trial, method).
    Run,
    /// Per-iteration objective traces of the parametric estimators.
    Trace,
    /// Median estimator runtimes per array size.
    Benchmark,
}

/// Monte-Carlo simulator for jamming covariance estimation and null-space
/// receive beamforming.
#[derive(Debug, Parser)]
#[command(name = "jcm-sim", version)]
struct Cli {
    /// TOML file with scenario keys and an optional [experiment] table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep axis: jnr, n_b, snr, convergence or crlb.
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated values or start:step:stop.
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated subset of SCM, EVD, PEM_GD, PEM_AO.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Run trials on all cores (true) or serially (false).
    #[arg(long)]
    parallel: Option<bool>,
    /// Write runtime_s as 0 so repeated runs produce identical files.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, value_enum, default_value_t = Mode::Run)]
    mode: Mode,
}

fn build_plan(cli: &Cli) -> Result<ExperimentPlan, JcmError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let file_has_values = file.experiment.values.is_some();
    let mut plan = file.into_plan();
    if let Some(s) = &cli.sweep {
        let sweep: Sweep = s.parse()?;
        if sweep != plan.sweep && !file_has_values {
            plan.sweep_values = sweep.default_values();
        }
        plan.sweep = sweep;
    }
    if let Some(v) = &cli.values {
        plan.sweep_values = parse_values(v)?;
    }
    if let Some(t) = cli.trials {
        plan.trials = t;
    }
    if let Some(m) = &cli.methods {
        plan.methods = parse_methods(m)?;
    }
    if let Some(s) = cli.seed {
        plan.scenario.seed = s;
    }
    if let Some(o) = &cli.out {
        plan.output_path = o.clone();
    }
    if let Some(f) = &cli.format {
        plan.output_format = f.parse::<OutputFormat>()?;
        if cli.out.is_none() && plan.output_format == OutputFormat::Json {
            plan.output_path.set_extension("json");
        }
    }
    if let Some(p) = cli.parallel {
        plan.parallel = p;
    }
    if cli.no_timing {
        plan.timing = false;
    }
    plan.validate()?;
    Ok(plan)
}

fn run(cli: &Cli, plan: &ExperimentPlan) -> Result<(), JcmError> {
    match cli.mode {
        Mode::Run => {
            let records = run_plan(plan)?;
            let agg = emit_results(&records, plan.output_format, &plan.output_path)?;
            println!(
                "wrote {} records to {} (aggregate: {})",
                records.len(),
                plan.output_path.display(),
                agg.display()
            );
        }
        Mode::Trace => {
            let table = convergence_trace(plan, 0)?;
            table.write_csv(&plan.output_path)?;
            println!("wrote {} trace rows to {}", table.num_rows(), plan.output_path.display());
        }
        Mode::Benchmark => {
            let rows = benchmark(plan)?;
            write_benchmark_csv(&rows, &plan.output_path)?;
            for r in &rows {
                println!("n_b={:<3} {:<7} median {:.3e} s", r.n_b, r.method.label(), r.median_runtime_s);
            }
            let mut sizes: Vec<usize> = rows.iter().map(|r| r.n_b).collect();
            sizes.dedup();
            for n in sizes {
                if let Some(ok) = runtime_ordering_holds(&rows, n) {
                    println!("n_b={n}: EVD <= PEM_AO <= PEM_GD {}", if ok { "holds" } else { "violated" });
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let plan = match build_plan(&cli) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, &plan) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
