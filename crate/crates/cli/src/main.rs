use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gsclo::trace::{read_trace, write_trace};
use gsclo::types::{gains_of, losses_of};
use gsclo::objective::objective_gsmr;
use gsclo_cli::solvers::{solve, SolveContext};
use gsclo_cli::spec::ExperimentSpec;
use gsclo_cli::synth::{generate_trace, GeneratorParams};
use gsclo_cli::{emit_report, run_experiment, CliError, Result, SolverId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (",
    env!("GSCLO_BUILD_TARGET"),
    ", ",
    env!("GSCLO_BUILD_PROFILE"),
    ")"
);

#[derive(Parser)]
#[command(name = "gsclo", version = VERSION, about = "GS content switching and power allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its result files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed; overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Record mean solve times in the `time` column.
        #[arg(long)]
        timing: bool,
    },
    /// Generate or summarize trace files.
    #[command(subcommand)]
    Trace(TraceCommand),
    /// Solve one trace and print the allocation as CSV.
    Solve(SolveArgs),
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Write a synthetic trace.
    Gen {
        /// Experiment config supplying the scenario and generator.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print summary statistics of a trace.
    Inspect {
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    solver: SolverId,
    #[arg(long)]
    trace: PathBuf,
    /// Experiment config supplying the scenario and solver settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Average power budget in watts; overrides the scenario.
    #[arg(long)]
    budget_w: Option<f64>,
    /// Loss threshold for `qgs` and `qgs_prime`.
    #[arg(long)]
    loss_threshold: Option<f64>,
    /// Write the allocation here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_spec(path: Option<&PathBuf>) -> Result<ExperimentSpec> {
    match path {
        Some(p) => ExperimentSpec::load(p),
        None => ExperimentSpec::from_toml("solvers = [\"apo\"]"),
    }
}

fn read_trace_file(path: &PathBuf) -> Result<Vec<gsclo::FrameTrace64>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(read_trace(file)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, seed, timing } => {
            let spec = ExperimentSpec::load(&config)?;
            let dir = out
                .or_else(|| spec.output_dir.clone())
                .ok_or_else(|| CliError::Spec("no output directory: pass --out or set output_dir".into()))?;
            let seed = seed.unwrap_or_else(|| spec.master_seed());
            let results = run_experiment(&spec, seed, timing)?;
            emit_report(&results, &dir)?;
            let infeasible = results.rows.iter().filter(|r| r.feasible_runs < r.runs).count();
            eprintln!(
                "wrote {} rows to {} ({} with infeasible runs)",
                results.rows.len(),
                dir.display(),
                infeasible
            );
        }
        Command::Trace(TraceCommand::Gen { config, frames, seed, out }) => {
            let spec = load_spec(config.as_ref())?;
            let mut cfg = spec.scenario;
            if let Some(n) = frames {
                cfg = cfg.with_frames(n);
            }
            let params = match spec.trace {
                gsclo_cli::spec::TraceSource::Synthetic(p) => p,
                gsclo_cli::spec::TraceSource::File { .. } => GeneratorParams::default(),
            };
            let trace = generate_trace(&cfg, &params, &mut ChaCha8Rng::seed_from_u64(seed))?;
            let file = File::create(&out).map_err(|e| CliError::io(&out, e))?;
            write_trace(file, &trace)?;
        }
        Command::Trace(TraceCommand::Inspect { trace }) => {
            let frames = read_trace_file(&trace)?;
            let losses = losses_of(&frames);
            let gains = gains_of(&frames);
            let n = frames.len() as f64;
            let mut sorted = losses.clone();
            sorted.sort_by(f64::total_cmp);
            let q = |f: f64| sorted[((sorted.len() - 1) as f64 * f).round() as usize];
            let mean_gain = gains.iter().sum::<f64>() / n;
            let uncertain = frames.iter().filter(|f| f.omega2.is_some()).count();
            let mut stdout = io::stdout().lock();
            let _ = writeln!(stdout, "frames           {}", frames.len());
            let _ = writeln!(stdout, "mean loss        {}", losses.iter().sum::<f64>() / n);
            let _ = writeln!(stdout, "loss p50/p90/max {} / {} / {}", q(0.5), q(0.9), q(1.0));
            let _ = writeln!(stdout, "mean gain        {mean_gain:e}");
            let _ = writeln!(stdout, "with uncertainty {uncertain}");
        }
        Command::Solve(args) => {
            let spec = load_spec(args.config.as_ref())?;
            let frames = read_trace_file(&args.trace)?;
            let mut cfg = spec.scenario.with_frames(frames.len());
            if let Some(p) = args.budget_w {
                cfg = cfg.with_budget(p);
            }
            cfg.validate()?;
            let ctx = SolveContext {
                apo: spec.apo.settings(),
                bils: spec.bils.settings(&cfg, spec.master_seed()),
                loss_threshold: args.loss_threshold.unwrap_or(spec.loss_threshold),
            };
            let alloc = solve(args.solver, &frames, &cfg, &ctx)?;
            let sink: Box<dyn Write> = match &args.out {
                Some(p) => Box::new(File::create(p).map_err(|e| CliError::io(p, e))?),
                None => Box::new(io::stdout().lock()),
            };
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(["frame", "x", "p_w"])?;
            for (f, (x, p)) in frames.iter().zip(alloc.x.iter().zip(&alloc.p)) {
                w.write_record([f.frame_index.to_string(), x.to_string(), p.to_string()])?;
            }
            w.flush().map_err(|e| CliError::io(args.out.as_deref().unwrap_or("<stdout>".as_ref()), e))?;
            eprintln!(
                "{}: mean loss {}, mean power {} W, {} uploads",
                args.solver,
                objective_gsmr(&alloc.x, &losses_of(&frames))?,
                alloc.mean_power(),
                alloc.upload_count()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
