use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybrid_tn_cli::verify::{format_table, run_suite, VerifyOptions};
use hybrid_tn_cli::{cmd_exact, cmd_run, cmd_sweep, exit, CliError, ExperimentConfig};

/// Hybrid tree tensor network experiments.
///
/// Exit codes: 0 success, 1 runtime failure or failed property, 2 config
/// error, 3 system too large for the exact oracle, 4 optimizer hit max_iters
/// (results are still written).
#[derive(Parser)]
#[command(name = "hybridtn", version)]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one experiment and compare with exact diagonalization.
    Run(ExperimentArgs),
    /// Exact ground energy and ground-state term expectations.
    Exact(ExperimentArgs),
    /// One run per coupling scale in the config's lambda list.
    Sweep(ExperimentArgs),
    /// Run the property suite and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also run sampling checks at this many shots.
    #[arg(long, default_value_t = 0)]
    shots: usize,
    /// Flip the Y sign in the open-index reconstruction (the suite must fail).
    #[arg(long)]
    mutate_y_sign: bool,
}

fn load(args: &ExperimentArgs) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    if let Some(out) = &args.out {
        config.output = out.clone();
    }
    let out = config.output.clone();
    Ok((config, out))
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Run(args) => {
            let (config, out) = load(&args)?;
            let r = cmd_run(&config, &out)?;
            match (r.exact_energy, r.rel_error) {
                (Some(e0), Some(err)) => println!(
                    "{:?}: E = {:.12} E0 = {e0:.12} rel_error = {err:.3e} ({} iterations)",
                    r.status, r.energy, r.iterations
                ),
                _ => println!("{:?}: E = {:.12} ({} iterations, exact reference skipped)", r.status, r.energy, r.iterations),
            }
            Ok(r.exit_code())
        }
        Command::Exact(args) => {
            let (config, out) = load(&args)?;
            let r = cmd_exact(&config, &out)?;
            println!("E0 = {:.12} ({:?}, residual {:.1e})", r.energy, r.method, r.residual);
            Ok(exit::SUCCESS)
        }
        Command::Sweep(args) => {
            let (config, out) = load(&args)?;
            let s = cmd_sweep(&config, &out)?;
            for p in &s.points {
                let err = p.rel_error.map_or("n/a".to_string(), |e| format!("{e:.3e}"));
                println!("lambda {:<8} {:?}: E = {:.12} rel_error = {err}", p.lambda, p.status, p.energy);
            }
            Ok(s.exit_code())
        }
        Command::Verify(args) => {
            let opts = VerifyOptions {
                seed: args.seed,
                shots: args.shots,
                mutate_y_sign: args.mutate_y_sign,
                ..VerifyOptions::default()
            };
            let checks = run_suite(&opts);
            print!("{}", format_table(&checks));
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::VerifyFailed {
                    failed,
                    total: checks.len(),
                });
            }
            Ok(exit::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(exit::FAILURE as u8);
        }
    }
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
