use clap::{Parser, ValueEnum};
use hslab_core::harness::{self, config::RunConfig, Command, EXIT_ABORT, EXIT_CONFIG};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Scatter,
    Asympt,
    Evolve,
    Compare,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Scatter => Command::Scatter,
            Cmd::Asympt => Command::Asympt,
            Cmd::Evolve => Command::Evolve,
            Cmd::Compare => Command::Compare,
        }
    }
}

/// Hunter-Saxton scattering, asymptotics and evolution laboratory.
#[derive(Debug, Parser)]
#[command(name = "hslab", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; `HSLAB_THREADS` takes precedence.
    #[arg(long)]
    threads: Option<usize>,
}

fn thread_count(args: &Args, cfg: &RunConfig) -> Result<Option<usize>, String> {
    if let Ok(v) = std::env::var("HSLAB_THREADS") {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("HSLAB_THREADS must be a positive integer, got `{v}`")),
        };
    }
    match args.threads {
        Some(0) => Err("--threads must be positive".into()),
        Some(n) => Ok(Some(n)),
        None => Ok(cfg.threads),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hslab: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match thread_count(&args, &cfg) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("hslab: cannot configure {n} threads: {e}");
                return ExitCode::from(EXIT_ABORT as u8);
            }
        }
        Ok(None) => {}
        Err(msg) => {
            eprintln!("hslab: {msg}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    match harness::run(args.command.into(), &cfg, &out) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            for fail in &outcome.failures {
                eprintln!("hslab: validation failed: {fail}");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("hslab: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
