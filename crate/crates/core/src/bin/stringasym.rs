use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stringasym::config::{load_config, Mode, RunConfig};
use stringasym::run::run;

#[derive(Parser)]
#[command(name = "stringasym", version, about = "Full and asymptotic solutions of the coupled-string system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mode named in the config's `[run] mode`.
    Run(Common),
    /// Solve the full two-field system.
    SolveFull(Common),
    /// Solve both KdV branches.
    SolveKdv(Common),
    /// Assemble the leading-order approximation from the KdV solutions.
    Assemble(Common),
    /// Full solution, approximation and residual at the output times.
    Compare(Common),
    /// Residual norms and fitted slopes over `[run] eps_list`.
    Sweep(Common),
    /// Fast-mode energy and frequency for consistent and inconsistent data.
    DiagnoseFastMode(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `[run] out_dir`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override `[physical] eps`.
    #[arg(long)]
    eps: Option<f64>,
    /// Worker threads for parallel sections.
    #[arg(long)]
    threads: Option<usize>,
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "status": "error", "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match cli.command {
        Command::Run(c) => (None, c),
        Command::SolveFull(c) => (Some(Mode::SolveFull), c),
        Command::SolveKdv(c) => (Some(Mode::SolveKdv), c),
        Command::Assemble(c) => (Some(Mode::Assemble), c),
        Command::Compare(c) => (Some(Mode::Compare), c),
        Command::Sweep(c) => (Some(Mode::Sweep), c),
        Command::DiagnoseFastMode(c) => (Some(Mode::DiagnoseFastMode), c),
    };

    if let Some(threads) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("{}", error_json("threads", &e.to_string()));
            return ExitCode::from(2);
        }
    }

    let config: Result<RunConfig, _> = load_config(&common.config).and_then(|c| match common.eps {
        Some(eps) => c.with_eps(eps),
        None => Ok(c),
    });
    let mut config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", error_json("config", &e.to_string()));
            return ExitCode::from(2);
        }
    };
    if let Some(mode) = mode {
        if mode == Mode::Sweep {
            if let Err(e) = stringasym::validation::check_eps_list(&config.eps_list) {
                eprintln!("{}", error_json("config", &format!("invalid value for `run.eps_list`: {e}")));
                return ExitCode::from(2);
            }
        }
        config.mode = mode;
    }

    match run(&config, common.out_dir.as_deref()) {
        Ok((output, paths)) => {
            for p in &paths {
                println!("{}", p.display());
            }
            match &output.manifest.error {
                None => ExitCode::SUCCESS,
                Some(err) => {
                    eprintln!("{}", error_json(err.kind, &err.message));
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("{}", error_json("output", &e.to_string()));
            ExitCode::from(2)
        }
    }
}
