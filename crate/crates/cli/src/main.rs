use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use spopt_cli::scheme::parse_scheme_list;
use spopt_cli::{run_mor, run_sympev, run_target, Application, CliResult, ExperimentConfig, Scheme};

// An alias keeps clap from treating the list as a repeated argument.
type SchemeList = Vec<Scheme>;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Target,
    Sympev,
    Mor,
}

/// Riemannian optimization on the symplectic Stiefel manifold: experiment runner.
#[derive(Debug, Parser)]
#[command(name = "spopt", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated subset of CayleyC,CayleyE,QGeoC,QGeoE,SRC,SRE.
    #[arg(long, value_parser = parse_scheme_list)]
    schemes: Option<SchemeList>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the full problem sizes instead of desk-scale defaults.
    #[arg(long)]
    paper_scale: bool,
}

fn run(args: Args) -> CliResult<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.schemes {
        config.schemes = Some(s);
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = args.out {
        config.out = Some(out);
    }
    config.paper_scale |= args.paper_scale;
    let app = match args.command {
        Command::Target => Application::Target,
        Command::Sympev => Application::Sympev,
        Command::Mor => Application::Mor,
    };
    let out = config.output_dir();
    match app {
        Application::Target => {
            for r in run_target(&config)?.runs {
                let s = &r.summary;
                log::info!(
                    "{} {}: {} after {} iterations, f = {:.3e}, |grad| = {:.3e}",
                    s.preset, s.scheme, s.status, s.iterations, s.final_cost, s.final_grad_norm
                );
            }
        }
        Application::Sympev => {
            for r in run_sympev(&config)?.runs {
                log::info!("{}: l1 error {:.3e}", r.scheme, r.summary.l1_error);
            }
        }
        Application::Mor => {
            for row in run_mor(&config)?.rows() {
                log::info!(
                    "k = {} {} {}: RE_x = {:.3e}, RE_H = {:.3e}",
                    row.k, row.method, row.treatment, row.re_x, row.re_h
                );
            }
        }
    }
    println!("wrote {app} results to {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
