use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sturm_cli::{cmd_classify, cmd_ll, cmd_solve, cmd_spectrum, CliError, Options, Outcome, ProblemConfig};

#[derive(Parser)]
#[command(
    name = "sturm",
    version,
    about = "Resonance analysis and shooting solver for planar two-line boundary value problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON problem description.
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// Number of tabulated resonance intervals.
    #[arg(long)]
    jmax: Option<usize>,
    /// Print the spectrum SVG instead of JSON when no --out is given.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Resonance intervals and the verdict for T.
    Classify(Common),
    /// Spectrum curves, diagonal crossings and rectangle verdict.
    Spectrum(Common),
    /// Find solutions by shooting.
    Solve(Common),
    /// Check the Landesman–Lazer conditions.
    Ll(Common),
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let (common, cmd): (&Common, fn(&ProblemConfig, &Options) -> Result<Outcome, CliError>) = match &cli.command {
        Command::Classify(c) => (c, cmd_classify),
        Command::Spectrum(c) => (c, cmd_spectrum),
        Command::Solve(c) => (c, cmd_solve),
        Command::Ll(c) => (c, cmd_ll),
    };
    let cfg = ProblemConfig::load(&common.config)?;
    let opts = Options {
        out: common.out.clone(),
        tol: common.tol,
        jmax: common.jmax,
        svg: common.svg,
    };
    let outcome = cmd(&cfg, &opts)?;
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir)?;
        for (name, text) in &outcome.files {
            std::fs::write(dir.join(name), text)?;
        }
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("STURM_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: STURM_THREADS ignored: {e}");
        }
    }
    match run(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
