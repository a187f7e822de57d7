use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cuspdiv::config::{FamilyName, GridSpec};
use cuspdiv::{commands, CliError, CliResult, Command, RunConfig, Settings};

/// Non-existence certificates for div u = f on cusp domains.
#[derive(Parser, Debug)]
#[command(name = "cuspdiv", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Thresholds and classification for each alpha.
    Analyze(Flags),
    /// Lower-bound curve LB(eps) and its blow-up verdict.
    Certificate(Flags),
    /// Discrete minimal-norm solves on truncated domains.
    Oracle(Flags),
    /// Lemma checks and cross-module invariants.
    Selftest(Flags),
}

#[derive(Args, Debug)]
struct Flags {
    /// JSON config with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// poly2d, polyNd or log2d.
    #[arg(long)]
    family: Option<FamilyName>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long = "N")]
    n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Comma-separated alphas.
    #[arg(long, allow_hyphen_values = true)]
    alpha_grid: Option<String>,
    /// Comma-separated, strictly decreasing, or dyadic:a:b for 2^-a .. 2^-b.
    #[arg(long)]
    eps_grid: Option<String>,
    /// graded, graded:TIP:GROWTH:HMAX or uniform:H.
    #[arg(long)]
    h_rule: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    outer_tol: Option<f64>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
    /// Monte Carlo samples per selftest measure check.
    #[arg(long)]
    mc_samples: Option<u64>,
    #[arg(long, hide = true)]
    inject_kp_scale: Option<f64>,
}

impl Flags {
    fn into_config(self) -> CliResult<RunConfig> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            family: self.family,
            m: self.m,
            n: self.n,
            r: self.r,
            p: self.p,
            alpha: self.alpha,
            alpha_grid: self.alpha_grid.map(GridSpec::Text),
            eps_grid: self.eps_grid.map(GridSpec::Text),
            h_rule: self.h_rule,
            seed: self.seed,
            out: self.out,
            outer_tol: self.outer_tol,
            inner_tol: self.inner_tol,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            mc_samples: self.mc_samples,
            inject_kp_scale: self.inject_kp_scale,
        };
        Ok(file.merge(flags))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let (command, flags) = match cli.command {
        Sub::Analyze(f) => (Command::Analyze, f),
        Sub::Certificate(f) => (Command::Certificate, f),
        Sub::Oracle(f) => (Command::Oracle, f),
        Sub::Selftest(f) => (Command::Selftest, f),
    };
    let settings = Settings::resolve(command, &flags.into_config()?)?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    commands::execute(&settings, &mut lock)?;
    lock.flush().map_err(|source| CliError::Io {
        path: "<stdout>".into(),
        source,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cuspdiv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
