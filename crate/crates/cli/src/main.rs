use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use soliton_cli::manifest::{self, Manifest};
use soliton_cli::run::{self, model_table, summary_lines, Command};
use soliton_cli::{exit, report_path, REPORT_DIR_ENV};

/// Verify gradient Ricci soliton identities and classify models.
#[derive(Parser)]
#[command(name = "soliton", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the manifest's suites (identities and elliptic by default).
    Verify(RunArgs),
    /// Run the classification suite on every manifest model.
    Classify(RunArgs),
    /// List catalog builders, parameters and expected classes.
    Models,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run manifest.
    manifest: PathBuf,
    /// Report file; overrides the manifest's output_path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid seed; overrides grid.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance for algebraic and first-order identities.
    #[arg(long, value_parser = positive)]
    tol_algebraic: Option<f64>,
    /// Tolerance for the elliptic equations.
    #[arg(long, value_parser = positive)]
    tol_elliptic: Option<f64>,
    /// Default directory for reports.
    #[arg(long, env = REPORT_DIR_ENV, hide_env_values = true)]
    report_dir: Option<PathBuf>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive real, got {s:?}")),
    }
}

fn apply_overrides(m: &mut Manifest, args: &RunArgs) {
    if let Some(s) = args.seed {
        m.grid.seed = s;
    }
    if let Some(t) = args.tol_algebraic {
        m.tolerances.algebraic = t;
    }
    if let Some(t) = args.tol_elliptic {
        m.tolerances.elliptic = t;
    }
}

fn run_command(command: Command, args: &RunArgs) -> i32 {
    let mut m = match manifest::load(&args.manifest) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("parse error: {e}");
            return exit::PARSE_ERROR;
        }
    };
    apply_overrides(&mut m, args);
    let report = match run::run(&m, command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("builder error: {e}");
            return exit::BUILD_ERROR;
        }
    };
    let path = report_path(
        args.out.as_deref(),
        &args.manifest,
        m.output_path.as_deref(),
        args.report_dir.as_deref(),
        command.as_str(),
    );
    if let Err(e) = write_report(&path, &report.to_json()) {
        eprintln!("cannot write report {}: {e}", path.display());
        return exit::BUILD_ERROR;
    }
    for line in summary_lines(&report) {
        println!("{line}");
    }
    println!("report: {}", path.display());
    if report.passed() {
        exit::PASS
    } else {
        eprintln!("verification failed:");
        for f in &report.failures {
            eprintln!("  {f}");
        }
        exit::VERIFICATION_FAILED
    }
}

fn write_report(path: &Path, body: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, body)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Cmd::Verify(args) => run_command(Command::Verify, args),
        Cmd::Classify(args) => run_command(Command::Classify, args),
        Cmd::Models => {
            print!("{}", model_table());
            exit::PASS
        }
    };
    ExitCode::from(code as u8)
}
