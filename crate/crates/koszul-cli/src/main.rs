use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use koszul_cli::emit::{self, Format};
use koszul_cli::structure::StructureFile;
use koszul_cli::CliError;
use koszul_core::checks::{run_suite, SUITES};
use koszul_core::report::{canonical_order, overall, Report, Status};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "koszul",
    version,
    about = "Exact checks for Koszul brackets and their quantizations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an expression against the charts of a structure file.
    Eval {
        file: PathBuf,
        expr: String,
        /// Chart to resolve names in; defaults to the first one declared.
        #[arg(long)]
        chart: Option<String>,
    },
    /// Run check suites and print their reports.
    Check {
        file: PathBuf,
        /// Suite to run; repeatable. Defaults to the file's [suites] or all.
        #[arg(long)]
        suite: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "KOSZUL_WINDOW")]
        window: Option<u32>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Report 0 ms so runs can be compared byte for byte.
        #[arg(long)]
        no_timing: bool,
    },
    /// Re-emit JSON reports from a file or stdin.
    Report {
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn exit(reports: &[Report]) -> ExitCode {
    match overall(reports) {
        Status::Fail => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    }
}

fn usage(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("koszul: {e}");
    ExitCode::from(2)
}

fn check(
    file: &StructureFile,
    suites: Vec<String>,
    seed: Option<u64>,
    window: Option<u32>,
    no_timing: bool,
) -> Result<Vec<Report>, CliError> {
    let ctx = file.context(seed.unwrap_or(file.seed), window.unwrap_or(file.window));
    let mut names = if !suites.is_empty() {
        suites
    } else if !file.suites.is_empty() {
        file.suites.clone()
    } else {
        vec!["all".to_string()]
    };
    if names.iter().any(|s| s == "all") {
        names = SUITES.iter().map(|s| s.to_string()).collect();
    }
    names.dedup();
    let runs: Vec<_> = names.par_iter().map(|s| run_suite(s, &ctx)).collect();
    let mut reports = Vec::new();
    for r in runs {
        reports.extend(r?);
    }
    if no_timing {
        for r in &mut reports {
            r.millis = 0;
        }
    }
    canonical_order(&mut reports);
    Ok(reports)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Eval { file, expr, chart } => {
            let file = match StructureFile::load(&file) {
                Ok(f) => f,
                Err(e) => return usage(e),
            };
            match file.eval(chart.as_deref(), &expr) {
                Ok((_, p)) => {
                    println!("{p}");
                    ExitCode::SUCCESS
                }
                Err(e) => usage(e),
            }
        }
        Command::Check {
            file,
            suite,
            seed,
            window,
            format,
            no_timing,
        } => {
            for s in &suite {
                if s != "all" && !SUITES.contains(&s.as_str()) {
                    return usage(format!("unknown suite `{s}`"));
                }
            }
            let file = match StructureFile::load(&file) {
                Ok(f) => f,
                Err(e) => return usage(e),
            };
            match check(&file, suite, seed, window, no_timing) {
                Ok(reports) => {
                    print!("{}", emit::emit(&reports, format));
                    exit(&reports)
                }
                Err(e) => usage(e),
            }
        }
        Command::Report { input, format } => {
            let text = match input {
                Some(p) => std::fs::read_to_string(p),
                None => {
                    let mut s = String::new();
                    std::io::stdin().read_to_string(&mut s).map(|_| s)
                }
            };
            match text
                .map_err(CliError::from)
                .and_then(|t| emit::read_json(&t))
            {
                Ok(reports) => {
                    print!("{}", emit::emit(&reports, format));
                    exit(&reports)
                }
                Err(e) => usage(e),
            }
        }
    }
}
