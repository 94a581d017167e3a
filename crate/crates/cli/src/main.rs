mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use dbarpos::Error;
use serde::Serialize;

use crate::config::RunConfig;

/// Thread count for the parallel kernels; defaults to all cores.
const THREADS_VAR: &str = "DBARPOS_THREADS";

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "dbarpos", version, about = "Batch checks of partial curvature positivity and weighted dbar estimates")]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json, timings.json and CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    verbose: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum Status {
    Pass,
    Fail,
    InputError,
    NumericalError,
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    status: Status,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    files: Vec<String>,
}

fn exit_code_for(e: &Error) -> u8 {
    if e.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_NUMERICAL
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let threads: usize = v
        .parse()
        .ok()
        .filter(|t| *t >= 1)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INPUT);
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let cfg = match config::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return ExitCode::from(EXIT_INPUT);
    }
    if args.verbose {
        eprintln!("running {} -> {}", cfg.name(), args.out.display());
    }

    let start = Instant::now();
    let outcome = commands::run(&cfg, &args.out);
    let seconds = start.elapsed().as_secs_f64();

    let mut report = Report {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.name(),
        status: Status::Pass,
        config: &cfg,
        result: None,
        error: None,
        files: vec![],
    };
    let code = match outcome {
        Ok(o) => {
            report.status = if o.pass { Status::Pass } else { Status::Fail };
            report.result = Some(o.result);
            report.files = o.files;
            if o.pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            let code = exit_code_for(&e);
            report.status = if code == EXIT_INPUT { Status::InputError } else { Status::NumericalError };
            eprintln!("error: {e}");
            report.error = Some(e.to_string());
            code
        }
    };
    let timings = serde_json::json!({ "command": cfg.name(), "seconds": seconds });
    for (name, result) in [
        ("report.json", write_json(&args.out.join("report.json"), &report)),
        ("timings.json", write_json(&args.out.join("timings.json"), &timings)),
    ] {
        if let Err(e) = result {
            eprintln!("error: {name}: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    if args.verbose {
        eprintln!("{} finished in {seconds:.2} s", cfg.name());
    }
    println!(
        "{}: {}",
        cfg.name(),
        match code {
            EXIT_PASS => "pass",
            EXIT_FAIL => "fail",
            EXIT_INPUT => "input error",
            _ => "numerical error",
        }
    );
    ExitCode::from(code)
}
