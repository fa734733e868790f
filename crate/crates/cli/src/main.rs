mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use args::Cli;
use commands::{CliError, Outcome};

const THREADS_VAR: &str = "EXACTAPPROX_THREADS";

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("{THREADS_VAR}={v:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn emit(cli: &Cli, report: &serde_json::Value) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
    text.push('\n');
    match &cli.out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn run(argv: Vec<OsString>) -> i32 {
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    let argv = match config::splice(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (report, code) = match commands::execute(&cli.command) {
        Ok(Outcome { report, pass }) => (report, if pass { 0 } else { 1 }),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            return 2;
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            (serde_json::json!({ "schema": "exactapprox.error/1", "error": msg }), 1)
        }
    };
    match emit(&cli, &report) {
        Ok(()) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn main() {
    std::process::exit(run(std::env::args_os().collect()));
}
