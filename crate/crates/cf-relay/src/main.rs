//! Thin command-line front end; all real work lives in the library.

use cf_relay::cli;
use cf_relay::config::ExperimentConfig;
use cf_relay::Error;
use std::path::Path;
use std::process::ExitCode;

const USAGE: &str = "usage: cf-relay <design|build|simulate|chart> <config-file> \
[--paper-scale] [--jobs N]";

fn run() -> Result<(), (u8, String)> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut positional: Vec<&str> = Vec::new();
    let mut paper_scale = false;
    let mut jobs: Option<usize> = None;
    let mut i = 0;
    while i < args.len() {
        match args[i].as_str() {
            "--paper-scale" => paper_scale = true,
            "--jobs" => {
                i += 1;
                let v = args
                    .get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or((1u8, format!("--jobs needs a positive integer\n{USAGE}")))?;
                jobs = Some(v);
            }
            "--help" | "-h" => return Err((0, USAGE.to_string())),
            flag if flag.starts_with('-') => {
                return Err((1, format!("unknown flag {flag}\n{USAGE}")))
            }
            other => positional.push(other),
        }
        i += 1;
    }
    let [command, config_path] = positional[..] else {
        return Err((1, USAGE.to_string()));
    };

    let mut cfg = ExperimentConfig::load(Path::new(config_path))
        .map_err(|e| (1u8, e.to_string()))?;
    if paper_scale {
        cfg.paper_scale = true;
        cfg.n = cfg.n.max(100_000);
    }
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    cfg.validate().map_err(|e| (1u8, e.to_string()))?;

    let map_err = |code_hint: u8| {
        move |e: Error| -> (u8, String) {
            let code = match &e {
                Error::Infeasible { .. } | Error::Stalled(_) => 2,
                Error::Config(_) | Error::Parse { .. } | Error::VersionMismatch { .. } => 1,
                _ => code_hint,
            };
            (code, e.to_string())
        }
    };

    match command {
        "design" => cli::cmd_design(&cfg).map_err(map_err(2)),
        "build" => cli::cmd_build(&cfg).map_err(map_err(1)),
        "simulate" => cli::cmd_simulate(&cfg).map_err(map_err(3)),
        "chart" => cli::cmd_chart(&cfg).map_err(map_err(1)),
        other => Err((1, format!("unknown command {other:?}\n{USAGE}"))),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
