use std::process::ExitCode;

use clap::error::ErrorKind;
use cweno_net_cli::{parse_args, run, CliError, RunOutput};

fn main() -> ExitCode {
    let config = match parse_args(std::env::args_os().skip(1)) {
        Ok(c) => c,
        Err(CliError::Usage(e)) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(CliError::Usage(e)) => {
            let msg = e.to_string();
            let line: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("tip:"))
                .collect();
            eprintln!("cweno-net: {} (see --help)", line.join(" ").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("cweno-net: {e}");
            return ExitCode::from(2);
        }
    };
    for w in &config.warnings {
        eprintln!("cweno-net: warning: {w}");
    }
    match run(&config) {
        Ok(RunOutput::Table { path: Some(p), .. }) => {
            eprintln!("cweno-net: wrote {}", p.display());
            ExitCode::SUCCESS
        }
        Ok(RunOutput::Table { path: None, .. }) => ExitCode::SUCCESS,
        Ok(RunOutput::Snapshots { files, steps }) => {
            eprintln!("cweno-net: {steps} steps, wrote {} files", files.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cweno-net: {e}");
            ExitCode::FAILURE
        }
    }
}
