mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use divlab_core::{Error, ErrorKind};

use crate::args::Cli;

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Input => 2,
        ErrorKind::Config => 3,
        ErrorKind::Numerical => 4,
    }
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Input => "input",
        ErrorKind::Config => "config",
        ErrorKind::Numerical => "numerical",
    }
}

/// One JSON object on one line.
fn report_error(kind: ErrorKind, message: &str) -> ExitCode {
    let code = exit_code(kind);
    let line = serde_json::json!({
        "error": { "kind": kind_name(kind), "exit_code": code, "message": message }
    });
    let _ = writeln!(std::io::stderr(), "{line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(
                e.kind(),
                K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            return report_error(ErrorKind::Config, first);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(e.kind(), &flatten(&e)),
    }
}

fn flatten(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        let text = s.to_string();
        if !msg.contains(&text) {
            msg.push_str(": ");
            msg.push_str(&text);
        }
        source = s.source();
    }
    msg.replace('\n', " ")
}
