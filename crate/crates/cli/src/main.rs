use std::io::{self, IsTerminal, Write};
use std::process::ExitCode;

use clap::Parser;
use quorum_risk_cli::{run, Cli, Format};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default = if io::stdout().is_terminal() { Format::Markdown } else { Format::Json };
    let out = run(&cli, default);
    let _ = io::stdout().write_all(out.stdout.as_bytes());
    let _ = io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
