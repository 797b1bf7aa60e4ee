use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use ocbas::cli::{self, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let result = cli::run(cli, &mut out, &mut err);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.exit_code() == 2 {
                let _ = writeln!(err, "\nFor more information, try '--help'.");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
