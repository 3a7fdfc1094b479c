// SPDX-License-Identifier: Apache-2.0

use std::process::ExitCode;

use clap::Parser;
use cr_tanh::Error;

fn main() -> ExitCode {
    let cli = cr_tanh::cli::Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match cr_tanh::cli::run(cli, &mut stdout) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
