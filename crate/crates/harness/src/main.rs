use std::fs;
use std::process::ExitCode;

use clap::Parser;

use sac_harness::cli::Cli;
use sac_harness::run::execute;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.opts.resolve().map_err(Into::into).and_then(|s| {
        let report = execute(cli.command, &s)?;
        Ok::<_, sac_harness::run::CliError>((s, report))
    });
    match result {
        Ok((s, Some(report))) => match &s.report {
            Some(path) => match fs::write(path, report + "\n") {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: writing {}: {e}", path.display());
                    ExitCode::FAILURE
                }
            },
            None => {
                println!("{report}");
                ExitCode::SUCCESS
            }
        },
        Ok((_, None)) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
