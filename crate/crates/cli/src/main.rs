mod config;
mod error;
mod report;
mod study;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command, Context};
use error::CliError;

fn run(cli: &Cli) -> Result<bool, CliError> {
    let ctx = Context::resolve(&cli.command)?;
    let out = ctx.config.out.as_deref().map(std::path::Path::new);
    let (report, ok) = match &cli.command {
        Command::Verify(_) => verify::run(&ctx)?,
        Command::Converge(_) => (study::converge(&ctx)?, true),
        Command::Extend(_) => (study::extend_grid(&ctx)?, true),
        Command::Norms(_) => (study::norms(&ctx)?, true),
        Command::ValidateDomain(_) => study::validate_domain(&ctx)?,
    };
    report.emit(out)?;
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("mixext: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
