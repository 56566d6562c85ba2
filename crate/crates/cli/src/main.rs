//! `mvgeg`: evaluate, tabulate, verify and benchmark matrix-valued Gegenbauer
//! polynomials. `MVGEG_PRECISION=extended` switches to quad precision.

mod config;
mod run;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = config::Cli::parse();
    match run::dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
