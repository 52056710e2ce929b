use std::process::ExitCode;

use vortexpair_cli::run::EXIT_CONFIG;
use vortexpair_cli::{parse_config, run, ConfigError};

fn main() -> ExitCode {
    let cfg = match parse_config(std::env::args_os()) {
        Ok(c) => c,
        Err(ConfigError::Usage(e)) => e.exit(),
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match run(&cfg) {
        Ok(out) => {
            if out.exit_code() != 0 {
                eprintln!("error: did not converge");
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
