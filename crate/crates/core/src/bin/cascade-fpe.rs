use clap::Parser;

use cascade_fpe::cli::{main_with, Args, CliError, ExitClass};

fn main() {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let err = CliError::new(ExitClass::InvalidScenario, e.to_string());
            eprintln!("{}", err.to_json());
            std::process::exit(err.exit_code);
        }
        Err(e) => e.exit(),
    };
    std::process::exit(main_with(args));
}
