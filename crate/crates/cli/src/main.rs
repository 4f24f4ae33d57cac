use std::process::ExitCode;

fn main() -> ExitCode {
    stochplan_cli::run(std::env::args_os())
}
