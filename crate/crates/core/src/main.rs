use std::process::ExitCode;

fn main() -> ExitCode {
    lstmcov::cli::main_with_args(std::env::args_os())
}
