use std::process::ExitCode;

fn main() -> ExitCode {
    stockflow_cli::main_from(std::env::args_os())
}
