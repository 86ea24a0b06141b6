use std::process::ExitCode;

fn main() -> ExitCode {
    circuit_graph::cli::run(std::env::args_os())
}
