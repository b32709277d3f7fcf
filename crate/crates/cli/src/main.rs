use std::process::ExitCode;

fn main() -> ExitCode {
    pave_iri_cli::main_with_args(std::env::args_os())
}
