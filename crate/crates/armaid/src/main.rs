use std::process::ExitCode;

fn main() -> ExitCode {
    armaid::cli::main_entry()
}
