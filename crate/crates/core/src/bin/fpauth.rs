use std::process::ExitCode;

fn main() -> ExitCode {
    fpauth::cli::main()
}
