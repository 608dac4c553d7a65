use std::process::ExitCode;

fn main() -> ExitCode {
    lro_core::cli::main()
}
