use std::process::ExitCode;

fn main() -> ExitCode {
    roomloc::cli::main()
}
