use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(torus_sos::cli::run())
}
