use std::process::ExitCode;

fn main() -> ExitCode {
    sea_sim::cli::run()
}
