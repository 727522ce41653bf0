use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(lognls::cli::run(std::env::args_os()))
}
