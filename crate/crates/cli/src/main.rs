fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(curlab_cli::run_from(std::env::args_os()))
}
