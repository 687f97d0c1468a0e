fn main() -> std::process::ExitCode {
    gravent_cli::run(std::env::args_os())
}
