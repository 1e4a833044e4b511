fn main() -> std::process::ExitCode {
    ogs::cli::main_with(std::env::args_os())
}
