fn main() {
    std::process::exit(wavrx::cli::run_command(std::env::args_os()));
}
