fn main() {
    std::process::exit(turnkit_cli::run(std::env::args_os()));
}
