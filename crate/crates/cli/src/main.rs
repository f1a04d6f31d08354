fn main() {
    std::process::exit(loadflex_cli::run(std::env::args_os()));
}
