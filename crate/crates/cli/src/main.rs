fn main() {
    std::process::exit(homog3_cli::run(std::env::args_os()));
}
