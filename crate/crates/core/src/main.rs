fn main() {
    std::process::exit(reshlab::cli::run(std::env::args_os()));
}
