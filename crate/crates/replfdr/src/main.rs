fn main() {
    std::process::exit(replfdr::cli::run(std::env::args_os()));
}
