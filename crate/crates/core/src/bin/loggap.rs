fn main() {
    std::process::exit(loggap::harness::cli::run(std::env::args().collect()));
}
