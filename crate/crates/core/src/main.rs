fn main() {
    std::process::exit(hypmetrics::cli::run());
}
