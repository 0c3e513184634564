fn main() {
    std::process::exit(resona1d::cli::run());
}
