fn main() {
    std::process::exit(ecodyn::cli::run());
}
