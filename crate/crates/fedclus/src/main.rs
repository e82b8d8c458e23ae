fn main() {
    std::process::exit(fedclus::cli::run());
}
