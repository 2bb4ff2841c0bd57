fn main() {
    std::process::exit(datamation::cli::run());
}
