fn main() {
    std::process::exit(kwise::cli::run());
}
