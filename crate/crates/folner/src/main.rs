fn main() {
    std::process::exit(folner::cli::run());
}
