fn main() {
    std::process::exit(equicheck::cli::run());
}
