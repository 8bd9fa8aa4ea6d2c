fn main() {
    std::process::exit(digraf::cli::main());
}
