fn main() {
    std::process::exit(moci::cli::main());
}
