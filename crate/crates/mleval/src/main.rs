fn main() {
    std::process::exit(mleval::cli::main());
}
