fn main() {
    std::process::exit(goursat_volterra::cli::main_with_args());
}
