fn main() {
    let code = bioequiv::cli::main_with_std();
    std::process::exit(code);
}
