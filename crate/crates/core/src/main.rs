fn main() {
    let code = heegner::cli::main_with_args(std::env::args().collect());
    std::process::exit(code);
}
