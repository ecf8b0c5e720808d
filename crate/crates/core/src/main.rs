fn main() {
    let code = returnset::cli::main_with_args(std::env::args());
    std::process::exit(code);
}
