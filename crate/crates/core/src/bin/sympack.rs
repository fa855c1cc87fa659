fn main() {
    std::process::exit(sympack::cli::execute(std::env::args_os()));
}
