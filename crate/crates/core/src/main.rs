fn main() {
    std::process::exit(svyfpca::cli::main_with_args(std::env::args_os()));
}
