fn main() {
    std::process::exit(cscs::cli::main_with_args(std::env::args_os()));
}
