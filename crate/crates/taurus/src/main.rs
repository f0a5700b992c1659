fn main() {
    std::process::exit(taurus::cli::main_with_args(std::env::args_os()));
}
