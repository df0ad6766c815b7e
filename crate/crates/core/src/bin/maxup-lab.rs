fn main() {
    std::process::exit(maxup_lab::cli::main_with_args(std::env::args_os()));
}
