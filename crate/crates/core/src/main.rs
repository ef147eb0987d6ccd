fn main() {
    std::process::exit(calabi_flow::cli::main_with_args(std::env::args_os()));
}
