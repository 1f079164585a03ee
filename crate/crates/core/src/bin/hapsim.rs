fn main() {
    std::process::exit(hapsim::cli::main_with_args(std::env::args_os()));
}
