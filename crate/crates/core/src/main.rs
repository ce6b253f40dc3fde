fn main() {
    std::process::exit(odpo::cli::main_with_args(std::env::args_os()));
}
