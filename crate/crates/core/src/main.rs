fn main() {
    std::process::exit(cftransport::cli::main_with_args(std::env::args_os()));
}
