fn main() {
    std::process::exit(fqs_core::cli::main_with_args(std::env::args_os()));
}
