fn main() {
    std::process::exit(nanofiber::cli::main_with_args(std::env::args_os()));
}
