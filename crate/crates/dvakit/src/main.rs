fn main() {
    std::process::exit(dvakit::cli::main_with_args(std::env::args_os()));
}
