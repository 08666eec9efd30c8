fn main() {
    std::process::exit(ddnet::cli::main_with_args(std::env::args_os()));
}
