fn main() {
    std::process::exit(synthnull_cli::main_with_args(std::env::args_os()));
}
