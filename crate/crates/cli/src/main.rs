fn main() {
    std::process::exit(packlab_cli::main_with_args(std::env::args_os()));
}
