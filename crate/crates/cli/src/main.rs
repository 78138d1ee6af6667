fn main() {
    std::process::exit(shocklab_cli::main_with_args(std::env::args_os()));
}
