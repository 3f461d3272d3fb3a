fn main() {
    std::process::exit(spinsplit::cli::main_with_args(std::env::args_os()));
}
