fn main() {
    std::process::exit(meshstyle::cli::main_with_args(std::env::args_os()));
}
