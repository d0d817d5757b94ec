fn main() {
    std::process::exit(ctgan::cli::main_with(std::env::args_os()));
}
