fn main() {
    std::process::exit(pilus_cli::main_with(std::env::args_os()));
}
