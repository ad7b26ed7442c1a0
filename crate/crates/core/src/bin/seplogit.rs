fn main() {
    std::process::exit(seplogit::cli::main_with(std::env::args_os()));
}
