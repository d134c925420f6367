fn main() {
    std::process::exit(hetreg::cli::main_with_args(std::env::args_os()));
}
