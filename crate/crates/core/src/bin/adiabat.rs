fn main() {
    std::process::exit(adiabat::cli::main_with_args(std::env::args_os()));
}
