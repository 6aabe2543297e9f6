fn main() {
    std::process::exit(viscous_hji::cli::main_with_args(std::env::args_os()));
}
