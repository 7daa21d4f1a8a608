fn main() {
    std::process::exit(plate_afem::cli::main_with_args(std::env::args_os()));
}
