fn main() {
    std::process::exit(strauss_scr::cli::main_with_args(std::env::args_os()));
}
