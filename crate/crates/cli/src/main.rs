fn main() {
    cav_cli::init_logging();
    std::process::exit(cav_cli::main_with_args(std::env::args_os()));
}
