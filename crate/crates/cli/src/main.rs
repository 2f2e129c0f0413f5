fn main() {
    std::process::exit(bbm_cli::run_cli(std::env::args_os()));
}
