fn main() {
    std::process::exit(ntn_iot::cli::run_cli(std::env::args_os()));
}
