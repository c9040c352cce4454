fn main() {
    std::process::exit(saddle_ipm::cli::run_cli(std::env::args_os()));
}
