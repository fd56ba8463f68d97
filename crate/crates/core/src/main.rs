fn main() {
    std::process::exit(eh_aoi::harness::cli::run_cli(std::env::args_os()));
}
