fn main() {
    std::process::exit(quadcurl_core::harness::run_cli(std::env::args_os()));
}
