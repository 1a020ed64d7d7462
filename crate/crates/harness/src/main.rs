fn main() {
    std::process::exit(wkam_harness::run_cli(std::env::args_os()));
}
