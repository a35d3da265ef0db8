fn main() {
    std::process::exit(scanforest_cli::run(std::env::args_os()));
}
