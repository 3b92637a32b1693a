fn main() {
    std::process::exit(edgebatch_cli::run(std::env::args_os()));
}
