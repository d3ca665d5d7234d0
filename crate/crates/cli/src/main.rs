fn main() {
    std::process::exit(blocksum_cli::run(std::env::args_os()));
}
